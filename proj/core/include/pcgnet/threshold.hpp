#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace pcgnet::train {

/// Candidate thresholds 0.05, 0.10, ..., 0.95.
std::vector<double> default_threshold_grid();

struct ThresholdOptions {
  std::vector<double> grid = default_threshold_grid();
  double beta_ewma = 0.3;    // weight of the newest F1 observation
  int gamma_interval = 10;   // epochs between threshold commits
  double initial_tau = 0.5;
  double subsample_fraction = 1.0;  // share of the validation set scored per update
  std::uint64_t seed = 0;

  void validate() const;
};

/// Adaptive decision threshold: every epoch each candidate's validation F1 is
/// folded into a per-candidate exponentially weighted average; every
/// gamma_interval epochs the operating threshold jumps to the candidate with
/// the best smoothed F1 (ties go to the smaller threshold).
class ThresholdScheduler {
 public:
  explicit ThresholdScheduler(ThresholdOptions opts = {});

  /// Scores the candidates on (scores, labels); commits a new threshold when
  /// `epoch` (1-based) is a multiple of gamma_interval. Returns true when the
  /// operating threshold was (re)committed. Throws ValidationError unless both
  /// classes are present.
  bool update(std::span<const double> scores, std::span<const double> labels, int epoch);

  /// Sets the operating threshold to the smoothed-F1 argmax.
  void commit();

  double tau() const { return tau_; }
  const std::vector<double>& grid() const { return opts_.grid; }
  const std::vector<std::optional<double>>& smoothed_f1() const { return smoothed_; }
  void set_smoothed_f1(std::vector<std::optional<double>> values);
  const ThresholdOptions& options() const { return opts_; }

 private:
  ThresholdOptions opts_;
  std::vector<std::optional<double>> smoothed_;
  double tau_;
  std::mt19937_64 rng_;
};

}  // namespace pcgnet::train
