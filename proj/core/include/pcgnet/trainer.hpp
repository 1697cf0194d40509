#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pcgnet/data_io.hpp"
#include "pcgnet/features_mel.hpp"
#include "pcgnet/losses.hpp"
#include "pcgnet/metrics.hpp"
#include "pcgnet/model.hpp"
#include "pcgnet/optimizer.hpp"
#include "pcgnet/threshold.hpp"

namespace pcgnet::train {

using ClipSet = std::vector<const mel::MelSpectrogram*>;

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  bool use_pwl = true;             // false: plain BCE
  PwlConfig pwl;
  bool adaptive_threshold = true;  // false: tau stays at fixed_tau
  double fixed_tau = 0.5;
  ThresholdOptions threshold;
  AdamOptions adam;
  std::size_t threads = 1;         // validation scoring workers

  void validate() const;
};

struct EpochRow {
  std::size_t epoch = 0;
  double train_loss = 0;
  double train_loss_ewma = 0;
  double mean_penalty = 1;
  Metrics val;
  double tau = 0.5;  // operating threshold after this epoch's update
};

struct EvalReport {
  double tau = 0.5;
  ConfusionCounts clip_counts;
  Metrics clip;
  ConfusionCounts recording_counts;
  Metrics recording;
  std::size_t n_clips = 0;
  std::size_t n_recordings = 0;
};

struct TrainReport {
  std::vector<EpochRow> epochs;
  double final_tau = 0.5;
  bool conv_frozen = false;
  std::vector<std::string> frozen_parameters;
  std::optional<EvalReport> test;
};

/// Clip probabilities in input order; eval-mode batch norm.
std::vector<double> predict(const model::HInfModel& model, const ClipSet& clips, std::size_t batch_size = 64,
                            std::size_t threads = 1);

std::vector<double> labels_of(const ClipSet& clips);

/// Clip-level metrics plus recording-level metrics (clips grouped by source_id).
EvalReport evaluate_scores(const ClipSet& clips, const std::vector<double>& scores, double tau,
                           data::AggregateMode mode = data::AggregateMode::kMean);

EvalReport evaluate(const model::HInfModel& model, const ClipSet& clips, double tau,
                    data::AggregateMode mode = data::AggregateMode::kMean, std::size_t threads = 1);

using EpochCallback = std::function<void(const EpochRow&)>;

/// Seeded mini-batch training with PWL (or BCE), Adam, and end-of-epoch
/// threshold updates on the validation clips. The test set, when given, is
/// evaluated once after the last epoch at the final threshold.
TrainReport train(model::HInfModel& model, const ClipSet& train_set, const ClipSet& val_set,
                  const TrainConfig& cfg, const ClipSet* test_set = nullptr, const EpochCallback& on_epoch = {});

}  // namespace pcgnet::train
