#include <algorithm>
#include <numeric>

#include "pcgnet/error.hpp"
#include "pcgnet/metrics.hpp"
#include "pcgnet/threshold.hpp"

namespace pcgnet::train {

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int j = 1; j <= 19; ++j) grid.push_back(j / 20.0);
  return grid;
}

void ThresholdOptions::validate() const {
  if (grid.empty()) throw ValidationError("threshold grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.0 || grid[i] > 1.0) throw ValidationError("threshold candidates must lie in [0, 1]");
    if (i > 0 && grid[i] <= grid[i - 1]) throw ValidationError("threshold grid must be strictly increasing");
  }
  if (!(beta_ewma > 0.0 && beta_ewma <= 1.0)) throw ValidationError("beta_ewma must lie in (0, 1]");
  if (gamma_interval < 1) throw ValidationError("gamma_interval must be at least 1");
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0))
    throw ValidationError("subsample_fraction must lie in (0, 1]");
}

ThresholdScheduler::ThresholdScheduler(ThresholdOptions opts)
    : opts_(std::move(opts)), tau_(opts_.initial_tau), rng_(opts_.seed) {
  opts_.validate();
  smoothed_.assign(opts_.grid.size(), std::nullopt);
}

void ThresholdScheduler::set_smoothed_f1(std::vector<std::optional<double>> values) {
  if (values.size() != opts_.grid.size())
    throw ValidationError("set_smoothed_f1: expected one value per candidate");
  smoothed_ = std::move(values);
}

bool ThresholdScheduler::update(std::span<const double> scores, std::span<const double> labels, int epoch) {
  if (scores.size() != labels.size()) throw ValidationError("threshold update: scores/labels size mismatch");
  if (scores.empty()) throw ValidationError("threshold update: empty validation set");

  std::vector<std::size_t> picked(scores.size());
  std::iota(picked.begin(), picked.end(), 0);
  if (opts_.subsample_fraction < 1.0) {
    std::shuffle(picked.begin(), picked.end(), rng_);
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(opts_.subsample_fraction * static_cast<double>(scores.size())));
    picked.resize(keep);
    std::sort(picked.begin(), picked.end());
  }
  std::vector<double> s, y;
  for (auto i : picked) {
    s.push_back(scores[i]);
    y.push_back(labels[i]);
  }
  const auto positives = std::count(y.begin(), y.end(), 1.0);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(y.size()))
    throw ValidationError("threshold update: validation set must contain both classes (F1 undefined otherwise)");

  for (std::size_t j = 0; j < opts_.grid.size(); ++j) {
    const double f1 = compute_metrics(confusion(s, y, opts_.grid[j])).f1;
    smoothed_[j] = smoothed_[j] ? opts_.beta_ewma * f1 + (1.0 - opts_.beta_ewma) * *smoothed_[j] : f1;
  }
  if (epoch % opts_.gamma_interval == 0) {
    commit();
    return true;
  }
  return false;
}

void ThresholdScheduler::commit() {
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < smoothed_.size(); ++j) {
    if (!smoothed_[j]) continue;
    if (!best || *smoothed_[j] > *smoothed_[*best]) best = j;
  }
  if (best) tau_ = opts_.grid[*best];
}

}  // namespace pcgnet::train
