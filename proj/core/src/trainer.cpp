#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "pcgnet/error.hpp"
#include "pcgnet/trainer.hpp"

namespace pcgnet::train {

using model::HInfModel;

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  if (epochs == 0) problems.push_back("epochs must be positive");
  if (batch_size == 0) problems.push_back("batch_size must be positive");
  if (!(fixed_tau >= 0.0 && fixed_tau <= 1.0)) problems.push_back("fixed_tau must lie in [0, 1]");
  if (!(adam.lr >= 0.0)) problems.push_back("learning rate must be non-negative");
  try {
    pwl.validate();
  } catch (const ValidationError& e) {
    problems.push_back(e.what());
  }
  try {
    threshold.validate();
  } catch (const ValidationError& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
}

std::vector<double> labels_of(const ClipSet& clips) {
  std::vector<double> y;
  y.reserve(clips.size());
  for (const auto* c : clips) {
    if (c->label != 0 && c->label != 1)
      throw ValidationError("clip from '" + c->source_id + "' has no 0/1 label");
    y.push_back(c->label);
  }
  return y;
}

std::vector<double> predict(const HInfModel& model, const ClipSet& clips, std::size_t batch_size,
                            std::size_t threads) {
  if (batch_size == 0) throw ValidationError("predict: batch_size must be positive");
  std::vector<double> scores(clips.size());
  const std::size_t n_batches = (clips.size() + batch_size - 1) / batch_size;
  data::parallel_for(n_batches, threads, [&](std::size_t b) {
    const std::size_t lo = b * batch_size, hi = std::min(clips.size(), lo + batch_size);
    const ClipSet batch(clips.begin() + static_cast<std::ptrdiff_t>(lo), clips.begin() + static_cast<std::ptrdiff_t>(hi));
    ad::Tape tape(false);
    const auto out = model.forward(tape, model.pack(batch), batch.size(), ad::NormMode::kEval).value();
    std::copy(out.begin(), out.end(), scores.begin() + static_cast<std::ptrdiff_t>(lo));
  });
  return scores;
}

EvalReport evaluate_scores(const ClipSet& clips, const std::vector<double>& scores, double tau,
                           data::AggregateMode mode) {
  if (clips.empty()) throw ValidationError("evaluate: no clips");
  if (scores.size() != clips.size()) throw ValidationError("evaluate: one score per clip required");
  const auto labels = labels_of(clips);
  EvalReport r;
  r.tau = tau;
  r.n_clips = clips.size();
  r.clip_counts = confusion(scores, labels, tau);
  r.clip = compute_metrics(r.clip_counts);

  std::map<std::string, std::pair<std::vector<double>, int>> records;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    auto& rec = records[clips[i]->source_id];
    rec.first.push_back(scores[i]);
    rec.second = clips[i]->label;
  }
  std::vector<double> rec_scores, rec_labels;
  for (const auto& [id, rec] : records) {
    rec_scores.push_back(data::aggregate_recording(rec.first, tau, mode).probability);
    rec_labels.push_back(rec.second);
  }
  r.n_recordings = records.size();
  r.recording_counts = confusion(rec_scores, rec_labels, tau);
  r.recording = compute_metrics(r.recording_counts);
  return r;
}

EvalReport evaluate(const HInfModel& model, const ClipSet& clips, double tau, data::AggregateMode mode,
                    std::size_t threads) {
  return evaluate_scores(clips, predict(model, clips, 64, threads), tau, mode);
}

TrainReport train(HInfModel& model, const ClipSet& train_set, const ClipSet& val_set, const TrainConfig& cfg,
                  const ClipSet* test_set, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw ValidationError("train: empty training set");
  if (val_set.empty()) throw ValidationError("train: empty validation set");
  const auto train_labels = labels_of(train_set);
  const auto val_labels = labels_of(val_set);

  Adam adam(model.parameters(), cfg.adam);
  ThresholdOptions topts = cfg.threshold;
  topts.initial_tau = cfg.adaptive_threshold ? topts.initial_tau : cfg.fixed_tau;
  topts.seed = cfg.seed ^ 0x5a5a5a5aULL;
  ThresholdScheduler scheduler(topts);

  TrainReport report;
  report.conv_frozen = model.conv_frozen();
  for (const auto& p : model.parameters())
    if (!p->trainable) report.frozen_parameters.push_back(p->name);

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double delta = cfg.pwl.delta_source == DeltaSource::kFixed ? cfg.pwl.fixed_delta : scheduler.tau();
    double loss_sum = 0, penalty_sum = 0;
    std::size_t n_batches = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size, ++n_batches) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      ClipSet batch;
      std::vector<double> y;
      for (std::size_t k = lo; k < hi; ++k) {
        batch.push_back(train_set[order[k]]);
        y.push_back(train_labels[order[k]]);
      }
      try {
        ad::Tape tape;
        ad::Var y_hat = model.forward(tape, model.pack(batch), batch.size(), ad::NormMode::kTrain);
        ad::Var loss;
        double penalty = 1.0;
        if (cfg.use_pwl) {
          auto pwl = pwl_loss(y_hat, y, cfg.pwl, delta);
          loss = pwl.loss;
          penalty = pwl.penalty;
        } else {
          loss = bce_loss(y_hat, y);
        }
        const double value = loss.item();
        if (!std::isfinite(value)) throw NumericError("non-finite loss");
        adam.zero_grad();
        tape.backward(loss);
        adam.step();
        loss_sum += value;
        penalty_sum += penalty;
      } catch (const NumericError& e) {
        throw NumericError("training aborted at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(n_batches + 1) + ": " + e.what());
      }
    }

    EpochRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(n_batches);
    row.train_loss_ewma = report.epochs.empty()
                              ? row.train_loss
                              : topts.beta_ewma * row.train_loss +
                                    (1.0 - topts.beta_ewma) * report.epochs.back().train_loss_ewma;
    row.mean_penalty = penalty_sum / static_cast<double>(n_batches);
    const auto scores = predict(model, val_set, 64, cfg.threads);
    if (cfg.adaptive_threshold) scheduler.update(scores, val_labels, static_cast<int>(epoch));
    row.tau = scheduler.tau();
    row.val = compute_metrics(confusion(scores, val_labels, row.tau));
    report.epochs.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  report.final_tau = scheduler.tau();
  if (test_set != nullptr && !test_set->empty())
    report.test = evaluate(model, *test_set, report.final_tau, data::AggregateMode::kMean, cfg.threads);
  return report;
}

}  // namespace pcgnet::train
