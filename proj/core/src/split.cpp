#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "pcgnet/data_io.hpp"
#include "pcgnet/error.hpp"

namespace pcgnet::data {

namespace {

struct PatientGroup {
  std::string id;
  std::size_t records = 0;
  std::size_t abnormal = 0;
  int label() const { return 2 * abnormal >= records ? 1 : 0; }
};

/// Greedily moves shuffled groups into `chosen` while that brings the record
/// count closer to `target`.
std::vector<const PatientGroup*> pick_towards(std::vector<const PatientGroup*>& pool, double target) {
  std::vector<const PatientGroup*> chosen, rest;
  double count = 0;
  for (const auto* g : pool) {
    const double with = count + static_cast<double>(g->records);
    if (std::abs(with - target) < std::abs(count - target)) {
      chosen.push_back(g);
      count = with;
    } else {
      rest.push_back(g);
    }
  }
  pool = std::move(rest);
  return chosen;
}

}  // namespace

SplitResult patient_split(const std::vector<ManifestEntry>& entries, const SplitOptions& opts) {
  if (!(opts.test_fraction > 0.0 && opts.test_fraction < 1.0))
    throw ValidationError("patient_split: test_fraction must lie in (0, 1)");
  if (!(opts.val_fraction >= 0.0 && opts.val_fraction < 1.0))
    throw ValidationError("patient_split: val_fraction must lie in [0, 1)");

  std::map<std::string, PatientGroup> groups;
  for (const auto& e : entries) {
    if (e.label != 0 && e.label != 1)
      throw ValidationError("patient_split: record '" + e.record_id + "' has label " + std::to_string(e.label));
    auto& g = groups[e.patient_id];
    g.id = e.patient_id;
    ++g.records;
    g.abnormal += e.label == 1 ? 1 : 0;
  }
  if (groups.size() < 3)
    throw ValidationError("patient_split: need at least 3 distinct patients, got " + std::to_string(groups.size()));
  const auto n_abnormal = std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.label == 1; });
  if (n_abnormal == 0 || n_abnormal == static_cast<std::ptrdiff_t>(entries.size()))
    throw ValidationError("patient_split: both classes must be present");

  SplitResult result;
  std::mt19937_64 rng(opts.seed);
  std::map<std::string, Split> patient_split;
  for (int cls : {0, 1}) {
    std::vector<const PatientGroup*> pool;
    std::size_t records = 0;
    for (const auto& [id, g] : groups) {
      if (g.label() != cls) continue;
      pool.push_back(&g);
      records += g.records;
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    for (const auto* g : pick_towards(pool, opts.test_fraction * static_cast<double>(records)))
      patient_split[g->id] = Split::kTest;

    std::size_t train_side = 0;
    for (const auto* g : pool) train_side += g->records;
    const double val_target = std::min<double>(
        static_cast<double>(opts.val_per_class), std::ceil(opts.val_fraction * static_cast<double>(train_side)));
    for (const auto* g : pick_towards(pool, val_target)) patient_split[g->id] = Split::kVal;
    for (const auto* g : pool) patient_split[g->id] = Split::kTrain;
  }

  result.manifest.entries = entries;
  std::size_t n_test = 0, n_val = 0;
  for (const auto& e : entries) {
    const Split s = patient_split.at(e.patient_id);
    result.manifest.split[e.record_id] = s;
    n_test += s == Split::kTest;
    n_val += s == Split::kVal;
  }
  const double total = static_cast<double>(entries.size());
  result.test_share = static_cast<double>(n_test) / total;
  result.val_share = static_cast<double>(n_val) / total;
  if (std::abs(result.test_share - opts.test_fraction) > 0.05) {
    std::ostringstream os;
    os << "test share " << result.test_share << " is more than 0.05 away from " << opts.test_fraction
       << " (patient granularity)";
    result.warnings.push_back(os.str());
  }
  for (Split s : {Split::kVal, Split::kTest}) {
    const auto c = result.manifest.class_counts(s);
    if (c.normal == 0 || c.abnormal == 0)
      result.warnings.push_back(to_string(s) + " split lacks one class");
  }
  return result;
}

}  // namespace pcgnet::data
