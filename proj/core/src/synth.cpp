#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "pcgnet/data_io.hpp"
#include "pcgnet/error.hpp"

namespace pcgnet::data {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Damped sinusoid burst added at sample offset `start`.
void add_burst(std::vector<double>& out, double start_s, double freq_hz, double decay_s, double amplitude, int fs) {
  const auto first = static_cast<std::ptrdiff_t>(std::ceil(start_s * fs));
  const auto len = static_cast<std::ptrdiff_t>(std::ceil(6.0 * decay_s * fs));
  for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(first, 0);
       k < first + len && k < static_cast<std::ptrdiff_t>(out.size()); ++k) {
    const double t = static_cast<double>(k) / fs - start_s;
    out[static_cast<std::size_t>(k)] +=
        amplitude * std::exp(-t / decay_s) * std::sin(2.0 * std::numbers::pi * freq_hz * t);
  }
}

std::vector<std::size_t> patient_sizes(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> size(2, 5);
  std::vector<std::size_t> sizes;
  std::size_t used = 0;
  while (used < n) {
    const std::size_t s = std::min(size(rng), n - used);
    sizes.push_back(s);
    used += s;
  }
  if (sizes.size() > 1 && sizes.back() == 1) {
    auto& prev = sizes[sizes.size() - 2];
    if (prev < 5) {
      ++prev;
      sizes.pop_back();
    } else {
      --prev;
      ++sizes.back();
    }
  }
  return sizes;
}

}  // namespace

void SyntheticSpec::validate() const {
  std::vector<std::string> problems;
  if (n_normal + n_abnormal == 0) problems.push_back("n_normal + n_abnormal must be positive");
  if (sample_rate_hz <= 0) problems.push_back("sample_rate_hz must be positive");
  if (!(min_duration_s > 0 && max_duration_s >= min_duration_s)) problems.push_back("invalid duration range");
  if (!(min_heart_rate_bpm > 0 && max_heart_rate_bpm >= min_heart_rate_bpm))
    problems.push_back("invalid heart-rate range");
  for (double j : {normal_jitter, abnormal_jitter})
    if (!(j >= 0 && j <= 1)) problems.push_back("jitter fractions must lie in [0, 1]");
  for (double p : {drop_probability, extra_probability})
    if (!(p >= 0 && p < 1)) problems.push_back("beat drop/extra probabilities must lie in [0, 1)");
  if (!(noise_sigma >= 0)) problems.push_back("noise_sigma must be non-negative");
  if (!problems.empty()) {
    std::string msg = "invalid synthetic spec:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
}

SyntheticRecord synthesize_record(const std::string& record_id, const std::string& patient_id, int label,
                                  double jitter, double drop_probability, double extra_probability,
                                  const SyntheticSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const int fs = spec.sample_rate_hz;
  const double duration = uniform(spec.min_duration_s, spec.max_duration_s);
  const double interval = 60.0 / uniform(spec.min_heart_rate_bpm, spec.max_heart_rate_bpm);
  const double s1_freq = uniform(60.0, 90.0);
  const double s2_freq = uniform(100.0, 150.0);
  const double s2_delay = 0.3 * std::sqrt(interval);

  SyntheticRecord rec;
  rec.entry = {record_id, patient_id, label, {}, seed};
  rec.waveform.sample_rate_hz = fs;
  rec.waveform.source_id = record_id;
  rec.waveform.patient_id = patient_id;
  auto& x = rec.waveform.samples;
  x.assign(static_cast<std::size_t>(std::llround(duration * fs)), 0.0);

  auto beat = [&](double t) {
    const double gain = uniform(0.9, 1.1);
    add_burst(x, t, s1_freq, 0.015, 0.5 * gain, fs);
    add_burst(x, t + s2_delay, s2_freq, 0.012, 0.35 * gain, fs);
    rec.beat_times_s.push_back(t);
  };

  for (double t = uniform(0.0, interval); t < duration;) {
    const double next = interval * std::clamp(1.0 + jitter * gauss(rng), 0.4, 1.8);
    if (drop_probability == 0.0 || unit(rng) >= drop_probability) beat(t);
    if (extra_probability > 0.0 && unit(rng) < extra_probability) {
      const double extra = t + uniform(0.35, 0.6) * next;
      if (extra < duration) beat(extra);
    }
    t += next;
  }
  std::sort(rec.beat_times_s.begin(), rec.beat_times_s.end());
  for (double& v : x) v += spec.noise_sigma * gauss(rng);
  return rec;
}

std::vector<SyntheticRecord> synthesize_dataset(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 layout(spec.seed);
  std::vector<SyntheticRecord> out;
  std::size_t patient = 0, index = 0;
  for (int label : {0, 1}) {
    const std::size_t n = label == 0 ? spec.n_normal : spec.n_abnormal;
    for (std::size_t size : patient_sizes(n, layout)) {
      char pid[32];
      std::snprintf(pid, sizeof pid, "p%04zu", ++patient);
      for (std::size_t k = 1; k <= size; ++k, ++index) {
        const std::string rid = std::string(pid) + "_" + std::to_string(k);
        const std::uint64_t seed = splitmix64(spec.seed ^ splitmix64(index + 1));
        if (label == 0)
          out.push_back(synthesize_record(rid, pid, 0, spec.normal_jitter, 0.0, 0.0, spec, seed));
        else
          out.push_back(synthesize_record(rid, pid, 1, spec.abnormal_jitter, spec.drop_probability,
                                          spec.extra_probability, spec, seed));
      }
    }
  }
  return out;
}

void write_dataset_dir(const fs::path& dir, const std::vector<SyntheticRecord>& records) {
  fs::create_directories(dir);
  std::ofstream ref(dir / "REFERENCE.csv", std::ios::trunc);
  std::ofstream pat(dir / "PATIENTS.csv", std::ios::trunc);
  if (!ref || !pat) throw InputError("cannot write label files in " + dir.string());
  for (const auto& r : records) {
    write_wav(dir / (r.entry.record_id + ".wav"), r.waveform);
    ref << r.entry.record_id << ',' << (r.entry.label == 1 ? "1" : "-1") << '\n';
    pat << r.entry.record_id << ',' << r.entry.patient_id << '\n';
  }
}

}  // namespace pcgnet::data
