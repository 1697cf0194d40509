#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcgnet/features_mel.hpp"
#include "pcgnet/signal_dsp.hpp"
#include "pcgnet/waveform.hpp"

namespace pcgnet::data {

struct ReferenceRow {
  std::string record_id;
  int label = 0;  // 0 normal, 1 abnormal
};

/// Rows "record_id,label" with label -1 (normal) or 1 (abnormal).
std::vector<ReferenceRow> load_reference_csv(const std::filesystem::path& path);

/// Rows "record_id,patient_id".
std::map<std::string, std::string> load_patients_csv(const std::filesystem::path& path);

/// RIFF/WAVE, PCM 16-bit, mono, 2000 Hz. Samples are int16 / 32768.
Waveform load_wav(const std::filesystem::path& path);

/// Writes PCM16 mono; samples are scaled by 32768, rounded and clipped.
void write_wav(const std::filesystem::path& path, const Waveform& w);

enum class Split { kTrain, kVal, kTest };
std::string to_string(Split s);
Split parse_split(const std::string& s);

struct ManifestEntry {
  std::string record_id;
  std::string patient_id;
  int label = 0;
  std::string path;                    // empty for in-memory synthetic records
  std::optional<std::uint64_t> seed;   // synthetic generator seed
};

struct ClassCounts {
  std::size_t normal = 0, abnormal = 0;
  std::size_t total() const { return normal + abnormal; }
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::map<std::string, Split> split;

  ClassCounts class_counts(Split s) const;
  std::vector<const ManifestEntry*> in_split(Split s) const;
  /// Throws ValidationError on unknown labels, unassigned records, or a
  /// patient present in more than one split.
  void validate() const;

  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);
};

/// Directory scan result: <id>.wav files joined with REFERENCE.csv (and
/// PATIENTS.csv when present), ordered by record_id.
struct DatasetListing {
  std::vector<ManifestEntry> entries;
  std::size_t skipped_unannotated = 0;
  std::size_t missing_audio = 0;
  bool patient_prefix_fallback = false;
  std::vector<std::string> log;
};

DatasetListing scan_dataset_dir(const std::filesystem::path& dir);

/// Patient id used when PATIENTS.csv is absent: record_id up to the first '_'.
std::string patient_from_record_id(const std::string& record_id);

struct SplitOptions {
  double test_fraction = 0.2;
  std::size_t val_per_class = 250;
  double val_fraction = 0.25;  // cap relative to the train-side class size
  std::uint64_t seed = 0;
};

struct SplitResult {
  DatasetManifest manifest;
  double test_share = 0;  // achieved share of records in test
  double val_share = 0;
  std::vector<std::string> warnings;
};

/// Patient-grouped, class-stratified split. Validation patients are drawn
/// from the training side.
SplitResult patient_split(const std::vector<ManifestEntry>& entries, const SplitOptions& opts);

enum class AggregateMode { kMean, kMax };

struct RecordingPrediction {
  double probability = 0;
  int label = 0;
};

RecordingPrediction aggregate_recording(std::span<const double> clip_probabilities, double tau,
                                        AggregateMode mode = AggregateMode::kMean);

// ---------------------------------------------------------------------------
// Synthetic heart-sound datasets
// ---------------------------------------------------------------------------

struct SyntheticSpec {
  std::size_t n_normal = 174;
  std::size_t n_abnormal = 26;
  int sample_rate_hz = 2000;
  double min_duration_s = 10.0;
  double max_duration_s = 15.0;
  double min_heart_rate_bpm = 60.0;
  double max_heart_rate_bpm = 100.0;
  double normal_jitter = 0.03;
  double abnormal_jitter = 0.4;
  double drop_probability = 0.2;
  double extra_probability = 0.2;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticRecord {
  ManifestEntry entry;
  Waveform waveform;
  std::vector<double> beat_times_s;  // onsets of emitted S1 sounds
};

/// One record with explicit rhythm settings (used by the dataset generator).
SyntheticRecord synthesize_record(const std::string& record_id, const std::string& patient_id, int label,
                                  double jitter, double drop_probability, double extra_probability,
                                  const SyntheticSpec& spec, std::uint64_t seed);

/// Records ordered normal-first; each synthetic patient owns 2 to 5 records of one class.
std::vector<SyntheticRecord> synthesize_dataset(const SyntheticSpec& spec);

/// Writes <id>.wav files, REFERENCE.csv and PATIENTS.csv.
void write_dataset_dir(const std::filesystem::path& dir, const std::vector<SyntheticRecord>& records);

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

struct FeatureOptions {
  dsp::PreprocessConfig preprocess;
  mel::MelConfig mel;
  /// Entries live under cache_dir/<preprocess tag>/.
  std::optional<std::filesystem::path> cache_dir;
  std::size_t threads = 1;
};

/// Cached spectrogram if its fingerprint matches `cfg`, otherwise recomputed
/// from `clip` and written back atomically.
mel::MelSpectrogram cached_log_mel(const std::filesystem::path& cache_file, const Waveform& clip,
                                   const mel::MelConfig& cfg);

/// Denoise -> segment -> log-mel for each record, in input order.
/// `load` supplies the raw waveform of entry i.
std::vector<mel::MelSpectrogram> build_features(const std::vector<ManifestEntry>& entries,
                                                const std::function<Waveform(std::size_t)>& load,
                                                const FeatureOptions& opts);

/// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first error.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Default worker count: PCGNET_THREADS when set, else hardware concurrency.
std::size_t default_threads();

}  // namespace pcgnet::data
