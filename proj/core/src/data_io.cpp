#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pcgnet/data_io.hpp"
#include "pcgnet/error.hpp"

namespace pcgnet::data {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  const char* ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  const auto end = s.find_last_not_of(ws);
  s.erase(end == std::string::npos ? 0 : end + 1);
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
std::uint16_t read_u16(const unsigned char* p) { return std::uint16_t(p[0] | p[1] << 8); }

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

std::vector<ReferenceRow> load_reference_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open reference file " + path.string());
  std::vector<ReferenceRow> rows;
  std::set<std::string> seen;
  std::string line;
  for (std::size_t lineno = 1; std::getline(is, line); ++lineno) {
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    const std::string where = path.string() + " line " + std::to_string(lineno);
    if (cells.size() != 2 || cells[0].empty()) throw InputError(where + ": expected 'record_id,label'");
    int label;
    if (cells[1] == "-1") label = 0;
    else if (cells[1] == "1") label = 1;
    else throw InputError(where + ": unknown label '" + cells[1] + "' (expected -1 or 1)");
    if (!seen.insert(cells[0]).second) throw InputError(where + ": duplicate record_id '" + cells[0] + "'");
    rows.push_back({cells[0], label});
  }
  return rows;
}

std::map<std::string, std::string> load_patients_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open patient file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(is, line); ++lineno) {
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    const std::string where = path.string() + " line " + std::to_string(lineno);
    if (cells.size() != 2 || cells[0].empty() || cells[1].empty())
      throw InputError(where + ": expected 'record_id,patient_id'");
    if (!out.emplace(cells[0], cells[1]).second)
      throw InputError(where + ": duplicate record_id '" + cells[0] + "'");
  }
  return out;
}

Waveform load_wav(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::string name = path.string();
  if (bytes.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw InputError(name + ": not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(p + pos + 4);
    const unsigned char* body = p + pos + 8;
    const std::size_t avail = bytes.size() - pos - 8;
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (size < 16 || avail < 16) throw InputError(name + ": truncated fmt chunk");
      format = read_u16(body);
      channels = read_u16(body + 2);
      rate = read_u32(body + 4);
      bits = read_u16(body + 14);
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      data = body;
      data_size = std::min<std::size_t>(size, avail);
      break;
    }
    pos += 8 + size + (size & 1u);
  }
  if (!have_fmt) throw InputError(name + ": missing fmt chunk");
  if (data == nullptr) throw InputError(name + ": missing data chunk");
  if (format != 1) throw InputError(name + ": audio_format=" + std::to_string(format) + " unsupported (need 1, PCM)");
  if (channels != 1) throw InputError(name + ": num_channels=" + std::to_string(channels) + " unsupported (need 1)");
  if (bits != 16) throw InputError(name + ": bits_per_sample=" + std::to_string(bits) + " unsupported (need 16)");
  if (rate != 2000)
    throw InputError(name + ": sample_rate=" + std::to_string(rate) + " Hz unsupported (need 2000 Hz; no resampling)");

  Waveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  w.source_id = path.stem().string();
  w.samples.resize(data_size / 2);
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    w.samples[i] = static_cast<std::int16_t>(read_u16(data + 2 * i)) / 32768.0;
  return w;
}

void write_wav(const fs::path& path, const Waveform& w) {
  if (w.sample_rate_hz <= 0) throw ValidationError("write_wav: sample rate must be positive");
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  std::string out;
  out.reserve(44 + 2 * n);
  out += "RIFF";
  put_u32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, 2 * n);
  for (double s : w.samples) {
    const double q = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot write " + path.string());
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw InputError("write failed for " + path.string());
}

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ValidationError("unknown split '" + s + "'");
}

ClassCounts DatasetManifest::class_counts(Split s) const {
  ClassCounts c;
  for (const auto& e : entries) {
    auto it = split.find(e.record_id);
    if (it == split.end() || it->second != s) continue;
    (e.label == 1 ? c.abnormal : c.normal)++;
  }
  return c;
}

std::vector<const ManifestEntry*> DatasetManifest::in_split(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    auto it = split.find(e.record_id);
    if (it != split.end() && it->second == s) out.push_back(&e);
  }
  return out;
}

void DatasetManifest::validate() const {
  std::map<std::string, Split> patient_split;
  std::set<std::string> ids;
  for (const auto& e : entries) {
    if (e.label != 0 && e.label != 1)
      throw ValidationError("manifest: record '" + e.record_id + "' has label " + std::to_string(e.label));
    if (!ids.insert(e.record_id).second) throw ValidationError("manifest: duplicate record '" + e.record_id + "'");
    auto it = split.find(e.record_id);
    if (it == split.end()) throw ValidationError("manifest: record '" + e.record_id + "' has no split");
    auto [pit, fresh] = patient_split.emplace(e.patient_id, it->second);
    if (!fresh && pit->second != it->second)
      throw ValidationError("manifest: patient '" + e.patient_id + "' appears in both " + to_string(pit->second) +
                            " and " + to_string(it->second));
  }
  if (split.size() != entries.size()) throw ValidationError("manifest: split map names unknown records");
}

std::string DatasetManifest::to_json() const {
  json j;
  j["entries"] = json::array();
  for (const auto& e : entries) {
    json row = {{"record_id", e.record_id}, {"patient_id", e.patient_id}, {"label", e.label}, {"path", e.path}};
    if (e.seed) row["seed"] = *e.seed;
    auto it = split.find(e.record_id);
    if (it != split.end()) row["split"] = to_string(it->second);
    j["entries"].push_back(row);
  }
  json counts;
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    const auto c = class_counts(s);
    counts[to_string(s)] = {{"normal", c.normal}, {"abnormal", c.abnormal}};
  }
  j["class_counts"] = counts;
  return j.dump(2);
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  DatasetManifest m;
  try {
    const json j = json::parse(text);
    for (const auto& row : j.at("entries")) {
      ManifestEntry e;
      e.record_id = row.at("record_id").get<std::string>();
      e.patient_id = row.at("patient_id").get<std::string>();
      e.label = row.at("label").get<int>();
      e.path = row.value("path", std::string{});
      if (row.contains("seed")) e.seed = row.at("seed").get<std::uint64_t>();
      if (row.contains("split")) m.split[e.record_id] = parse_split(row.at("split").get<std::string>());
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("manifest: ") + e.what());
  }
  return m;
}

std::string patient_from_record_id(const std::string& record_id) {
  const auto cut = record_id.find('_');
  return cut == std::string::npos || cut == 0 ? record_id : record_id.substr(0, cut);
}

DatasetListing scan_dataset_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  std::map<std::string, fs::path> wavs;
  for (const auto& de : fs::directory_iterator(dir)) {
    if (de.is_regular_file() && de.path().extension() == ".wav") wavs[de.path().stem().string()] = de.path();
  }
  const fs::path ref = dir / "REFERENCE.csv";
  if (wavs.empty() && !fs::exists(ref)) throw InputError("no records found in " + dir.string());
  if (!fs::exists(ref)) throw InputError("missing REFERENCE.csv in " + dir.string());

  DatasetListing out;
  std::map<std::string, std::string> patients;
  const fs::path pat = dir / "PATIENTS.csv";
  if (fs::exists(pat)) {
    patients = load_patients_csv(pat);
  } else {
    out.patient_prefix_fallback = true;
    out.log.push_back("PATIENTS.csv absent; patient_id taken from the record_id prefix");
  }

  std::map<std::string, int> labels;
  for (auto& row : load_reference_csv(ref)) labels[row.record_id] = row.label;
  for (const auto& [id, label] : labels) {
    auto w = wavs.find(id);
    if (w == wavs.end()) {
      ++out.missing_audio;
      out.log.push_back("reference row '" + id + "' has no audio file; skipped");
      continue;
    }
    ManifestEntry e;
    e.record_id = id;
    e.label = label;
    e.path = w->second.string();
    if (out.patient_prefix_fallback) {
      e.patient_id = patient_from_record_id(id);
    } else {
      auto p = patients.find(id);
      if (p == patients.end()) throw InputError("PATIENTS.csv has no row for record '" + id + "'");
      e.patient_id = p->second;
    }
    out.entries.push_back(std::move(e));
  }
  for (const auto& [id, path] : wavs)
    if (!labels.count(id)) ++out.skipped_unannotated;
  if (out.skipped_unannotated > 0)
    out.log.push_back("skipped " + std::to_string(out.skipped_unannotated) + " unannotated recording(s)");
  if (out.entries.empty()) throw InputError("no records found in " + dir.string());
  return out;
}

RecordingPrediction aggregate_recording(std::span<const double> probs, double tau, AggregateMode mode) {
  if (probs.empty()) throw ValidationError("aggregate_recording: no clip probabilities");
  RecordingPrediction r;
  if (mode == AggregateMode::kMax) {
    r.probability = *std::max_element(probs.begin(), probs.end());
  } else {
    double sum = 0;
    for (double p : probs) sum += p;
    r.probability = sum / static_cast<double>(probs.size());
  }
  r.label = r.probability >= tau ? 1 : 0;
  return r;
}

mel::MelSpectrogram cached_log_mel(const fs::path& cache_file, const Waveform& clip, const mel::MelConfig& cfg) {
  const std::string want = cfg.fingerprint(clip.sample_rate_hz);
  if (fs::exists(cache_file)) {
    try {
      if (mel::read_spectrogram_header(cache_file).config_fingerprint == want) {
        auto spec = mel::read_spectrogram(cache_file);
        if (spec.config_fingerprint == want) return spec;
      }
    } catch (const InputError&) {
      // unreadable cache entries are recomputed
    }
  }
  auto spec = mel::log_mel(clip, cfg);
  mel::write_spectrogram(cache_file, spec);
  return spec;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::size_t default_threads() {
  if (const char* env = std::getenv("PCGNET_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<mel::MelSpectrogram> build_features(const std::vector<ManifestEntry>& entries,
                                                const std::function<Waveform(std::size_t)>& load,
                                                const FeatureOptions& opts) {
  std::optional<fs::path> cache;
  if (opts.cache_dir) {
    cache = *opts.cache_dir / opts.preprocess.tag();
    fs::create_directories(*cache);
  }
  std::vector<std::vector<mel::MelSpectrogram>> per_record(entries.size());
  parallel_for(entries.size(), opts.threads, [&](std::size_t i) {
    const auto& e = entries[i];
    Waveform raw = load(i);
    raw.source_id = e.record_id;
    raw.patient_id = e.patient_id;
    const Waveform clean = dsp::denoise_recording(raw, opts.preprocess);
    const auto clips = dsp::segment_fixed(clean, opts.preprocess.clip_seconds);
    for (std::size_t k = 0; k < clips.size(); ++k) {
      mel::MelSpectrogram spec =
          cache ? cached_log_mel(*cache / (e.record_id + "_" + std::to_string(k) + ".mel"),
                                          clips[k], opts.mel)
                         : mel::log_mel(clips[k], opts.mel);
      spec.source_id = e.record_id;
      spec.patient_id = e.patient_id;
      spec.label = e.label;
      per_record[i].push_back(std::move(spec));
    }
  });
  std::vector<mel::MelSpectrogram> out;
  for (auto& v : per_record)
    for (auto& s : v) out.push_back(std::move(s));
  return out;
}

}  // namespace pcgnet::data
