#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcgnet/checkpoint.hpp"
#include "pcgnet/data_io.hpp"
#include "pcgnet/error.hpp"
#include "pcgnet/features_mel.hpp"
#include "pcgnet/model.hpp"
#include "pcgnet/report.hpp"
#include "pcgnet/signal_dsp.hpp"
#include "pcgnet/trainer.hpp"
#include "pcgnet_cli/cli.hpp"

namespace pcgnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(is, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(path + " line " + std::to_string(lineno) + ": expected key = value");
    auto strip = [](std::string s) {
      const char* ws = " \t\r";
      s.erase(0, s.find_first_not_of(ws));
      const auto end = s.find_last_not_of(ws);
      s.erase(end == std::string::npos ? 0 : end + 1);
      return s;
    };
    const std::string key = strip(line.substr(0, eq));
    if (key.empty()) throw InputError(path + " line " + std::to_string(lineno) + ": empty key");
    out[key] = strip(line.substr(eq + 1));
  }
  return out;
}

namespace {

template <class T>
bool parse_value(const std::string& text, T& out) {
  if constexpr (std::is_same_v<T, std::string>) {
    out = text;
    return true;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return out = true, true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return out = false, true;
    return false;
  } else if constexpr (std::is_floating_point_v<T>) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || *end != '\0') return false;
    out = static_cast<T>(v);
    return true;
  } else {
    const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc() && res.ptr == text.data() + text.size();
  }
}

template <class T>
std::string show(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
  }
}

/// Binds settings to both a command-line flag and a config-file key; explicit
/// flags win over the file.
class Settings {
 public:
  explicit Settings(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& key, T& var, const std::string& desc) {
    const std::string flag = "--" + dashed(key);
    CLI::Option* opt;
    if constexpr (std::is_same_v<T, bool>)
      opt = app_->add_flag(flag, var, desc);
    else
      opt = app_->add_option(flag, var, desc)->capture_default_str();
    entries_.push_back({key, opt, [&var](const std::string& s) { return parse_value(s, var); },
                        [&var] { return show(var); }});
    return opt;
  }

  void apply(const std::map<std::string, std::string>& file, std::vector<std::string>& problems) {
    std::set<std::string> known;
    for (auto& e : entries_) {
      known.insert(e.key);
      auto it = file.find(e.key);
      if (it == file.end() || e.opt->count() > 0) continue;
      if (!e.set(it->second)) problems.push_back("config key '" + e.key + "': cannot parse '" + it->second + "'");
    }
    for (const auto& [key, value] : file)
      if (!known.count(key)) problems.push_back("config key '" + key + "' is not recognised by this command");
  }

  std::string resolved() const {
    std::ostringstream os;
    for (const auto& e : entries_)
      if (e.key != "out") os << e.key << " = " << e.get() << '\n';
    return os.str();
  }

 private:
  static std::string dashed(std::string key) {
    for (char& c : key)
      if (c == '_') c = '-';
    return key;
  }

  struct Entry {
    std::string key;
    CLI::Option* opt;
    std::function<bool(const std::string&)> set;
    std::function<std::string()> get;
  };
  CLI::App* app_;
  std::vector<Entry> entries_;
};

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  std::size_t threads = data::default_threads();
};

void add_common(Settings& s, CLI::App* app, Common& c) {
  s.add("seed", c.seed, "Random seed");
  s.add("out", c.out, "Output directory");
  s.add("threads", c.threads, "Worker threads (default: PCGNET_THREADS or all cores)");
  app->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
}

void finish_settings(Settings& s, const Common& c, std::vector<std::string>& problems) {
  if (!c.config.empty()) s.apply(parse_config_file(c.config), problems);
  if (c.out.empty()) problems.push_back("--out is required");
  if (c.threads == 0) problems.push_back("threads must be positive");
}

void raise_if(const std::vector<std::string>& problems) {
  if (problems.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw ValidationError(msg);
}

template <class F>
void collect(std::vector<std::string>& problems, F&& check) {
  try {
    check();
  } catch (const ValidationError& e) {
    problems.push_back(e.what());
  }
}

void echo_config(const fs::path& dir, const std::string& command, const Settings& s) {
  fs::create_directories(dir);
  report::write_text(dir / "resolved_config.txt", "# pcgnet " + command + "\n" + s.resolved());
}

void require_distinct(const fs::path& in, const fs::path& out, std::vector<std::string>& problems) {
  std::error_code ec;
  if (fs::exists(out) && fs::equivalent(in, out, ec))
    problems.push_back("output directory must differ from the input directory");
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
  Common common;
  data::SyntheticSpec spec;
  bool force = false;
};

int cmd_synth(SynthArgs& a, Settings& s, std::ostream& out) {
  std::vector<std::string> problems;
  finish_settings(s, a.common, problems);
  a.spec.seed = a.common.seed;
  collect(problems, [&] { a.spec.validate(); });
  raise_if(problems);

  const fs::path dir = a.common.out;
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!a.force) throw InputError("output directory " + dir.string() + " is not empty (use --force)");
    for (const auto& de : fs::directory_iterator(dir)) {
      const auto name = de.path().filename().string();
      if (de.path().extension() == ".wav" || name == "REFERENCE.csv" || name == "PATIENTS.csv") fs::remove(de.path());
    }
  }
  const auto records = data::synthesize_dataset(a.spec);
  data::write_dataset_dir(dir, records);
  echo_config(dir / "config", "synth", s);
  std::size_t abnormal = 0;
  std::set<std::string> patients;
  for (const auto& r : records) {
    abnormal += r.entry.label == 1;
    patients.insert(r.entry.patient_id);
  }
  out << "wrote " << records.size() << " records (" << records.size() - abnormal << " normal, " << abnormal
      << " abnormal) from " << patients.size() << " patients to " << dir.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// preprocess
// ---------------------------------------------------------------------------

struct PreprocessArgs {
  Common common;
  std::string in;
  dsp::PreprocessConfig pre;
  std::string shrinkage = "hard";
  bool emit_fft = false;
};

void write_spectrum(const fs::path& path, const Waveform& w) {
  std::ostringstream os;
  os << std::setprecision(10) << "frequency_hz,magnitude\n";
  for (const auto& bin : dsp::fft_magnitude(w)) os << bin.frequency_hz << ',' << bin.magnitude << '\n';
  report::write_text(path, os.str());
}

int cmd_preprocess(PreprocessArgs& a, Settings& s, std::ostream& out, std::ostream& err) {
  std::vector<std::string> problems;
  finish_settings(s, a.common, problems);
  if (a.in.empty()) problems.push_back("--in is required");
  else if (!fs::is_directory(a.in)) problems.push_back("input directory " + a.in + " does not exist");
  else require_distinct(a.in, a.common.out, problems);
  if (a.pre.wavelet_levels < 1) problems.push_back("wavelet_levels must be at least 1");
  collect(problems, [&] { a.pre.shrinkage = dsp::parse_shrinkage(a.shrinkage); });
  if (a.pre.filter_order < 1) problems.push_back("filter_order must be at least 1");
  if (!(a.pre.clip_seconds > 0)) problems.push_back("clip_seconds must be positive");
  raise_if(problems);

  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(a.in))
    if (de.is_regular_file() && de.path().extension() == ".wav") files.push_back(de.path());
  if (files.empty()) throw InputError("no records found in " + a.in);
  std::sort(files.begin(), files.end());

  const fs::path dir = a.common.out;
  fs::create_directories(dir / "clips");
  if (a.emit_fft) fs::create_directories(dir / "spectra");
  echo_config(dir, "preprocess", s);

  std::vector<std::string> rows(files.size()), failures(files.size());
  std::vector<std::size_t> clip_counts(files.size(), 0);
  data::parallel_for(files.size(), a.common.threads, [&](std::size_t i) {
    const auto id = files[i].stem().string();
    try {
      const Waveform raw = data::load_wav(files[i]);
      const Waveform wav = dsp::wavelet_denoise(raw, a.pre.wavelet_levels, a.pre.shrinkage);
      const Waveform clean = dsp::denoise_recording(raw, a.pre);
      const auto clips = dsp::segment_fixed(clean, a.pre.clip_seconds);
      for (std::size_t k = 0; k < clips.size(); ++k)
        data::write_wav(dir / "clips" / (id + "_" + std::to_string(k) + ".wav"), clips[k]);
      if (a.emit_fft) {
        write_spectrum(dir / "spectra" / (id + "_before.csv"), raw);
        write_spectrum(dir / "spectra" / (id + "_after.csv"), clean);
      }
      std::ostringstream os;
      os << std::setprecision(8) << id << ',' << raw.duration_seconds() << ',' << clips.size() << ','
         << dsp::rms(raw.samples) << ',' << dsp::rms(wav.samples) << ',' << dsp::rms(clean.samples);
      rows[i] = os.str();
      clip_counts[i] = clips.size();
    } catch (const Error& e) {
      failures[i] = files[i].string() + ": " + e.what();
    }
  });

  std::size_t n_failed = 0;
  for (const auto& f : failures)
    if (!f.empty()) err << "error: " << f << '\n', ++n_failed;
  std::ostringstream summary;
  summary << "record_id,duration_s,n_clips,rms_raw,rms_wavelet,rms_filtered\n";
  std::size_t total_clips = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    summary << rows[i] << '\n';
    total_clips += clip_counts[i];
  }
  report::write_text(dir / "summary.csv", summary.str());
  out << "processed " << files.size() - n_failed << " of " << files.size() << " records into " << total_clips
      << " clips\n";
  if (n_failed > 0) throw InputError(std::to_string(n_failed) + " record(s) could not be processed");
  return kOk;
}

// ---------------------------------------------------------------------------
// shared model/feature settings
// ---------------------------------------------------------------------------

struct FeatureArgs {
  mel::MelConfig mel;
  dsp::PreprocessConfig pre;
  std::string cache;
  std::string shrinkage = "hard";

  void add(Settings& s) {
    s.add("n_fft", mel.n_fft, "STFT size");
    s.add("hop", mel.hop, "STFT hop");
    s.add("n_mels", mel.n_mels, "Mel bands");
    s.add("fmin", mel.fmin_hz, "Lowest mel frequency (Hz)");
    s.add("fmax", mel.fmax_hz, "Highest mel frequency (Hz)");
    s.add("wavelet_levels", pre.wavelet_levels, "DWT levels");
    s.add("shrinkage", shrinkage, "Wavelet detail thresholding: hard | soft");
    s.add("filter_order", pre.filter_order, "Butterworth order");
    s.add("cutoff_hz", pre.cutoff_hz, "Butterworth cutoff (Hz)");
    s.add("clip_seconds", pre.clip_seconds, "Clip length (s)");
    s.add("cache", cache, "Spectrogram cache directory");
  }

  std::size_t frames() const {
    return mel::frame_count(static_cast<std::size_t>(std::llround(pre.clip_seconds * 2000.0)), mel.n_fft, mel.hop);
  }

  data::FeatureOptions options(std::size_t threads) const {
    data::FeatureOptions o;
    o.preprocess = pre;
    o.mel = mel;
    if (!cache.empty()) o.cache_dir = fs::path(cache);
    o.threads = threads;
    return o;
  }
};

std::vector<mel::MelSpectrogram> load_features(const std::vector<data::ManifestEntry>& entries,
                                               const FeatureArgs& f, std::size_t threads) {
  return data::build_features(
      entries, [&](std::size_t i) { return data::load_wav(entries[i].path); }, f.options(threads));
}

train::ClipSet clips_for(const std::vector<mel::MelSpectrogram>& specs, const std::set<std::string>& records) {
  train::ClipSet out;
  for (const auto& s : specs)
    if (records.count(s.source_id)) out.push_back(&s);
  return out;
}

std::set<std::string> ids_of(const std::vector<const data::ManifestEntry*>& entries) {
  std::set<std::string> out;
  for (const auto* e : entries) out.insert(e->record_id);
  return out;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string data_dir;
  FeatureArgs features;
  std::string cell = "h_infinity";
  std::string lambda = "scalar";
  std::string conv_blocks = "16,32,64";
  std::size_t hidden = 128;
  std::string loss = "pwl";
  std::string threshold = "sapt";
  std::string delta = "track";
  train::TrainConfig tc;
  data::SplitOptions split;
  std::string fine_tune_from;
};

std::vector<std::size_t> parse_blocks(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t v = 0;
    if (!parse_value(cell, v) || v == 0) throw ValidationError("conv_blocks: bad channel count '" + cell + "'");
    out.push_back(v);
  }
  return out;
}

int cmd_train(TrainArgs& a, Settings& s, std::ostream& out, std::ostream& err) {
  std::vector<std::string> problems;
  finish_settings(s, a.common, problems);
  if (a.data_dir.empty()) problems.push_back("--data is required");
  else if (!fs::is_directory(a.data_dir)) problems.push_back("data directory " + a.data_dir + " does not exist");
  else require_distinct(a.data_dir, a.common.out, problems);
  if (!a.fine_tune_from.empty() && !fs::exists(a.fine_tune_from))
    problems.push_back("fine-tune checkpoint " + a.fine_tune_from + " does not exist");

  model::ModelConfig mc;
  collect(problems, [&] { mc.cell_mode = model::parse_cell_mode(a.cell); });
  collect(problems, [&] { mc.lambda_mode = model::parse_lambda_mode(a.lambda); });
  collect(problems, [&] { mc.conv_blocks = parse_blocks(a.conv_blocks); });
  mc.hidden_size = a.hidden;
  mc.n_mels = static_cast<std::size_t>(std::max(a.features.mel.n_mels, 0));
  mc.n_frames = a.features.frames();
  collect(problems, [&] { mc.validate(); });
  collect(problems, [&] { a.features.mel.validate(2000); });
  collect(problems, [&] { a.features.pre.shrinkage = dsp::parse_shrinkage(a.features.shrinkage); });

  if (a.loss != "pwl" && a.loss != "bce") problems.push_back("loss must be 'pwl' or 'bce', got '" + a.loss + "'");
  if (a.threshold != "sapt" && a.threshold != "fixed")
    problems.push_back("threshold must be 'sapt' or 'fixed', got '" + a.threshold + "'");
  if (a.delta != "track" && a.delta != "fixed")
    problems.push_back("delta must be 'track' or 'fixed', got '" + a.delta + "'");
  a.tc.use_pwl = a.loss == "pwl";
  a.tc.adaptive_threshold = a.threshold == "sapt";
  a.tc.pwl.delta_source = a.delta == "fixed" ? train::DeltaSource::kFixed : train::DeltaSource::kTrackThreshold;
  a.tc.seed = a.common.seed;
  a.tc.threads = a.common.threads;
  a.split.seed = a.common.seed;
  collect(problems, [&] { a.tc.validate(); });
  raise_if(problems);

  const fs::path dir = a.common.out;
  echo_config(dir, "train", s);

  auto listing = data::scan_dataset_dir(a.data_dir);
  for (const auto& line : listing.log) err << "data: " << line << '\n';
  auto split = data::patient_split(listing.entries, a.split);
  for (const auto& w : split.warnings) err << "warning: " << w << '\n';
  split.manifest.validate();
  report::write_text(dir / "manifest.json", split.manifest.to_json());

  const auto specs = load_features(split.manifest.entries, a.features, a.common.threads);
  const auto train_set = clips_for(specs, ids_of(split.manifest.in_split(data::Split::kTrain)));
  const auto val_set = clips_for(specs, ids_of(split.manifest.in_split(data::Split::kVal)));
  const auto test_set = clips_for(specs, ids_of(split.manifest.in_split(data::Split::kTest)));
  err << "clips: train " << train_set.size() << ", val " << val_set.size() << ", test " << test_set.size() << '\n';

  std::unique_ptr<model::HInfModel> net;
  if (!a.fine_tune_from.empty()) {
    net = std::make_unique<model::HInfModel>(
        model::transfer_and_freeze(ad::read_checkpoint(a.fine_tune_from), mc, a.common.seed));
  } else {
    net = std::make_unique<model::HInfModel>(mc, a.common.seed);
  }
  err << net->shapes().to_string() << '\n';

  auto rep = train::train(*net, train_set, val_set, a.tc, &test_set, [&](const train::EpochRow& r) {
    err << "epoch " << r.epoch << " loss " << r.train_loss << " val_f1 " << r.val.f1 << " tau " << r.tau << '\n';
  });

  report::write_training_outputs(dir, rep);
  const std::string fingerprint = a.features.mel.fingerprint(2000);
  ad::save_checkpoint(dir / "model.ckpt", net->parameters(), model::model_metadata(*net, rep.final_tau, fingerprint));

  json metrics;
  metrics["final_tau"] = rep.final_tau;
  metrics["conv_frozen"] = rep.conv_frozen;
  metrics["frozen_parameters"] = rep.frozen_parameters;
  const auto& last = rep.epochs.back();
  metrics["validation"] = {{"f1", last.val.f1},
                           {"accuracy", last.val.accuracy},
                           {"sensitivity", last.val.sensitivity},
                           {"specificity", last.val.specificity}};
  if (rep.test) metrics["test"] = json::parse(report::eval_json(*rep.test));
  report::write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  out << metrics.dump(2) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  Common common;
  std::string checkpoint;
  std::string data_dir;
  std::string manifest;
  std::string split = "test";
  std::string aggregate = "mean";
  std::optional<double> tau;
  FeatureArgs features;
};

int cmd_evaluate(EvaluateArgs& a, Settings& s, std::ostream& out, std::ostream& err) {
  std::vector<std::string> problems;
  finish_settings(s, a.common, problems);
  if (a.checkpoint.empty()) problems.push_back("--checkpoint is required");
  else if (!fs::exists(a.checkpoint)) problems.push_back("checkpoint " + a.checkpoint + " does not exist");
  if (a.data_dir.empty()) problems.push_back("--data is required");
  else if (!fs::is_directory(a.data_dir)) problems.push_back("data directory " + a.data_dir + " does not exist");
  else require_distinct(a.data_dir, a.common.out, problems);
  if (!a.manifest.empty() && !fs::exists(a.manifest)) problems.push_back("manifest " + a.manifest + " does not exist");
  if (a.tau && !(*a.tau >= 0 && *a.tau <= 1)) problems.push_back("tau must lie in [0, 1]");
  if (a.aggregate != "mean" && a.aggregate != "max") problems.push_back("aggregate must be 'mean' or 'max'");
  collect(problems, [&] { a.features.mel.validate(2000); });
  collect(problems, [&] { a.features.pre.shrinkage = dsp::parse_shrinkage(a.features.shrinkage); });
  raise_if(problems);

  const auto ckpt = ad::read_checkpoint(a.checkpoint);
  json meta;
  model::ModelConfig mc;
  double tau = 0.5;
  std::string fingerprint;
  try {
    meta = json::parse(ckpt.metadata_json);
    mc = model::ModelConfig::from_json(meta.at("model").dump());
    tau = meta.at("tau").get<double>();
    fingerprint = meta.at("mel_fingerprint").get<std::string>();
  } catch (const json::exception& e) {
    throw InputError("checkpoint metadata incomplete: " + std::string(e.what()));
  }
  const std::string active = a.features.mel.fingerprint(2000);
  if (fingerprint != active)
    throw ValidationError("checkpoint was trained with feature config " + fingerprint + ", active config is " + active);
  if (a.tau) tau = *a.tau;

  model::HInfModel net(mc, 0);
  ad::load_parameters(ckpt, net.parameters());
  if (meta.value("conv_frozen", false)) net.freeze_conv_stack();

  auto listing = data::scan_dataset_dir(a.data_dir);
  for (const auto& line : listing.log) err << "data: " << line << '\n';
  std::vector<data::ManifestEntry> entries = listing.entries;
  if (!a.manifest.empty()) {
    std::ifstream is(a.manifest);
    std::stringstream buf;
    buf << is.rdbuf();
    const auto m = data::DatasetManifest::from_json(buf.str());
    const auto wanted = ids_of(m.in_split(data::parse_split(a.split)));
    std::erase_if(entries, [&](const auto& e) { return !wanted.count(e.record_id); });
    if (entries.empty()) throw InputError("no records of split '" + a.split + "' found in " + a.data_dir);
  }

  const auto specs = load_features(entries, a.features, a.common.threads);
  train::ClipSet clips;
  for (const auto& sp : specs) clips.push_back(&sp);
  const auto labels = train::labels_of(clips);
  const auto positives = std::count(labels.begin(), labels.end(), 1.0);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size()))
    throw ValidationError("evaluation set contains a single class; F1 is undefined");

  const auto eval = train::evaluate(net, clips, tau,
                                    a.aggregate == "max" ? data::AggregateMode::kMax : data::AggregateMode::kMean,
                                    a.common.threads);
  const std::string text = report::eval_json(eval);
  fs::create_directories(a.common.out);
  echo_config(a.common.out, "evaluate", s);
  report::write_text(fs::path(a.common.out) / "metrics.json", text + "\n");
  out << text << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heart-sound abnormality detection pipeline", "pcgnet"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic heart-sound dataset");
  SynthArgs sa;
  Settings ss(synth);
  add_common(ss, synth, sa.common);
  ss.add("n_normal", sa.spec.n_normal, "Normal recordings");
  ss.add("n_abnormal", sa.spec.n_abnormal, "Abnormal recordings");
  ss.add("min_duration", sa.spec.min_duration_s, "Shortest recording (s)");
  ss.add("max_duration", sa.spec.max_duration_s, "Longest recording (s)");
  ss.add("min_bpm", sa.spec.min_heart_rate_bpm, "Lowest heart rate");
  ss.add("max_bpm", sa.spec.max_heart_rate_bpm, "Highest heart rate");
  ss.add("normal_jitter", sa.spec.normal_jitter, "Interval jitter of normal records");
  ss.add("abnormal_jitter", sa.spec.abnormal_jitter, "Interval jitter of abnormal records");
  ss.add("drop_probability", sa.spec.drop_probability, "Dropped-beat probability (abnormal)");
  ss.add("extra_probability", sa.spec.extra_probability, "Extra-beat probability (abnormal)");
  ss.add("noise", sa.spec.noise_sigma, "Gaussian noise sigma");
  ss.add("force", sa.force, "Overwrite a non-empty output directory");

  auto* pre = app.add_subcommand("preprocess", "Denoise and segment recordings");
  PreprocessArgs pa;
  Settings ps(pre);
  add_common(ps, pre, pa.common);
  ps.add("in", pa.in, "Input directory of .wav files");
  ps.add("wavelet_levels", pa.pre.wavelet_levels, "DWT levels");
  ps.add("shrinkage", pa.shrinkage, "Wavelet detail thresholding: hard | soft");
  ps.add("filter_order", pa.pre.filter_order, "Butterworth order");
  ps.add("cutoff_hz", pa.pre.cutoff_hz, "Butterworth cutoff (Hz)");
  ps.add("clip_seconds", pa.pre.clip_seconds, "Clip length (s)");
  ps.add("emit_fft", pa.emit_fft, "Write before/after magnitude spectra");

  auto* tr = app.add_subcommand("train", "Train a model");
  TrainArgs ta;
  Settings ts(tr);
  add_common(ts, tr, ta.common);
  ts.add("data", ta.data_dir, "Dataset directory");
  ta.features.add(ts);
  ts.add("cell", ta.cell, "Recurrent cell: h_infinity | standard");
  ts.add("lambda", ta.lambda, "Filter coefficient: scalar | per_unit");
  ts.add("conv_blocks", ta.conv_blocks, "Channels per conv block");
  ts.add("hidden", ta.hidden, "Recurrent hidden size");
  ts.add("epochs", ta.tc.epochs, "Training epochs");
  ts.add("batch_size", ta.tc.batch_size, "Mini-batch size");
  ts.add("lr", ta.tc.adam.lr, "Adam learning rate");
  ts.add("loss", ta.loss, "pwl | bce");
  ts.add("alpha", ta.tc.pwl.alpha, "Penalty balance between false negatives and false positives");
  ts.add("delta", ta.delta, "Penalty threshold: track | fixed");
  ts.add("fixed_delta", ta.tc.pwl.fixed_delta, "Penalty threshold when delta = fixed");
  ts.add("threshold", ta.threshold, "sapt | fixed");
  ts.add("tau", ta.tc.fixed_tau, "Decision threshold when threshold = fixed");
  ts.add("gamma", ta.tc.threshold.gamma_interval, "Epochs between threshold commits");
  ts.add("beta_ewma", ta.tc.threshold.beta_ewma, "F1 smoothing weight of the newest epoch");
  ts.add("sapt_subsample", ta.tc.threshold.subsample_fraction, "Validation share scored per update");
  ts.add("test_fraction", ta.split.test_fraction, "Share of records held out for testing");
  ts.add("val_per_class", ta.split.val_per_class, "Validation records per class (upper bound)");
  ts.add("val_fraction", ta.split.val_fraction, "Validation share of the training side (per class)");
  ts.add("fine_tune_from", ta.fine_tune_from, "Standard-cell checkpoint to transfer and freeze");

  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  EvaluateArgs ea;
  Settings es(ev);
  add_common(es, ev, ea.common);
  es.add("checkpoint", ea.checkpoint, "Checkpoint file");
  es.add("data", ea.data_dir, "Dataset directory");
  es.add("manifest", ea.manifest, "Manifest JSON restricting the records");
  es.add("split", ea.split, "Manifest split to evaluate");
  es.add("aggregate", ea.aggregate, "Recording aggregation: mean | max");
  ea.features.add(es);
  ev->add_option("--tau", ea.tau, "Override the stored decision threshold");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (synth->parsed()) return cmd_synth(sa, ss, out);
    if (pre->parsed()) return cmd_preprocess(pa, ps, out, err);
    if (tr->parsed()) return cmd_train(ta, ts, out, err);
    if (ev->parsed()) return cmd_evaluate(ea, es, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}

}  // namespace pcgnet::cli
