#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <sstream>

#include <fftw3.h>
#include <json.hpp>

#include "pcgnet/error.hpp"
#include "pcgnet/features_mel.hpp"

namespace pcgnet::mel {

using nlohmann::json;

void MelConfig::validate(int sample_rate_hz) const {
  std::vector<std::string> problems;
  if (n_fft <= 0) problems.push_back("n_fft must be positive");
  if (hop <= 0) problems.push_back("hop must be positive");
  if (hop > n_fft) problems.push_back("hop must not exceed n_fft");
  if (n_mels <= 0) problems.push_back("n_mels must be positive");
  if (!(fmin_hz >= 0.0)) problems.push_back("fmin_hz must be non-negative");
  if (!(fmin_hz < fmax_hz)) problems.push_back("fmin_hz must be below fmax_hz");
  if (fmax_hz > sample_rate_hz / 2.0) problems.push_back("fmax_hz exceeds Nyquist");
  if (!(floor_epsilon > 0.0)) problems.push_back("floor_epsilon must be positive");
  if (!problems.empty()) {
    std::string msg = "invalid mel config:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw ValidationError(msg);
  }
}

std::string MelConfig::fingerprint(int sample_rate_hz) const {
  std::ostringstream canon;
  canon.precision(17);
  canon << "n_fft=" << n_fft << ";hop=" << hop << ";n_mels=" << n_mels << ";fmin=" << fmin_hz
        << ";fmax=" << fmax_hz << ";eps=" << floor_epsilon << ";norm=" << normalize
        << ";window=hann;fs=" << sample_rate_hz;
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : canon.str()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t frame_count(std::size_t length, int n_fft, int hop) {
  const auto nfft = static_cast<std::size_t>(n_fft);
  if (length < nfft) return 0;
  return 1 + (length - nfft) / static_cast<std::size_t>(hop);
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

Grid stft_power(const Waveform& clip, const MelConfig& cfg) {
  cfg.validate(clip.sample_rate_hz);
  const std::size_t frames = frame_count(clip.size(), cfg.n_fft, cfg.hop);
  if (frames == 0) {
    std::ostringstream os;
    os << "stft_power: clip of " << clip.size() << " samples is shorter than n_fft = " << cfg.n_fft;
    throw ValidationError(os.str());
  }
  const auto nfft = static_cast<std::size_t>(cfg.n_fft);
  const std::size_t bins = nfft / 2 + 1;
  const auto window = hann_window(cfg.n_fft);

  double* in = fftw_alloc_real(nfft);
  fftw_complex* out = fftw_alloc_complex(bins);
  static std::mutex planner;
  fftw_plan plan;
  {
    std::lock_guard lock(planner);
    plan = fftw_plan_dft_r2c_1d(cfg.n_fft, in, out, FFTW_ESTIMATE);
  }

  Grid power(bins, frames);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * static_cast<std::size_t>(cfg.hop);
    for (std::size_t i = 0; i < nfft; ++i) in[i] = clip.samples[start + i] * window[i];
    fftw_execute(plan);
    for (std::size_t k = 0; k < bins; ++k) power(k, f) = out[k][0] * out[k][0] + out[k][1] * out[k][1];
  }

  {
    std::lock_guard lock(planner);
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return power;
}

std::vector<double> mel_center_frequencies(const MelConfig& cfg) {
  const double lo = hz_to_mel(cfg.fmin_hz);
  const double hi = hz_to_mel(cfg.fmax_hz);
  std::vector<double> centers(static_cast<std::size_t>(cfg.n_mels));
  for (int m = 0; m < cfg.n_mels; ++m)
    centers[static_cast<std::size_t>(m)] = mel_to_hz(lo + (hi - lo) * (m + 1) / (cfg.n_mels + 1));
  return centers;
}

Grid mel_filterbank(const MelConfig& cfg, int sample_rate_hz) {
  cfg.validate(sample_rate_hz);
  const std::size_t bins = static_cast<std::size_t>(cfg.n_fft) / 2 + 1;
  const double lo = hz_to_mel(cfg.fmin_hz);
  const double hi = hz_to_mel(cfg.fmax_hz);
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / (cfg.n_mels + 1));

  Grid fb(static_cast<std::size_t>(cfg.n_mels), bins);
  for (std::size_t m = 0; m < fb.rows; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    double sum = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / cfg.n_fft;
      const double rise = (f - left) / (center - left);
      const double fall = (right - f) / (right - center);
      const double w = std::max(0.0, std::min(rise, fall));
      fb(m, k) = w;
      sum += w;
    }
    if (sum <= 0.0) {
      std::ostringstream os;
      os << "mel_filterbank: filter " << m << " (" << left << "-" << right
         << " Hz) covers no FFT bin; reduce n_mels or increase n_fft";
      throw ValidationError(os.str());
    }
    for (std::size_t k = 0; k < bins; ++k) fb(m, k) /= sum;
  }
  return fb;
}

std::shared_ptr<const Grid> cached_filterbank(const MelConfig& cfg, int sample_rate_hz) {
  static std::shared_mutex mutex;
  static std::map<std::string, std::shared_ptr<const Grid>> cache;
  const std::string key = cfg.fingerprint(sample_rate_hz);
  {
    std::shared_lock lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto fb = std::make_shared<const Grid>(mel_filterbank(cfg, sample_rate_hz));
  std::unique_lock lock(mutex);
  return cache.try_emplace(key, std::move(fb)).first->second;
}

MelSpectrogram log_mel(const Waveform& clip, const MelConfig& cfg) {
  const Grid power = stft_power(clip, cfg);
  const auto fb = cached_filterbank(cfg, clip.sample_rate_hz);
  const std::size_t frames = power.cols;
  const std::size_t mels = fb->rows;
  const double log_floor = std::log(cfg.floor_epsilon);

  std::vector<double> cells(mels * frames);
  for (std::size_t m = 0; m < mels; ++m) {
    for (std::size_t f = 0; f < frames; ++f) {
      double acc = 0.0;
      for (std::size_t k = 0; k < fb->cols; ++k) acc += (*fb)(m, k) * power(k, f);
      cells[m * frames + f] = acc > cfg.floor_epsilon ? std::log(acc) : log_floor;
    }
  }

  if (cfg.normalize) {
    double mean = 0.0;
    for (double v : cells) mean += v;
    mean /= static_cast<double>(cells.size());
    double var = 0.0;
    for (double v : cells) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(cells.size()));
    // Constant spectrograms (e.g. silence) map to all zeros.
    if (sd < 1e-12 * std::max(1.0, std::abs(mean))) {
      std::fill(cells.begin(), cells.end(), 0.0);
    } else {
      for (double& v : cells) v = (v - mean) / sd;
    }
  }

  MelSpectrogram out;
  out.n_mels = mels;
  out.n_frames = frames;
  out.values.assign(cells.begin(), cells.end());
  out.config_fingerprint = cfg.fingerprint(clip.sample_rate_hz);
  out.source_id = clip.source_id;
  out.patient_id = clip.patient_id;
  return out;
}

void write_spectrogram(const std::filesystem::path& path, const MelSpectrogram& spec) {
  if (spec.values.size() != spec.n_mels * spec.n_frames)
    throw ValidationError("write_spectrogram: value count does not match declared shape");
  json header = {{"n_mels", spec.n_mels},
                 {"n_frames", spec.n_frames},
                 {"config_fingerprint", spec.config_fingerprint},
                 {"source_id", spec.source_id},
                 {"patient_id", spec.patient_id},
                 {"label", spec.label}};
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("write_spectrogram: cannot open " + tmp.string());
    os << header.dump() << '\n';
    os.write(reinterpret_cast<const char*>(spec.values.data()),
             static_cast<std::streamsize>(spec.values.size() * sizeof(float)));
    if (!os) throw InputError("write_spectrogram: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

MelSpectrogram parse_header(std::istream& is, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("spectrogram cache " + path.string() + ": missing header");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw InputError("spectrogram cache " + path.string() + ": bad header: " + e.what());
  }
  MelSpectrogram spec;
  try {
    spec.n_mels = header.at("n_mels").get<std::size_t>();
    spec.n_frames = header.at("n_frames").get<std::size_t>();
    spec.config_fingerprint = header.at("config_fingerprint").get<std::string>();
    spec.source_id = header.at("source_id").get<std::string>();
    spec.patient_id = header.at("patient_id").get<std::string>();
    spec.label = header.at("label").get<int>();
  } catch (const json::exception& e) {
    throw InputError("spectrogram cache " + path.string() + ": " + e.what());
  }
  return spec;
}

}  // namespace

MelSpectrogram read_spectrogram_header(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("read_spectrogram: cannot open " + path.string());
  return parse_header(is, path);
}

MelSpectrogram read_spectrogram(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("read_spectrogram: cannot open " + path.string());
  MelSpectrogram spec = parse_header(is, path);
  spec.values.resize(spec.n_mels * spec.n_frames);
  is.read(reinterpret_cast<char*>(spec.values.data()),
          static_cast<std::streamsize>(spec.values.size() * sizeof(float)));
  if (is.gcount() != static_cast<std::streamsize>(spec.values.size() * sizeof(float)))
    throw InputError("read_spectrogram: truncated payload in " + path.string());
  return spec;
}

}  // namespace pcgnet::mel
