#include <cmath>
#include <mutex>
#include <sstream>

#include <fftw3.h>

#include "pcgnet/error.hpp"
#include "pcgnet/signal_dsp.hpp"

namespace pcgnet {

void validate_waveform(const Waveform& w, const char* context) {
  if (w.sample_rate_hz <= 0)
    throw ValidationError(std::string(context) + ": sample rate must be positive");
  if (w.samples.empty())
    throw ValidationError(std::string(context) + ": empty signal");
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    if (!std::isfinite(w.samples[i])) {
      std::ostringstream os;
      os << context << ": non-finite sample at index " << i;
      throw ValidationError(os.str());
    }
  }
}

}  // namespace pcgnet

namespace pcgnet::dsp {

namespace {
// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

std::vector<Waveform> segment_fixed(const Waveform& signal, double clip_seconds) {
  if (signal.samples.empty()) throw ValidationError("segment_fixed: empty signal");
  if (!(clip_seconds > 0.0)) throw ValidationError("segment_fixed: clip length must be positive");
  const auto clip_len = static_cast<std::size_t>(std::llround(clip_seconds * signal.sample_rate_hz));
  if (clip_len == 0) throw ValidationError("segment_fixed: clip shorter than one sample");

  auto make_clip = [&](std::size_t begin) {
    Waveform clip;
    clip.sample_rate_hz = signal.sample_rate_hz;
    clip.source_id = signal.source_id;
    clip.patient_id = signal.patient_id;
    clip.samples.assign(clip_len, 0.0);
    const std::size_t end = std::min(begin + clip_len, signal.size());
    std::copy(signal.samples.begin() + static_cast<std::ptrdiff_t>(begin),
              signal.samples.begin() + static_cast<std::ptrdiff_t>(end), clip.samples.begin());
    return clip;
  };

  std::vector<Waveform> clips;
  if (signal.size() < clip_len) {
    clips.push_back(make_clip(0));
    return clips;
  }
  for (std::size_t begin = 0; begin + clip_len <= signal.size(); begin += clip_len)
    clips.push_back(make_clip(begin));
  return clips;
}

std::vector<std::complex<double>> dft(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw ValidationError("dft: empty input");
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  std::copy(x.begin(), x.end(), in);
  fftw_execute(plan);
  std::vector<std::complex<double>> spectrum(n);
  for (std::size_t k = 0; k <= n / 2; ++k) spectrum[k] = {out[k][0], out[k][1]};
  for (std::size_t k = n / 2 + 1; k < n; ++k) spectrum[k] = std::conj(spectrum[n - k]);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return spectrum;
}

std::vector<SpectrumBin> fft_magnitude(const Waveform& signal) {
  validate_waveform(signal, "fft_magnitude");
  const auto spectrum = dft(signal.samples);
  const std::size_t n = signal.size();
  std::vector<SpectrumBin> bins(n / 2 + 1);
  for (std::size_t k = 0; k < bins.size(); ++k) {
    bins[k].frequency_hz = static_cast<double>(k) * signal.sample_rate_hz / static_cast<double>(n);
    bins[k].magnitude = std::abs(spectrum[k]);
  }
  return bins;
}

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

std::string PreprocessConfig::tag() const {
  std::ostringstream os;
  os << 'w' << wavelet_levels << '-' << to_string(shrinkage) << "-o" << filter_order << "-c" << cutoff_hz << "-s"
     << clip_seconds;
  return os.str();
}

Waveform denoise_recording(const Waveform& raw, const PreprocessConfig& cfg) {
  const Waveform wavelet = wavelet_denoise(raw, cfg.wavelet_levels, cfg.shrinkage);
  const auto filter = design_butterworth_lowpass(cfg.filter_order, cfg.cutoff_hz, raw.sample_rate_hz);
  return apply_iir_zero_phase(wavelet, filter);
}

}  // namespace pcgnet::dsp
