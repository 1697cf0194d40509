#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "pcgnet/waveform.hpp"

namespace pcgnet::mel {

struct MelConfig {
  int n_fft = 512;
  int hop = 256;
  int n_mels = 64;
  double fmin_hz = 20.0;
  double fmax_hz = 1000.0;
  double floor_epsilon = 1e-10;
  bool normalize = true;

  /// Throws ValidationError on inconsistent settings for the given rate.
  void validate(int sample_rate_hz) const;
  /// Stable hex digest (FNV-1a 64) of every field, including the rate.
  std::string fingerprint(int sample_rate_hz) const;
};

/// Row-major (rows x cols) grid of doubles.
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Grid() = default;
  Grid(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct MelSpectrogram {
  std::size_t n_mels = 0;
  std::size_t n_frames = 0;
  std::vector<float> values;  // row-major (n_mels, n_frames)
  std::string config_fingerprint;
  std::string source_id;
  std::string patient_id;
  int label = -1;

  float at(std::size_t mel, std::size_t frame) const { return values[mel * n_frames + frame]; }
};

/// 1 + floor((length - n_fft) / hop); zero when the clip is shorter than n_fft.
std::size_t frame_count(std::size_t length, int n_fft, int hop);

/// mel(f) = 2595 log10(1 + f / 700) and its inverse.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

/// Hann-windowed |STFT|^2 with no centring: shape (n_fft/2 + 1, n_frames).
Grid stft_power(const Waveform& clip, const MelConfig& cfg);

/// Triangular, area-normalised (each row sums to 1) filters: shape (n_mels, n_fft/2 + 1).
Grid mel_filterbank(const MelConfig& cfg, int sample_rate_hz);

/// Centre frequencies (Hz) of the filterbank rows.
std::vector<double> mel_center_frequencies(const MelConfig& cfg);

/// Filterbank lookup cached by config fingerprint; safe for concurrent readers.
std::shared_ptr<const Grid> cached_filterbank(const MelConfig& cfg, int sample_rate_hz);

/// log(max(filterbank * power, eps)), optionally z-scored per spectrogram.
MelSpectrogram log_mel(const Waveform& clip, const MelConfig& cfg);

// ---------------------------------------------------------------------------
// Cache file: one-line JSON header, '\n', row-major float32 payload.
// ---------------------------------------------------------------------------

void write_spectrogram(const std::filesystem::path& path, const MelSpectrogram& spec);
MelSpectrogram read_spectrogram(const std::filesystem::path& path);

/// Header-only read (fingerprint check without loading the payload).
MelSpectrogram read_spectrogram_header(const std::filesystem::path& path);

}  // namespace pcgnet::mel
