#pragma once

#include <array>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "pcgnet/waveform.hpp"

namespace pcgnet::dsp {

// ---------------------------------------------------------------------------
// Daubechies-4 wavelet
// ---------------------------------------------------------------------------

/// Length of the db4 analysis/synthesis filters.
inline constexpr std::size_t kDb4Length = 8;

/// The four db4 filter banks (orthonormal, 8 taps each).
struct WaveletFilters {
  std::array<double, kDb4Length> dec_lo;
  std::array<double, kDb4Length> dec_hi;
  std::array<double, kDb4Length> rec_lo;
  std::array<double, kDb4Length> rec_hi;
};

const WaveletFilters& db4_filters();

struct WaveletDecomposition {
  std::vector<double> approx;               // coarsest-level approximation
  std::vector<std::vector<double>> details; // details[0] finest ... back() coarsest
  int levels = 0;
  std::string wavelet_name = "db4";
};

/// floor(log2(length / 8)), or 0 when the signal is shorter than two filters.
int max_dwt_level(std::size_t length);

/// Single-level analysis step with half-sample symmetric extension.
/// Output length of each band is floor((n + 7) / 2).
void dwt_step(std::span<const double> x, std::vector<double>& approx,
              std::vector<double>& detail);

/// Single-level synthesis step; returns 2 * n - 6 samples.
std::vector<double> idwt_step(std::span<const double> approx,
                              std::span<const double> detail);

WaveletDecomposition dwt_decompose(const Waveform& signal, int levels);
WaveletDecomposition dwt_decompose(std::span<const double> signal, int levels);

std::vector<double> idwt_reconstruct_samples(const WaveletDecomposition& decomp,
                                             std::size_t original_length);
Waveform idwt_reconstruct(const WaveletDecomposition& decomp,
                          std::size_t original_length);

/// Soft thresholding: sign(x) * max(|x| - threshold, 0).
double soft_threshold(double x, double threshold);
/// Hard thresholding: x where |x| > threshold, else 0.
double hard_threshold(double x, double threshold);

enum class Shrinkage { kHard, kSoft };
std::string to_string(Shrinkage s);
Shrinkage parse_shrinkage(const std::string& s);

/// Universal (VisuShrink) threshold for a decomposition of an n-sample
/// signal: median(|finest detail|) / 0.6745 * sqrt(2 ln n).
double universal_threshold(std::span<const double> finest_detail, std::size_t n);

/// db4 decomposition, thresholding of every detail band with the universal
/// threshold, reconstruction to the input length.
Waveform wavelet_denoise(const Waveform& signal, int levels = 4, Shrinkage rule = Shrinkage::kHard);

// ---------------------------------------------------------------------------
// Butterworth IIR
// ---------------------------------------------------------------------------

/// One biquad in transposed direct form II, normalised so a0 == 1.
/// A first-order section is stored with b2 == a2 == 0.
struct SecondOrderSection {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;

  std::complex<double> response(double omega) const;
  /// Largest pole modulus of the section.
  double max_pole_radius() const;
};

struct IirFilterSpec {
  int order = 5;
  double cutoff_hz = 500.0;
  int sample_rate_hz = 2000;
  std::vector<SecondOrderSection> sections;

  std::complex<double> response(double freq_hz) const;
  double magnitude_db(double freq_hz) const;
};

/// Analog Butterworth prototype, pre-warped bilinear transform, cascaded
/// second-order sections with exactly unity DC gain.
IirFilterSpec design_butterworth_lowpass(int order, double cutoff_hz,
                                         int sample_rate_hz);

/// Causal cascade filtering starting from the given per-section state.
void sosfilt(const IirFilterSpec& spec, std::span<double> data,
             std::vector<std::array<double, 2>> state);

/// Per-section steady-state for a unit step input (scale by the first sample
/// to suppress the start-up transient).
std::vector<std::array<double, 2>> sosfilt_steady_state(const IirFilterSpec& spec);

/// Forward-backward filtering with odd reflective padding of 3 * order samples
/// on each edge; net phase is zero and the magnitude response is squared.
Waveform apply_iir_zero_phase(const Waveform& signal, const IirFilterSpec& spec);

// ---------------------------------------------------------------------------
// Segmentation and spectra
// ---------------------------------------------------------------------------

/// Non-overlapping clips of clip_seconds each; trailing partial clip dropped,
/// recordings shorter than one clip zero-padded to exactly one clip.
std::vector<Waveform> segment_fixed(const Waveform& signal, double clip_seconds);

struct SpectrumBin {
  double frequency_hz;
  double magnitude;
};

/// Full complex DFT (any length).
std::vector<std::complex<double>> dft(std::span<const double> x);

/// One-sided |X[k]| for k = 0..N/2 at frequencies k * fs / N.
std::vector<SpectrumBin> fft_magnitude(const Waveform& signal);

/// Root-mean-square amplitude.
double rms(std::span<const double> x);

/// The preprocessing chain applied to whole recordings before segmentation.
struct PreprocessConfig {
  int wavelet_levels = 4;
  Shrinkage shrinkage = Shrinkage::kHard;
  int filter_order = 5;
  double cutoff_hz = 500.0;
  double clip_seconds = 5.0;

  /// Short identifier of every setting, e.g. "w4-hard-o5-c500-s5".
  std::string tag() const;
};

/// wavelet_denoise -> apply_iir_zero_phase (no segmentation).
Waveform denoise_recording(const Waveform& raw, const PreprocessConfig& cfg = {});

}  // namespace pcgnet::dsp
