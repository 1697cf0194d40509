#include <algorithm>
#include <cmath>
#include <sstream>

#include "pcgnet/error.hpp"
#include "pcgnet/signal_dsp.hpp"

namespace pcgnet::dsp {

namespace {

constexpr std::size_t F = kDb4Length;

// Half-sample symmetric extension: ... x1 x0 | x0 x1 ... x(n-1) | x(n-1) x(n-2) ...
inline std::size_t symmetric_index(std::ptrdiff_t j, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = j % period;
  if (m < 0) m += period;
  if (m < static_cast<std::ptrdiff_t>(n)) return static_cast<std::size_t>(m);
  return static_cast<std::size_t>(period - 1 - m);
}

WaveletFilters make_db4() {
  WaveletFilters w{};
  w.rec_lo = {0.23037781330885523,  0.7148465705525415,   0.6308807679295904,
              -0.02798376941698385, -0.18703481171888114, 0.030841381835986965,
              0.032883011666982945, -0.010597401784997278};
  for (std::size_t k = 0; k < F; ++k) {
    w.dec_lo[k] = w.rec_lo[F - 1 - k];
    // Quadrature mirror: g[k] = (-1)^k h[F-1-k]
    w.rec_hi[k] = (k % 2 == 0 ? 1.0 : -1.0) * w.dec_lo[k];
  }
  for (std::size_t k = 0; k < F; ++k) w.dec_hi[k] = w.rec_hi[F - 1 - k];
  return w;
}

void check_levels(std::size_t length, int levels) {
  const int max_level = max_dwt_level(length);
  if (length < F) {
    std::ostringstream os;
    os << "dwt_decompose: signal of " << length
       << " samples is shorter than the db4 filter (" << F << ")";
    throw ValidationError(os.str());
  }
  if (levels < 1 || levels > max_level) {
    std::ostringstream os;
    os << "dwt_decompose: " << levels << " levels requested for a " << length
       << "-sample signal; max feasible level is " << max_level;
    throw ValidationError(os.str());
  }
}

}  // namespace

const WaveletFilters& db4_filters() {
  static const WaveletFilters filters = make_db4();
  return filters;
}

int max_dwt_level(std::size_t length) {
  int level = 0;
  std::size_t ratio = length / (F - 1);
  while (ratio > 1) {
    ratio >>= 1;
    ++level;
  }
  return level;
}

void dwt_step(std::span<const double> x, std::vector<double>& approx,
              std::vector<double>& detail) {
  const auto& w = db4_filters();
  const std::size_t n = x.size();
  const std::size_t out = (n + F - 1) / 2;
  approx.assign(out, 0.0);
  detail.assign(out, 0.0);
  for (std::size_t i = 0; i < out; ++i) {
    const auto m = static_cast<std::ptrdiff_t>(2 * i + 1);
    double a = 0.0, d = 0.0;
    for (std::size_t k = 0; k < F; ++k) {
      const double v = x[symmetric_index(m - static_cast<std::ptrdiff_t>(k), n)];
      a += w.dec_lo[k] * v;
      d += w.dec_hi[k] * v;
    }
    approx[i] = a;
    detail[i] = d;
  }
}

std::vector<double> idwt_step(std::span<const double> approx,
                              std::span<const double> detail) {
  if (approx.size() != detail.size()) {
    std::ostringstream os;
    os << "idwt: approximation has " << approx.size()
       << " coefficients but detail has " << detail.size();
    throw ValidationError(os.str());
  }
  const auto& w = db4_filters();
  const std::size_t n = approx.size();
  if (2 * n < F) throw ValidationError("idwt: too few coefficients for db4");
  const std::size_t out = 2 * n - F + 2;
  std::vector<double> y(out, 0.0);
  // y[k] = sum_i a[i] g[k + F - 2 - 2i]; only taps with matching parity.
  for (std::size_t k = 0; k < out; ++k) {
    const std::size_t m = k + F - 2;
    double acc = 0.0;
    for (std::size_t tap = m % 2; tap < F; tap += 2) {
      if (tap > m) break;
      const std::size_t i = (m - tap) / 2;
      if (i >= n) continue;
      acc += approx[i] * w.rec_lo[tap] + detail[i] * w.rec_hi[tap];
    }
    y[k] = acc;
  }
  return y;
}

WaveletDecomposition dwt_decompose(std::span<const double> signal, int levels) {
  check_levels(signal.size(), levels);
  WaveletDecomposition out;
  out.levels = levels;
  std::vector<double> current(signal.begin(), signal.end());
  std::vector<double> approx, detail;
  for (int level = 0; level < levels; ++level) {
    dwt_step(current, approx, detail);
    out.details.push_back(std::move(detail));
    current = std::move(approx);
  }
  out.approx = std::move(current);
  return out;
}

WaveletDecomposition dwt_decompose(const Waveform& signal, int levels) {
  validate_waveform(signal, "dwt_decompose");
  return dwt_decompose(std::span<const double>(signal.samples), levels);
}

std::vector<double> idwt_reconstruct_samples(const WaveletDecomposition& decomp,
                                             std::size_t original_length) {
  if (decomp.levels < 1 || decomp.details.size() != static_cast<std::size_t>(decomp.levels))
    throw ValidationError("idwt_reconstruct: level count does not match detail bands");
  if (decomp.approx.size() != decomp.details.back().size())
    throw ValidationError("idwt_reconstruct: approximation length " +
                          std::to_string(decomp.approx.size()) +
                          " differs from coarsest detail length " +
                          std::to_string(decomp.details.back().size()));
  std::vector<double> current = decomp.approx;
  for (int level = decomp.levels - 1; level >= 0; --level) {
    current = idwt_step(current, decomp.details[static_cast<std::size_t>(level)]);
    const std::size_t want =
        level > 0 ? decomp.details[static_cast<std::size_t>(level - 1)].size() : original_length;
    if (current.size() < want || current.size() > want + 1) {
      std::ostringstream os;
      os << "idwt_reconstruct: level " << level + 1 << " yields " << current.size()
         << " samples, expected " << want;
      throw ValidationError(os.str());
    }
    current.resize(want);
  }
  return current;
}

Waveform idwt_reconstruct(const WaveletDecomposition& decomp,
                          std::size_t original_length) {
  Waveform w;
  w.samples = idwt_reconstruct_samples(decomp, original_length);
  return w;
}

double soft_threshold(double x, double threshold) {
  const double mag = std::abs(x) - threshold;
  if (mag <= 0.0) return 0.0;
  return std::copysign(mag, x);
}

double universal_threshold(std::span<const double> finest_detail, std::size_t n) {
  if (finest_detail.empty() || n < 2) return 0.0;
  std::vector<double> mags(finest_detail.size());
  std::transform(finest_detail.begin(), finest_detail.end(), mags.begin(),
                 [](double v) { return std::abs(v); });
  const std::size_t mid = mags.size() / 2;
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid), mags.end());
  double median = mags[mid];
  if (mags.size() % 2 == 0) {
    const double lower = *std::max_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  const double sigma = median / 0.6745;
  return sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)));
}

double hard_threshold(double x, double threshold) { return std::abs(x) > threshold ? x : 0.0; }

std::string to_string(Shrinkage s) { return s == Shrinkage::kHard ? "hard" : "soft"; }

Shrinkage parse_shrinkage(const std::string& s) {
  if (s == "hard") return Shrinkage::kHard;
  if (s == "soft") return Shrinkage::kSoft;
  throw ValidationError("unknown shrinkage rule '" + s + "' (expected hard or soft)");
}

Waveform wavelet_denoise(const Waveform& signal, int levels, Shrinkage rule) {
  auto decomp = dwt_decompose(signal, levels);
  const double lambda = universal_threshold(decomp.details.front(), signal.size());
  for (auto& band : decomp.details)
    for (auto& c : band) c = rule == Shrinkage::kHard ? hard_threshold(c, lambda) : soft_threshold(c, lambda);
  Waveform out = signal;
  out.samples = idwt_reconstruct_samples(decomp, signal.size());
  return out;
}

}  // namespace pcgnet::dsp
