#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pcgnet/error.hpp"
#include "pcgnet/signal_dsp.hpp"

namespace pcgnet::dsp {

using cplx = std::complex<double>;

cplx SecondOrderSection::response(double omega) const {
  const cplx z1 = std::polar(1.0, -omega);
  const cplx z2 = z1 * z1;
  return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

double SecondOrderSection::max_pole_radius() const {
  // Poles are roots of z^2 + a1 z + a2 (or z + a1 for a first-order section).
  if (a2 == 0.0) return std::abs(a1);
  const cplx disc = std::sqrt(cplx(a1 * a1 - 4.0 * a2, 0.0));
  const cplx r1 = (-a1 + disc) / 2.0;
  const cplx r2 = (-a1 - disc) / 2.0;
  return std::max(std::abs(r1), std::abs(r2));
}

cplx IirFilterSpec::response(double freq_hz) const {
  const double omega = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  cplx h = 1.0;
  for (const auto& s : sections) h *= s.response(omega);
  return h;
}

double IirFilterSpec::magnitude_db(double freq_hz) const {
  return 20.0 * std::log10(std::abs(response(freq_hz)));
}

IirFilterSpec design_butterworth_lowpass(int order, double cutoff_hz, int sample_rate_hz) {
  if (order < 1) throw ValidationError("butterworth: order must be positive");
  if (sample_rate_hz <= 0) throw ValidationError("butterworth: sample rate must be positive");
  const double nyquist = sample_rate_hz / 2.0;
  if (!(cutoff_hz > 0.0) || cutoff_hz >= nyquist) {
    std::ostringstream os;
    os << "butterworth: cutoff " << cutoff_hz << " Hz must lie in (0, " << nyquist
       << ") Hz for fs = " << sample_rate_hz;
    throw ValidationError(os.str());
  }

  const double fs2 = 2.0 * sample_rate_hz;
  const double warped = fs2 * std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);

  IirFilterSpec spec;
  spec.order = order;
  spec.cutoff_hz = cutoff_hz;
  spec.sample_rate_hz = sample_rate_hz;

  auto bilinear = [&](cplx s) { return (fs2 + s) / (fs2 - s); };

  // Upper-half-plane poles pair with their conjugates; an odd order leaves
  // one real pole at -warped.
  for (int k = 0; k < order / 2; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    const cplx s = warped * std::polar(1.0, theta);
    const cplx z = bilinear(s);
    SecondOrderSection sec;
    sec.a1 = -2.0 * z.real();
    sec.a2 = std::norm(z);
    const double gain = (1.0 + sec.a1 + sec.a2) / 4.0;
    sec.b0 = gain;
    sec.b1 = 2.0 * gain;
    sec.b2 = gain;
    spec.sections.push_back(sec);
  }
  if (order % 2 == 1) {
    const double z = bilinear(cplx(-warped, 0.0)).real();
    SecondOrderSection sec;
    sec.a1 = -z;
    sec.a2 = 0.0;
    const double gain = (1.0 + sec.a1) / 2.0;
    sec.b0 = gain;
    sec.b1 = gain;
    sec.b2 = 0.0;
    spec.sections.push_back(sec);
  }
  return spec;
}

void sosfilt(const IirFilterSpec& spec, std::span<double> data,
             std::vector<std::array<double, 2>> state) {
  if (state.size() != spec.sections.size())
    throw ValidationError("sosfilt: state count differs from section count");
  for (std::size_t s = 0; s < spec.sections.size(); ++s) {
    const auto& c = spec.sections[s];
    double z0 = state[s][0], z1 = state[s][1];
    for (double& v : data) {
      const double x = v;
      const double y = c.b0 * x + z0;
      z0 = c.b1 * x - c.a1 * y + z1;
      z1 = c.b2 * x - c.a2 * y;
      v = y;
    }
  }
}

std::vector<std::array<double, 2>> sosfilt_steady_state(const IirFilterSpec& spec) {
  std::vector<std::array<double, 2>> zi;
  double level = 1.0;
  for (const auto& c : spec.sections) {
    const double dc = (c.b0 + c.b1 + c.b2) / (1.0 + c.a1 + c.a2);
    const double out = dc * level;
    const double z1 = c.b2 * level - c.a2 * out;
    const double z0 = c.b1 * level - c.a1 * out + z1;
    zi.push_back({z0, z1});
    level = out;
  }
  return zi;
}

Waveform apply_iir_zero_phase(const Waveform& signal, const IirFilterSpec& spec) {
  validate_waveform(signal, "apply_iir_zero_phase");
  if (spec.sample_rate_hz != signal.sample_rate_hz)
    throw ValidationError("apply_iir_zero_phase: filter designed for " +
                          std::to_string(spec.sample_rate_hz) + " Hz, signal is " +
                          std::to_string(signal.sample_rate_hz) + " Hz");
  const std::size_t pad = 3 * static_cast<std::size_t>(spec.order);
  const std::size_t n = signal.size();
  if (n <= pad) {
    std::ostringstream os;
    os << "apply_iir_zero_phase: signal of " << n << " samples must be longer than "
       << pad << " (3 x order) for edge padding";
    throw ValidationError(os.str());
  }

  const auto& x = signal.samples;
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = sosfilt_steady_state(spec);
  auto scaled = [&](double v) {
    auto s = zi;
    for (auto& st : s) {
      st[0] *= v;
      st[1] *= v;
    }
    return s;
  };

  sosfilt(spec, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  sosfilt(spec, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());

  Waveform out = signal;
  out.samples.assign(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                     ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
  return out;
}

}  // namespace pcgnet::dsp
