#include <algorithm>
#include <cmath>
#include <sstream>

// Packed GEMM for every size; the coefficient-based path is alignment-dependent.
#define EIGEN_GEMM_TO_COEFFBASED_THRESHOLD 1
#include <Eigen/Core>

#include "pcgnet/autodiff.hpp"
#include "pcgnet/error.hpp"

namespace pcgnet::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;

inline long ix(std::size_t v) { return static_cast<long>(v); }

void require_same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape())
    throw ValidationError(std::string(op) + ": operands recorded on different tapes");
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw ValidationError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                        shape_str(b));
}

enum class Broadcast { kSame, kLeftScalar, kRightScalar };

Broadcast classify(Var a, Var b, const char* op) {
  require_same_tape(a, b, op);
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (a.size() == b.size() && a.size() == 1) return Broadcast::kSame;
  if (a.size() == 1) return Broadcast::kLeftScalar;
  if (b.size() == 1) return Broadcast::kRightScalar;
  shape_error(op, a.shape(), b.shape());
}

// dst += src, summing into a single element when dst is a broadcast scalar.
void add_into(std::span<double> dst, std::span<const double> src, double factor = 1.0) {
  if (dst.empty()) return;
  if (dst.size() == src.size()) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += factor * src[i];
  } else {
    double acc = 0.0;
    for (double v : src) acc += v;
    dst[0] += factor * acc;
  }
}

template <typename F, typename D>
Var unary(Var x, const char* op, F forward, D derivative) {
  auto xv = x.value();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = forward(xv[i]);
  const std::size_t xid = x.id();
  return x.tape().emit(op, x.shape(), std::move(out), {xid},
                       [xid, derivative](Tape& t, std::size_t self) {
                         auto g = t.grad_of(self);
                         auto gx = t.accum(xid);
                         auto xv = t.value_of(xid);
                         auto yv = t.value_of(self);
                         for (std::size_t i = 0; i < g.size(); ++i)
                           gx[i] += g[i] * derivative(xv[i], yv[i]);
                       });
}

inline double sigmoid_scalar(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

void im2col(const double* x, std::size_t channels, std::size_t h, std::size_t w, double* cols) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* plane = x + c * hw;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        double* row = cols + ((c * 9) + ky * 3 + kx) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          double* dst = row + y * w;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(dst, dst + w, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(sy) * w;
          if (kx == 0) {
            dst[0] = 0.0;
            std::copy(src, src + w - 1, dst + 1);
          } else if (kx == 1) {
            std::copy(src, src + w, dst);
          } else {
            std::copy(src + 1, src + w, dst);
            dst[w - 1] = 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, std::size_t channels, std::size_t h, std::size_t w, double* x) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    double* plane = x + c * hw;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const double* row = cols + ((c * 9) + ky * 3 + kx) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          const double* src = row + y * w;
          double* dst = plane + static_cast<std::size_t>(sy) * w;
          if (kx == 0) {
            for (std::size_t xx = 1; xx < w; ++xx) dst[xx - 1] += src[xx];
          } else if (kx == 1) {
            for (std::size_t xx = 0; xx < w; ++xx) dst[xx] += src[xx];
          } else {
            for (std::size_t xx = 0; xx + 1 < w; ++xx) dst[xx + 1] += src[xx];
          }
        }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Element-wise
// ---------------------------------------------------------------------------

Var add(Var a, Var b) {
  const auto mode = classify(a, b, "add");
  const Shape shape = mode == Broadcast::kLeftScalar ? b.shape() : a.shape();
  auto av = a.value(), bv = b.value();
  std::vector<double> out(numel(shape));
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = av[mode == Broadcast::kLeftScalar ? 0 : i] + bv[mode == Broadcast::kRightScalar ? 0 : i];
  const auto aid = a.id(), bid = b.id();
  return a.tape().emit("add", shape, std::move(out), {aid, bid}, [aid, bid](Tape& t, std::size_t self) {
    auto g = t.grad_of(self);
    add_into(t.accum(aid), g);
    add_into(t.accum(bid), g);
  });
}

Var sub(Var a, Var b) {
  const auto mode = classify(a, b, "sub");
  const Shape shape = mode == Broadcast::kLeftScalar ? b.shape() : a.shape();
  auto av = a.value(), bv = b.value();
  std::vector<double> out(numel(shape));
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = av[mode == Broadcast::kLeftScalar ? 0 : i] - bv[mode == Broadcast::kRightScalar ? 0 : i];
  const auto aid = a.id(), bid = b.id();
  return a.tape().emit("sub", shape, std::move(out), {aid, bid}, [aid, bid](Tape& t, std::size_t self) {
    auto g = t.grad_of(self);
    add_into(t.accum(aid), g);
    add_into(t.accum(bid), g, -1.0);
  });
}

Var mul(Var a, Var b) {
  const auto mode = classify(a, b, "mul");
  const Shape shape = mode == Broadcast::kLeftScalar ? b.shape() : a.shape();
  auto av = a.value(), bv = b.value();
  std::vector<double> out(numel(shape));
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = av[mode == Broadcast::kLeftScalar ? 0 : i] * bv[mode == Broadcast::kRightScalar ? 0 : i];
  const auto aid = a.id(), bid = b.id();
  return a.tape().emit("mul", shape, std::move(out), {aid, bid}, [aid, bid, mode](Tape& t, std::size_t self) {
    auto g = t.grad_of(self);
    auto av = t.value_of(aid), bv = t.value_of(bid);
    auto ga = t.accum(aid), gb = t.accum(bid);
    const bool a_scalar = mode == Broadcast::kLeftScalar;
    const bool b_scalar = mode == Broadcast::kRightScalar;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double ai = av[a_scalar ? 0 : i], bi = bv[b_scalar ? 0 : i];
      if (!ga.empty()) ga[a_scalar ? 0 : i] += g[i] * bi;
      if (!gb.empty()) gb[b_scalar ? 0 : i] += g[i] * ai;
    }
  });
}

Var sigmoid(Var x) {
  return unary(x, "sigmoid", sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return unary(x, "tanh", [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var x) {
  return unary(x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var log(Var x) {
  for (double v : x.value())
    if (!(v > 0.0)) throw ValidationError("log: non-positive input " + std::to_string(v));
  return unary(x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var one_minus(Var x) {
  return unary(x, "one_minus", [](double v) { return 1.0 - v; }, [](double, double) { return -1.0; });
}

Var scale(Var x, double factor) {
  return unary(x, "scale", [factor](double v) { return factor * v; },
               [factor](double, double) { return factor; });
}

// ---------------------------------------------------------------------------
// Reductions and reshapes
// ---------------------------------------------------------------------------

Var sum(Var x) {
  double acc = 0.0;
  for (double v : x.value()) acc += v;
  const auto xid = x.id();
  return x.tape().emit("sum", {1}, {acc}, {xid}, [xid](Tape& t, std::size_t self) {
    const double g = t.grad_of(self)[0];
    for (double& v : t.accum(xid)) v += g;
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.size());
  if (n == 0) throw ValidationError("mean: empty tensor");
  return scale(sum(x), 1.0 / n);
}

Var reshape(Var x, Shape shape) {
  if (numel(shape) != x.size()) shape_error("reshape", x.shape(), shape);
  std::vector<double> out(x.value().begin(), x.value().end());
  const auto xid = x.id();
  return x.tape().emit("reshape", std::move(shape), std::move(out), {xid}, [xid](Tape& t, std::size_t self) {
    add_into(t.accum(xid), t.grad_of(self));
  });
}

Var broadcast_rows(Var v, std::size_t rows) {
  if (v.shape().size() != 1)
    throw ValidationError("broadcast_rows: expected rank-1 tensor, got " + shape_str(v.shape()));
  const std::size_t n = v.size();
  std::vector<double> out(rows * n);
  auto vv = v.value();
  for (std::size_t r = 0; r < rows; ++r) std::copy(vv.begin(), vv.end(), out.begin() + ix(r * n));
  const auto vid = v.id();
  return v.tape().emit("broadcast_rows", {rows, n}, std::move(out), {vid}, [vid, rows, n](Tape& t, std::size_t self) {
    auto g = t.grad_of(self);
    auto gv = t.accum(vid);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < n; ++j) gv[j] += g[r * n + j];
  });
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (as.size() != 2 || bs.size() != 2 || as[1] != bs[0]) shape_error("matmul", as, bs);
  const std::size_t m = as[0], k = as[1], n = bs[1];
  std::vector<double> out(m * n);
  MMap(out.data(), ix(m), ix(n)).noalias() =
      CMap(a.value().data(), ix(m), ix(k)) * CMap(b.value().data(), ix(k), ix(n));
  const auto aid = a.id(), bid = b.id();
  return a.tape().emit("matmul", {m, n}, std::move(out), {aid, bid}, [=](Tape& t, std::size_t self) {
    CMap g(t.grad_of(self).data(), ix(m), ix(n));
    if (auto ga = t.accum(aid); !ga.empty())
      MMap(ga.data(), ix(m), ix(k)).noalias() += g * CMap(t.value_of(bid).data(), ix(k), ix(n)).transpose();
    if (auto gb = t.accum(bid); !gb.empty())
      MMap(gb.data(), ix(k), ix(n)).noalias() += CMap(t.value_of(aid).data(), ix(m), ix(k)).transpose() * g;
  });
}

Var dense(Var x, Var w, Var b) {
  require_same_tape(x, w, "dense");
  require_same_tape(x, b, "dense");
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[0]) shape_error("dense", xs, ws);
  if (b.shape().size() != 1 || b.shape()[0] != ws[1]) shape_error("dense (bias)", ws, b.shape());
  const std::size_t batch = xs[0], in = xs[1], out_dim = ws[1];
  std::vector<double> out(batch * out_dim);
  MMap y(out.data(), ix(batch), ix(out_dim));
  y.noalias() = CMap(x.value().data(), ix(batch), ix(in)) * CMap(w.value().data(), ix(in), ix(out_dim));
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b.value().data(), ix(out_dim));
  const auto xid = x.id(), wid = w.id(), bid = b.id();
  return x.tape().emit("dense", {batch, out_dim}, std::move(out), {xid, wid, bid}, [=](Tape& t, std::size_t self) {
    CMap g(t.grad_of(self).data(), ix(batch), ix(out_dim));
    if (auto gx = t.accum(xid); !gx.empty())
      MMap(gx.data(), ix(batch), ix(in)).noalias() += g * CMap(t.value_of(wid).data(), ix(in), ix(out_dim)).transpose();
    if (auto gw = t.accum(wid); !gw.empty())
      MMap(gw.data(), ix(in), ix(out_dim)).noalias() += CMap(t.value_of(xid).data(), ix(batch), ix(in)).transpose() * g;
    if (auto gb = t.accum(bid); !gb.empty())
      for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t c = 0; c < out_dim; ++c) gb[c] += g(ix(r), ix(c));
  });
}

// ---------------------------------------------------------------------------
// Convolution, pooling, normalisation
// ---------------------------------------------------------------------------

Var conv2d_same(Var x, Var kernels, Var bias) {
  require_same_tape(x, kernels, "conv2d_same");
  require_same_tape(x, bias, "conv2d_same");
  const auto& xs = x.shape();
  const auto& ks = kernels.shape();
  if (xs.size() != 4) throw ValidationError("conv2d_same: input must be [B,C,H,W], got " + shape_str(xs));
  if (ks.size() != 4 || ks[2] != 3 || ks[3] != 3)
    throw ValidationError("conv2d_same: kernels must be [Cout,Cin,3,3], got " + shape_str(ks));
  if (ks[1] != xs[1]) {
    std::ostringstream os;
    os << "conv2d_same: channel mismatch, input has " << xs[1] << " channels but kernels expect " << ks[1];
    throw ValidationError(os.str());
  }
  if (bias.shape().size() != 1 || bias.shape()[0] != ks[0]) shape_error("conv2d_same (bias)", ks, bias.shape());

  const std::size_t batch = xs[0], cin = xs[1], h = xs[2], w = xs[3], cout = ks[0];
  const std::size_t hw = h * w, k9 = cin * 9;
  std::vector<double> out(batch * cout * hw);
  std::vector<double> cols(k9 * hw);
  CMap kmat(kernels.value().data(), ix(cout), ix(k9));
  auto bv = bias.value();
  for (std::size_t b = 0; b < batch; ++b) {
    im2col(x.value().data() + b * cin * hw, cin, h, w, cols.data());
    MMap y(out.data() + b * cout * hw, ix(cout), ix(hw));
    y.noalias() = kmat * CMap(cols.data(), ix(k9), ix(hw));
    for (std::size_t c = 0; c < cout; ++c) y.row(ix(c)).array() += bv[c];
  }

  const auto xid = x.id(), kid = kernels.id(), bid = bias.id();
  return x.tape().emit("conv2d_same", {batch, cout, h, w}, std::move(out), {xid, kid, bid},
                       [=](Tape& t, std::size_t self) {
    auto g = t.grad_of(self);
    auto gx = t.accum(xid);
    auto gk = t.accum(kid);
    auto gb = t.accum(bid);
    auto xv = t.value_of(xid);
    CMap kmat(t.value_of(kid).data(), ix(cout), ix(k9));
    std::vector<double> buf(k9 * hw);
    for (std::size_t b = 0; b < batch; ++b) {
      CMap dy(g.data() + b * cout * hw, ix(cout), ix(hw));
      if (!gk.empty()) {
        im2col(xv.data() + b * cin * hw, cin, h, w, buf.data());
        MMap(gk.data(), ix(cout), ix(k9)).noalias() += dy * CMap(buf.data(), ix(k9), ix(hw)).transpose();
      }
      if (!gx.empty()) {
        MMap(buf.data(), ix(k9), ix(hw)).noalias() = kmat.transpose() * dy;
        col2im_add(buf.data(), cin, h, w, gx.data() + b * cin * hw);
      }
      if (!gb.empty())
        for (std::size_t c = 0; c < cout; ++c) {
          const double* row = dy.data() + c * hw;
          double acc = 0;
          for (std::size_t k = 0; k < hw; ++k) acc += row[k];
          gb[c] += acc;
        }
    }
  });
}

Var maxpool_2x2(Var x) {
  const auto& xs = x.shape();
  if (xs.size() != 4) throw ValidationError("maxpool_2x2: input must be [B,C,H,W], got " + shape_str(xs));
  const std::size_t batch = xs[0], ch = xs[1], h = xs[2], w = xs[3];
  if (h % 2 != 0 || w % 2 != 0)
    throw ValidationError("maxpool_2x2: spatial dims must be even, got " + shape_str(xs));
  const std::size_t oh = h / 2, ow = w / 2;
  auto xv = x.value();
  std::vector<double> out(batch * ch * oh * ow);
  std::vector<std::size_t> argmax(out.size());
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < batch * ch; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j, ++o) {
        std::size_t best = base + (2 * i) * w + 2 * j;
        const std::size_t cand[3] = {best + 1, best + w, best + w + 1};
        for (auto c : cand)
          if (xv[c] > xv[best]) best = c;
        out[o] = xv[best];
        argmax[o] = best;
      }
    }
  }
  const auto xid = x.id();
  return x.tape().emit("maxpool_2x2", {batch, ch, oh, ow}, std::move(out), {xid},
                       [xid, argmax = std::move(argmax)](Tape& t, std::size_t self) {
    auto g = t.grad_of(self);
    auto gx = t.accum(xid);
    for (std::size_t i = 0; i < g.size(); ++i) gx[argmax[i]] += g[i];
  });
}

Var batchnorm2d(Var x, Var gamma, Var beta, const BatchNormBuffers& buffers, NormMode mode) {
  require_same_tape(x, gamma, "batchnorm2d");
  require_same_tape(x, beta, "batchnorm2d");
  const auto& xs = x.shape();
  if (xs.size() != 4) throw ValidationError("batchnorm2d: input must be [B,C,H,W], got " + shape_str(xs));
  const std::size_t batch = xs[0], ch = xs[1], hw = xs[2] * xs[3];
  if (gamma.size() != ch || beta.size() != ch) shape_error("batchnorm2d (affine)", xs, gamma.shape());
  if (!buffers.running_mean || !buffers.running_var || !buffers.batches_tracked)
    throw ValidationError("batchnorm2d: running buffers not bound");
  auto& rmean = buffers.running_mean->value;
  auto& rvar = buffers.running_var->value;
  auto& tracked = buffers.batches_tracked->value;
  if (rmean.size() != ch || rvar.size() != ch)
    throw ValidationError("batchnorm2d: running buffers do not match " + std::to_string(ch) + " channels");

  const std::size_t count = batch * hw;
  const double eps = buffers.epsilon;
  auto xv = x.value();
  auto gv = gamma.value();
  auto bv = beta.value();
  std::vector<double> out(xv.size());
  std::vector<double> invstd(ch);

  if (mode == NormMode::kTrain) {
    if (count < 2) throw ValidationError("batchnorm2d: training needs at least 2 values per channel");
    std::vector<double> xhat(xv.size());
    const bool first = tracked[0] == 0.0;
    for (std::size_t c = 0; c < ch; ++c) {
      double mu = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* p = xv.data() + (b * ch + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) mu += p[i];
      }
      mu /= static_cast<double>(count);
      double var = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* p = xv.data() + (b * ch + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) var += (p[i] - mu) * (p[i] - mu);
      }
      var /= static_cast<double>(count);
      invstd[c] = 1.0 / std::sqrt(var + eps);
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * ch + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          xhat[off + i] = (xv[off + i] - mu) * invstd[c];
          out[off + i] = gv[c] * xhat[off + i] + bv[c];
        }
      }
      const double unbiased = var * static_cast<double>(count) / static_cast<double>(count - 1);
      if (first) {
        rmean[c] = mu;
        rvar[c] = unbiased;
      } else {
        rmean[c] = (1.0 - buffers.momentum) * rmean[c] + buffers.momentum * mu;
        rvar[c] = (1.0 - buffers.momentum) * rvar[c] + buffers.momentum * unbiased;
      }
    }
    tracked[0] += 1.0;

    const auto xid = x.id(), gid = gamma.id(), bid = beta.id();
    return x.tape().emit("batchnorm2d", xs, std::move(out), {xid, gid, bid},
                         [=, xhat = std::move(xhat), invstd = std::move(invstd)](Tape& t, std::size_t self) {
      auto g = t.grad_of(self);
      auto gx = t.accum(xid);
      auto gg = t.accum(gid);
      auto gb = t.accum(bid);
      auto gam = t.value_of(gid);
      const double n = static_cast<double>(count);
      for (std::size_t c = 0; c < ch; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
          const std::size_t off = (b * ch + c) * hw;
          for (std::size_t i = 0; i < hw; ++i) {
            sum_dy += g[off + i];
            sum_dy_xhat += g[off + i] * xhat[off + i];
          }
        }
        if (!gg.empty()) gg[c] += sum_dy_xhat;
        if (!gb.empty()) gb[c] += sum_dy;
        if (gx.empty()) continue;
        const double k = gam[c] * invstd[c] / n;
        for (std::size_t b = 0; b < batch; ++b) {
          const std::size_t off = (b * ch + c) * hw;
          for (std::size_t i = 0; i < hw; ++i)
            gx[off + i] += k * (n * g[off + i] - sum_dy - xhat[off + i] * sum_dy_xhat);
        }
      }
    });
  }

  if (tracked[0] == 0.0)
    throw ValidationError("batchnorm2d: eval mode requested before any training update (" +
                          buffers.running_mean->name + " uninitialised)");
  for (std::size_t c = 0; c < ch; ++c) {
    invstd[c] = 1.0 / std::sqrt(rvar[c] + eps);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * ch + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) out[off + i] = gv[c] * (xv[off + i] - rmean[c]) * invstd[c] + bv[c];
    }
  }
  std::vector<double> mu(rmean.begin(), rmean.end());
  const auto xid = x.id(), gid = gamma.id(), bid = beta.id();
  return x.tape().emit("batchnorm2d_eval", xs, std::move(out), {xid, gid, bid},
                       [=, mu = std::move(mu), invstd = std::move(invstd)](Tape& t, std::size_t self) {
    auto g = t.grad_of(self);
    auto gx = t.accum(xid);
    auto gg = t.accum(gid);
    auto gb = t.accum(bid);
    auto gam = t.value_of(gid);
    auto xv = t.value_of(xid);
    for (std::size_t c = 0; c < ch; ++c) {
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * ch + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          const double xh = (xv[off + i] - mu[c]) * invstd[c];
          if (!gg.empty()) gg[c] += g[off + i] * xh;
          if (!gb.empty()) gb[c] += g[off + i];
          if (!gx.empty()) gx[off + i] += g[off + i] * gam[c] * invstd[c];
        }
      }
    }
  });
}

Var time_step(Var x, std::size_t t_index) {
  const auto& xs = x.shape();
  if (xs.size() != 4) throw ValidationError("time_step: input must be [B,C,H,W], got " + shape_str(xs));
  const std::size_t batch = xs[0], ch = xs[1], h = xs[2], w = xs[3];
  if (t_index >= w) throw ValidationError("time_step: index " + std::to_string(t_index) + " out of range");
  const std::size_t feat = ch * h;
  auto xv = x.value();
  std::vector<double> out(batch * feat);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t f = 0; f < feat; ++f) out[b * feat + f] = xv[(b * feat + f) * w + t_index];
  const auto xid = x.id();
  return x.tape().emit("time_step", {batch, feat}, std::move(out), {xid}, [=](Tape& t, std::size_t self) {
    auto g = t.grad_of(self);
    auto gx = t.accum(xid);
    for (std::size_t i = 0; i < batch * feat; ++i) gx[i * w + t_index] += g[i];
  });
}

Var bce(Var probabilities, std::span<const double> labels) {
  constexpr double kLo = 1e-7, kHi = 1.0 - 1e-7;
  const std::size_t n = probabilities.size();
  if (n == 0) throw ValidationError("bce: empty batch");
  if (labels.size() != n)
    throw ValidationError("bce: " + std::to_string(n) + " predictions but " + std::to_string(labels.size()) + " labels");
  auto p = probabilities.value();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = std::clamp(p[i], kLo, kHi);
    acc += labels[i] * std::log(q) + (1.0 - labels[i]) * std::log(1.0 - q);
  }
  const double loss = -acc / static_cast<double>(n);
  std::vector<double> y(labels.begin(), labels.end());
  const auto pid = probabilities.id();
  return probabilities.tape().emit("bce", {1}, {loss}, {pid}, [pid, n, y = std::move(y)](Tape& t, std::size_t self) {
    const double g = t.grad_of(self)[0];
    auto gp = t.accum(pid);
    auto p = t.value_of(pid);
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i] < kLo || p[i] > kHi) continue;  // clamp is flat outside the interval
      gp[i] += -g / static_cast<double>(n) * (y[i] / p[i] - (1.0 - y[i]) / (1.0 - p[i]));
    }
  });
}

}  // namespace pcgnet::ad
