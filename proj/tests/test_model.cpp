#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "gradcheck_cases.hpp"
#include "oracles.hpp"
#include "pcgnet/checkpoint.hpp"
#include "pcgnet/error.hpp"
#include "pcgnet/model.hpp"
#include "pcgnet/optimizer.hpp"

using namespace pcgnet;
using ad::Parameter;
using ad::Tape;
using ad::Var;
using model::LambdaMode;
using model::LstmState;
using doctest::Approx;

namespace {

std::vector<double> vals(Var v) { return {v.value().begin(), v.value().end()}; }

/// Copies library-side recurrent parameters into the oracle's plain arrays.
oracle::CellWeights to_oracle(const model::LstmParams& p) {
  oracle::CellWeights w;
  w.in = p.w_i->shape[0];
  w.hidden = p.w_i->shape[1];
  w.wi = p.w_i->value, w.wf = p.w_f->value, w.wo = p.w_o->value, w.wc = p.w_c->value;
  w.ui = p.u_i->value, w.uf = p.u_f->value, w.uo = p.u_o->value, w.uc = p.u_c->value;
  w.bi = p.b_i->value, w.bf = p.b_f->value, w.bo = p.b_o->value, w.bc = p.b_c->value;
  w.k = p.k_filter->value;
  return w;
}

model::LstmParams random_cell(std::size_t in, std::size_t hidden, LambdaMode mode, std::uint64_t seed,
                              double scale = 0.8) {
  auto p = model::make_lstm_params("cell", in, hidden, mode);
  std::mt19937_64 rng(seed);
  for (const auto& q : p.all()) gradcases::fill(*q, rng, -scale, scale);
  return p;
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = -1, double hi = 1) {
  std::mt19937_64 rng(seed);
  return oracle::random_vector(n, rng, lo, hi);
}

mel::MelSpectrogram random_spec(std::size_t n_mels, std::size_t frames, std::uint64_t seed) {
  mel::MelSpectrogram s;
  s.n_mels = n_mels;
  s.n_frames = frames;
  for (double v : random_values(n_mels * frames, seed)) s.values.push_back(static_cast<float>(v));
  s.source_id = "r" + std::to_string(seed);
  s.label = static_cast<int>(seed % 2);
  return s;
}

bool same_bytes(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("shape report for the default config") {
  const model::ModelConfig cfg;
  const auto r = model::shape_report(cfg);
  CHECK(r.n_mels == 64);
  CHECK(r.n_frames == 38);
  CHECK(r.padded_frames == 40);
  CHECK(r.feature_channels == 64);
  CHECK(r.feature_height == 8);
  CHECK(r.feature_width == 5);
  CHECK(r.sequence_length == 5);
  CHECK(r.step_dim == 512);
  CHECK(r.to_string().find("sequence length 5") != std::string::npos);
}

TEST_CASE("config validation") {
  model::ModelConfig cfg;
  cfg.n_mels = 60;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.conv_blocks.clear();
  CHECK_THROWS_AS(model::HInfModel(cfg, 0), ValidationError);
  cfg = {};
  CHECK(model::ModelConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());
  CHECK_THROWS_AS(model::parse_cell_mode("gru"), ValidationError);
}

TEST_CASE("conv block halves spatial dims") {
  auto block = model::make_conv_block("b", 1, 16);
  std::mt19937_64 rng(1);
  for (const auto& p : block.all())
    if (p->trainable) gradcases::fill(*p, rng, -0.3, 0.3);
  Tape t;
  auto x = t.constant({1, 1, 64, 40}, random_values(64 * 40, 2));
  auto y = model::conv_block_forward(x, block, ad::NormMode::kTrain);
  CHECK(y.shape() == ad::Shape{1, 16, 32, 20});
}

TEST_CASE("conv block zero input with zero biases gives zeros") {
  auto block = model::make_conv_block("b", 1, 4);
  std::mt19937_64 rng(3);
  gradcases::fill(*block.first.weight, rng);
  gradcases::fill(*block.second.weight, rng);
  Tape t;
  auto y = model::conv_block_forward(t.constant({2, 1, 4, 4}, std::vector<double>(32, 0.0)), block,
                                     ad::NormMode::kTrain);
  for (double v : vals(y)) CHECK(v == 0.0);
}

TEST_CASE("conv block gradient check") {
  auto block = model::make_conv_block("b", 2, 3);
  std::mt19937_64 rng(5);
  for (const auto& p : block.all())
    if (p->trainable) gradcases::fill(*p, rng, -0.5, 0.5);
  for (const auto& p : {block.first.gamma, block.second.gamma}) gradcases::fill(*p, rng, 0.5, 1.5);
  Parameter x("x", {2, 2, 4, 4});
  gradcases::fill(x, rng);
  const auto r = gradcases::weights_for(2 * 3 * 2 * 2, rng);
  std::vector<Parameter*> ps{&x};
  for (const auto& p : block.all())
    if (p->trainable) ps.push_back(p.get());
  const auto rep = ad::finite_diff_check(
      [&](Tape& t) { return gradcases::project(model::conv_block_forward(t.param(x), block, ad::NormMode::kTrain), r); },
      ps, 1e-3);
  INFO(rep.summary());
  CHECK(rep.pass);
}

TEST_CASE("standard cell") {
  SUBCASE("zero everything") {
    auto p = model::make_lstm_params("cell", 3, 4, LambdaMode::kScalar);
    Tape t;
    auto v = model::bind(t, p);
    auto s = model::standard_lstm_step(t.constant({2, 3}, std::vector<double>(6, 0.0)), model::zero_state(t, 2, 4), v);
    for (double e : vals(s.c)) CHECK(e == 0.0);
    for (double e : vals(s.h)) CHECK(e == 0.0);
    CHECK(vals(ad::sigmoid(model::gate_preactivation(t.constant({2, 3}, std::vector<double>(6, 0.0)), s.h, v.w_i,
                                                     v.u_i, v.b_i)))[0] == 0.5);
  }
  SUBCASE("saturated forget gate is pure memory") {
    auto p = random_cell(3, 4, LambdaMode::kScalar, 7, 0.1);
    std::fill(p.b_f->value.begin(), p.b_f->value.end(), 10.0);
    std::fill(p.b_i->value.begin(), p.b_i->value.end(), -10.0);
    const auto c_prev = random_values(8, 8);
    Tape t;
    auto v = model::bind(t, p);
    LstmState s{t.constant({2, 4}, random_values(8, 9)), t.constant({2, 4}, c_prev)};
    auto out = model::standard_lstm_step(t.constant({2, 3}, random_values(6, 10, -0.1, 0.1)), s, v);
    const auto c = vals(out.c);
    for (std::size_t k = 0; k < 8; ++k) CHECK(std::abs(c[k] - c_prev[k]) < 1e-4);
  }
  SUBCASE("matches the scalar oracle over 3 steps") {
    auto p = random_cell(3, 4, LambdaMode::kScalar, 12);
    const auto xs = random_values(3 * 2 * 3, 13);
    Tape t;
    auto v = model::bind(t, p);
    auto s = model::zero_state(t, 2, 4);
    for (std::size_t k = 0; k < 3; ++k)
      s = model::standard_lstm_step(t.constant({2, 3}, {xs.begin() + 6 * k, xs.begin() + 6 * k + 6}), s, v);
    const auto cw = to_oracle(p);
    for (std::size_t b = 0; b < 2; ++b) {
      std::vector<double> h(4, 0.0), c(4, 0.0);
      for (std::size_t k = 0; k < 3; ++k)
        oracle::lstm_step(cw, {xs.begin() + 6 * k + 3 * b, xs.begin() + 6 * k + 3 * b + 3}, h, c);
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(vals(s.h)[b * 4 + j] == Approx(h[j]).epsilon(1e-12));
        CHECK(vals(s.c)[b * 4 + j] == Approx(c[j]).epsilon(1e-12));
      }
    }
  }
  SUBCASE("shape mismatch") {
    auto p = model::make_lstm_params("cell", 3, 4, LambdaMode::kScalar);
    Tape t;
    auto v = model::bind(t, p);
    CHECK_THROWS_AS(model::standard_lstm_step(t.constant({2, 5}, std::vector<double>(10, 0.0)),
                                              model::zero_state(t, 2, 4), v),
                    ValidationError);
  }
}

TEST_CASE("H-infinity cell limits and oracle") {
  const auto x = random_values(6, 21);
  const auto h_prev = random_values(8, 22);
  const auto c_prev = random_values(8, 23);
  auto run = [&](const model::LstmParams& p) {
    Tape t;
    auto v = model::bind(t, p);
    LstmState s{t.constant({2, 4}, h_prev), t.constant({2, 4}, c_prev)};
    auto out = model::hinf_lstm_step(t.constant({2, 3}, x), s, v);
    auto i = vals(ad::sigmoid(model::gate_preactivation(t.constant({2, 3}, x), s.h, v.w_i, v.u_i, v.b_i)));
    auto cand = vals(ad::tanh(model::gate_preactivation(t.constant({2, 3}, x), s.h, v.w_c, v.u_c, v.b_c)));
    std::vector<double> written(8);
    for (std::size_t k = 0; k < 8; ++k) written[k] = i[k] * cand[k];
    return std::make_pair(vals(out.c), written);
  };
  for (auto mode : {LambdaMode::kScalar, LambdaMode::kPerUnit}) {
    CAPTURE(static_cast<int>(mode));
    auto p = random_cell(3, 4, mode, 24);
    std::fill(p.k_filter->value.begin(), p.k_filter->value.end(), -30.0);
    auto [c_ret, unused] = run(p);
    for (std::size_t k = 0; k < 8; ++k) CHECK(std::abs(c_ret[k] - c_prev[k]) <= 1e-9);
    std::fill(p.k_filter->value.begin(), p.k_filter->value.end(), 30.0);
    auto [c_rep, written] = run(p);
    for (std::size_t k = 0; k < 8; ++k) CHECK(std::abs(c_rep[k] - written[k]) <= 1e-9);

    std::fill(p.k_filter->value.begin(), p.k_filter->value.end(), 0.0);
    Tape t;
    auto v = model::bind(t, p);
    LstmState s{t.constant({2, 4}, h_prev), t.constant({2, 4}, c_prev)};
    auto out = model::hinf_lstm_step(t.constant({2, 3}, x), s, v);
    const auto cw = to_oracle(p);
    for (std::size_t b = 0; b < 2; ++b) {
      std::vector<double> h(h_prev.begin() + 4 * b, h_prev.begin() + 4 * b + 4);
      std::vector<double> c(c_prev.begin() + 4 * b, c_prev.begin() + 4 * b + 4);
      oracle::hinf_step(cw, {x.begin() + 3 * b, x.begin() + 3 * b + 3}, h, c);
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(std::abs(vals(out.c)[b * 4 + j] - c[j]) <= 1e-12);
        CHECK(std::abs(vals(out.h)[b * 4 + j] - h[j]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("H-infinity cell equals the pinned standard cell") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (auto mode : {LambdaMode::kScalar, LambdaMode::kPerUnit}) {
      auto p = random_cell(3, 4, mode, 100 + seed, 1.5);
      const auto x = random_values(6, 200 + seed), h0 = random_values(8, 300 + seed), c0 = random_values(8, 400 + seed);
      Tape t;
      auto v = model::bind(t, p);
      LstmState s{t.constant({2, 4}, h0), t.constant({2, 4}, c0)};
      auto hinf = model::hinf_lstm_step(t.constant({2, 3}, x), s, v);
      Var lambda = model::hinf_lambda(v, 2);
      model::PinnedGates pin;
      pin.forget = ad::one_minus(lambda);
      pin.input = [lambda](Var i) { return ad::mul(lambda, i); };
      auto std_cell = model::standard_lstm_step(t.constant({2, 3}, x), s, v, &pin);
      for (std::size_t k = 0; k < 8; ++k) {
        CHECK(std::abs(vals(hinf.c)[k] - vals(std_cell.c)[k]) <= 1e-12);
        CHECK(std::abs(vals(hinf.h)[k] - vals(std_cell.h)[k]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("recurrent cell gradient checks") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    CAPTURE(seed);
    auto a = gradcases::standard_lstm(seed);
    INFO(a.summary());
    CHECK(a.pass);
    auto b = gradcases::hinf_lstm(seed, LambdaMode::kScalar);
    INFO(b.summary());
    CHECK(b.pass);
    auto c = gradcases::hinf_lstm(seed, LambdaMode::kPerUnit);
    INFO(c.summary());
    CHECK(c.pass);
  }
}

TEST_CASE("forget-gate parameters get no gradient in H-infinity mode") {
  model::ModelConfig cfg;
  cfg.conv_blocks = {4};
  cfg.n_mels = 8;
  cfg.n_frames = 6;
  cfg.hidden_size = 5;
  model::HInfModel net(cfg, 1);
  const auto input = random_values(2 * 8 * 6, 3);
  for (const auto& p : net.parameters()) p->zero_grad();
  Tape t;
  t.backward(ad::mean(net.forward(t, input, 2, ad::NormMode::kTrain)));
  const auto& r = net.recurrent();
  for (const auto& p : {r.w_f, r.u_f, r.b_f}) {
    CHECK_FALSE(p->trainable);
    for (double g : p->grad) CHECK(g == 0.0);
  }
  bool any = false;
  for (double g : r.k_filter->grad) any = any || g != 0.0;
  CHECK(any);
  const auto trainable = net.trainable_parameters();
  CHECK(std::none_of(trainable.begin(), trainable.end(), [&](const auto& p) { return p == r.w_f; }));
}

TEST_CASE("K_filter gradient flows on random batches") {
  int nonzero = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    model::ModelConfig cfg;
    cfg.conv_blocks = {4, 4};
    cfg.n_mels = 8;
    cfg.n_frames = 8;
    cfg.hidden_size = 6;
    model::HInfModel net(cfg, seed);
    net.recurrent().k_filter->zero_grad();
    Tape t;
    auto p = net.forward(t, random_values(3 * 8 * 8, seed + 50), 3, ad::NormMode::kTrain);
    t.backward(ad::bce(p, std::vector<double>{1, 0, 1}));
    if (net.recurrent().k_filter->grad[0] != 0.0) ++nonzero;
  }
  CHECK(nonzero >= 1);
}

TEST_CASE("retention Jacobian shrinks as K_filter grows") {
  // With U = 0 the only path from c_0 to c_T runs through the retained term,
  // so dc_T/dc_0 = (1 - lambda)^T exactly.
  double previous = 0;
  for (double k : {3.0, 1.0, 0.0, -1.0, -3.0}) {
    auto p = random_cell(3, 4, LambdaMode::kScalar, 31);
    for (const auto& u : {p.u_i, p.u_f, p.u_o, p.u_c}) std::fill(u->value.begin(), u->value.end(), 0.0);
    p.k_filter->value = {k};
    Parameter c0("c0", {1, 4});
    c0.value = random_values(4, 32);
    Tape t;
    auto v = model::bind(t, p);
    LstmState s{t.constant({1, 4}, std::vector<double>(4, 0.0)), t.param(c0)};
    for (std::size_t step = 0; step < 10; ++step)
      s = model::hinf_lstm_step(t.constant({1, 3}, random_values(3, 40 + step)), s, v);
    c0.zero_grad();
    t.backward(ad::sum(s.c));
    const double lambda = oracle::sigmoid(k);
    for (double g : c0.grad) {
      CHECK(g == Approx(std::pow(1 - lambda, 10)).epsilon(1e-10));
      CHECK(std::abs(g) > previous);
    }
    previous = std::abs(c0.grad[0]);
  }
}

TEST_CASE("model forward") {
  SUBCASE("default shapes and output range") {
    model::HInfModel net(model::ModelConfig{}, 3);
    std::vector<mel::MelSpectrogram> specs;
    for (std::uint64_t k = 0; k < 4; ++k) specs.push_back(random_spec(64, 38, k));
    std::vector<const mel::MelSpectrogram*> batch;
    for (const auto& s : specs) batch.push_back(&s);
    const auto input = net.pack(batch);
    CHECK(input.size() == 4u * 64 * 40);
    for (std::size_t m = 0; m < 64; ++m) {
      CHECK(input[m * 40 + 38] == 0.0);
      CHECK(input[m * 40 + 39] == 0.0);
    }
    Tape t;
    auto features = net.encode(t, input, 4, ad::NormMode::kTrain);
    CHECK(features.shape() == ad::Shape{4, 64, 8, 5});
    Tape t2;
    auto p = net.forward(t2, input, 4, ad::NormMode::kTrain);
    CHECK(p.shape() == ad::Shape{4});
    for (double v : vals(p)) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
  SUBCASE("zero weights give exactly one half") {
    model::ModelConfig cfg;
    cfg.conv_blocks = {4, 4};
    cfg.n_mels = 16;
    cfg.n_frames = 10;
    model::HInfModel net(cfg, 3);
    net.zero_weights();
    Tape t;
    auto p = net.forward(t, random_values(2 * 16 * 12, 7), 2, ad::NormMode::kTrain);
    for (double v : vals(p)) CHECK(v == 0.5);
  }
  SUBCASE("deterministic for a seed") {
    model::ModelConfig cfg;
    cfg.conv_blocks = {4, 8};
    cfg.n_mels = 16;
    cfg.n_frames = 12;
    const auto input = random_values(3 * 16 * 12, 9);
    model::HInfModel a(cfg, 42), b(cfg, 42);
    Tape ta, tb;
    const auto pa = vals(a.forward(ta, input, 3, ad::NormMode::kTrain));
    const auto pb = vals(b.forward(tb, input, 3, ad::NormMode::kTrain));
    CHECK(same_bytes(pa, pb));
  }
  SUBCASE("eval before any training update is an error") {
    model::HInfModel net(model::ModelConfig{}, 1);
    Tape t;
    CHECK_THROWS_AS(net.forward(t, std::vector<double>(64 * 40, 0.1), 1, ad::NormMode::kEval), ValidationError);
  }
  SUBCASE("bad spectrogram shape") {
    model::HInfModel net(model::ModelConfig{}, 1);
    auto s = random_spec(32, 38, 1);
    CHECK_THROWS_AS(net.pack({&s}), ValidationError);
  }
}

TEST_CASE("initialisation") {
  model::HInfModel net(model::ModelConfig{}, 5);
  const auto& r = net.recurrent();
  CHECK(r.k_filter->value == std::vector<double>{0.0});
  for (double b : r.b_i->value) CHECK(b == 0.0);
  // U matrices are orthogonal: U^T U = I
  const auto& u = r.u_c->value;
  const std::size_t n = r.u_c->shape[0];
  for (std::size_t a = 0; a < n; a += 17)
    for (std::size_t b = 0; b < n; b += 13) {
      double dot = 0;
      for (std::size_t k = 0; k < n; ++k) dot += u[k * n + a] * u[k * n + b];
      CHECK(dot == Approx(a == b ? 1.0 : 0.0).epsilon(1e-10));
    }
  const double bound = 1.0 / std::sqrt(9.0);
  for (double w : net.conv_blocks()[0].first.weight->value) CHECK(std::abs(w) <= bound);
}

TEST_CASE("sequence-length covariance under trailing zero frames" * doctest::may_fail()) {
  // A clip whose last 8 frames are zero, fed once with 40 frames and once
  // truncated to 32, both in eval mode with shared weights and statistics.
  model::ModelConfig long_cfg;
  long_cfg.n_frames = 40;
  model::ModelConfig short_cfg;
  short_cfg.n_frames = 32;
  model::HInfModel a(long_cfg, 17), b(short_cfg, 17);
  std::vector<double> warm = random_values(4 * 64 * 40, 18);
  {
    Tape t;
    a.forward(t, warm, 4, ad::NormMode::kTrain);
  }
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t k = 0; k < pa.size(); ++k) pb[k]->value = pa[k]->value;
  auto spec = random_spec(64, 32, 19);
  const auto in_short = b.pack({&spec});
  const auto in_long = a.pack({&spec});
  Tape ta, tb;
  const double ya = a.forward(ta, in_long, 1, ad::NormMode::kEval).item();
  const double yb = b.forward(tb, in_short, 1, ad::NormMode::kEval).item();
  MESSAGE("covariance gap: " << std::abs(ya - yb));
  CHECK(std::abs(ya - yb) < 1e-3);
}

TEST_CASE("transfer and freeze") {
  model::ModelConfig src_cfg;
  src_cfg.cell_mode = model::CellMode::kStandard;
  src_cfg.conv_blocks = {4, 8};
  src_cfg.n_mels = 16;
  src_cfg.n_frames = 12;
  src_cfg.hidden_size = 6;
  model::HInfModel src(src_cfg, 9);
  const auto warm = random_values(4 * 16 * 12, 10);
  {
    Tape t;
    src.forward(t, warm, 4, ad::NormMode::kTrain);
  }
  const auto path = std::filesystem::temp_directory_path() / "pcgnet_transfer_src.ckpt";
  ad::save_checkpoint(path, src.parameters(), model::model_metadata(src, 0.5, "fp"));
  const auto ckpt = ad::read_checkpoint(path);

  auto target_cfg = src_cfg;
  target_cfg.cell_mode = model::CellMode::kHInfinity;
  auto tgt = model::transfer_and_freeze(ckpt, target_cfg, 77);
  CHECK(tgt.conv_frozen());
  CHECK(tgt.config().cell_mode == model::CellMode::kHInfinity);

  SUBCASE("conv stack output matches the source") {
    Tape ts, tt;
    const auto a = vals(src.encode(ts, warm, 4, ad::NormMode::kEval));
    const auto b = vals(tgt.encode(tt, warm, 4, ad::NormMode::kTrain));  // frozen stack forces eval
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-6);
  }
  SUBCASE("head copied, recurrent fresh") {
    CHECK(tgt.head_weight()->value == ckpt.find("head.weight")->value);
    CHECK(tgt.head_weight()->trainable);
    CHECK(tgt.recurrent().k_filter->trainable);
    CHECK(tgt.recurrent().k_filter->value == std::vector<double>{0.0});
  }
  SUBCASE("ten optimiser steps leave frozen tensors byte-identical") {
    std::vector<std::vector<double>> before;
    std::vector<ad::ParamPtr> frozen, moving;
    for (const auto& p : tgt.parameters()) {
      if (p->name.rfind("block", 0) == 0) frozen.push_back(p), before.push_back(p->value);
    }
    const auto w_i = tgt.recurrent().w_i->value;
    const auto k0 = tgt.recurrent().k_filter->value;
    train::Adam adam(tgt.parameters());
    for (int step = 0; step < 10; ++step) {
      adam.zero_grad();
      Tape t;
      auto p = tgt.forward(t, random_values(4 * 16 * 12, 500 + step), 4, ad::NormMode::kTrain);
      t.backward(ad::bce(p, std::vector<double>{1, 0, 0, 1}));
      adam.step();
    }
    for (std::size_t k = 0; k < frozen.size(); ++k) {
      CAPTURE(frozen[k]->name);
      CHECK(same_bytes(frozen[k]->value, before[k]));
    }
    CHECK(tgt.recurrent().w_i->value != w_i);
    CHECK(tgt.recurrent().k_filter->value != k0);
  }
  SUBCASE("mismatched conv shapes name the parameter") {
    auto bad = target_cfg;
    bad.conv_blocks = {4, 16};
    try {
      model::transfer_and_freeze(ckpt, bad, 1);
      FAIL("expected a shape error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("block1.conv0.weight") != std::string::npos);
    }
  }
  SUBCASE("source must be a standard cell") {
    const auto p2 = std::filesystem::temp_directory_path() / "pcgnet_transfer_hinf.ckpt";
    ad::save_checkpoint(p2, tgt.parameters(), model::model_metadata(tgt, 0.5, "fp"));
    CHECK_THROWS_AS(model::transfer_and_freeze(ad::read_checkpoint(p2), target_cfg, 1), ValidationError);
    std::filesystem::remove(p2);
  }
  std::filesystem::remove(path);
}
