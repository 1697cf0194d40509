#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "pcgnet/error.hpp"
#include "pcgnet/model.hpp"

namespace pcgnet::model {

using nlohmann::json;
using ad::NormMode;
using ad::ParamPtr;
using ad::Parameter;
using ad::Tape;
using ad::Var;

std::string to_string(CellMode m) { return m == CellMode::kStandard ? "standard" : "h_infinity"; }
std::string to_string(LambdaMode m) { return m == LambdaMode::kScalar ? "scalar" : "per_unit"; }

CellMode parse_cell_mode(const std::string& s) {
  if (s == "standard") return CellMode::kStandard;
  if (s == "h_infinity" || s == "hinf") return CellMode::kHInfinity;
  throw ValidationError("unknown cell_mode '" + s + "' (expected standard|h_infinity)");
}

LambdaMode parse_lambda_mode(const std::string& s) {
  if (s == "scalar") return LambdaMode::kScalar;
  if (s == "per_unit") return LambdaMode::kPerUnit;
  throw ValidationError("unknown lambda_mode '" + s + "' (expected scalar|per_unit)");
}

// ---------------------------------------------------------------------------
// Config and shapes
// ---------------------------------------------------------------------------

void ModelConfig::validate() const {
  std::vector<std::string> problems;
  if (conv_blocks.empty()) problems.push_back("conv_blocks must be non-empty");
  for (auto c : conv_blocks)
    if (c == 0) problems.push_back("conv block channel counts must be positive");
  if (hidden_size == 0) problems.push_back("hidden_size must be positive");
  if (n_mels == 0 || n_frames == 0) problems.push_back("input shape must be positive");
  if (!conv_blocks.empty() && conv_blocks.size() < 16 && n_mels % reduction() != 0) {
    std::ostringstream os;
    os << "n_mels = " << n_mels << " is not divisible by 2^" << conv_blocks.size() << " = " << reduction();
    problems.push_back(os.str());
  }
  if (!problems.empty()) {
    std::string msg = "invalid model config:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw ValidationError(msg);
  }
}

std::size_t ModelConfig::padded_frames() const {
  const std::size_t r = reduction();
  return (n_frames + r - 1) / r * r;
}

std::string ModelConfig::to_json() const {
  json j = {{"conv_blocks", conv_blocks},
            {"hidden_size", hidden_size},
            {"cell_mode", model::to_string(cell_mode)},
            {"lambda_mode", model::to_string(lambda_mode)},
            {"n_mels", n_mels},
            {"n_frames", n_frames}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig cfg;
  try {
    const json j = json::parse(text);
    cfg.conv_blocks = j.at("conv_blocks").get<std::vector<std::size_t>>();
    cfg.hidden_size = j.at("hidden_size").get<std::size_t>();
    cfg.cell_mode = parse_cell_mode(j.at("cell_mode").get<std::string>());
    cfg.lambda_mode = parse_lambda_mode(j.at("lambda_mode").get<std::string>());
    cfg.n_mels = j.at("n_mels").get<std::size_t>();
    cfg.n_frames = j.at("n_frames").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model config: ") + e.what());
  }
  return cfg;
}

std::string ShapeReport::to_string() const {
  std::ostringstream os;
  os << "input (" << n_mels << "," << n_frames << ") padded to (" << n_mels << "," << padded_frames
     << "); feature map (" << feature_channels << "," << feature_height << "," << feature_width
     << "); sequence length " << sequence_length << ", step dim " << step_dim << ", hidden "
     << hidden_size;
  return os.str();
}

ShapeReport shape_report(const ModelConfig& cfg) {
  cfg.validate();
  ShapeReport r{};
  r.n_mels = cfg.n_mels;
  r.n_frames = cfg.n_frames;
  r.padded_frames = cfg.padded_frames();
  r.feature_channels = cfg.conv_blocks.back();
  r.feature_height = cfg.n_mels / cfg.reduction();
  r.feature_width = r.padded_frames / cfg.reduction();
  r.sequence_length = r.feature_width;
  r.step_dim = r.feature_channels * r.feature_height;
  r.hidden_size = cfg.hidden_size;
  return r;
}

// ---------------------------------------------------------------------------
// Recurrent cells
// ---------------------------------------------------------------------------

std::vector<ParamPtr> LstmParams::all() const {
  return {w_i, w_f, w_o, w_c, u_i, u_f, u_o, u_c, b_i, b_f, b_o, b_c, k_filter};
}

LstmParams make_lstm_params(const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                            LambdaMode lambda_mode) {
  auto make = [&](const char* name, ad::Shape shape) {
    return std::make_shared<Parameter>(prefix + "." + name, std::move(shape));
  };
  LstmParams p;
  p.w_i = make("W_i", {input_dim, hidden});
  p.w_f = make("W_f", {input_dim, hidden});
  p.w_o = make("W_o", {input_dim, hidden});
  p.w_c = make("W_c", {input_dim, hidden});
  p.u_i = make("U_i", {hidden, hidden});
  p.u_f = make("U_f", {hidden, hidden});
  p.u_o = make("U_o", {hidden, hidden});
  p.u_c = make("U_c", {hidden, hidden});
  p.b_i = make("b_i", {hidden});
  p.b_f = make("b_f", {hidden});
  p.b_o = make("b_o", {hidden});
  p.b_c = make("b_c", {hidden});
  p.k_filter = make("K_filter", {lambda_mode == LambdaMode::kScalar ? std::size_t{1} : hidden});
  return p;
}

LstmVars bind(Tape& tape, const LstmParams& p) {
  return {tape.param(*p.w_i), tape.param(*p.w_f), tape.param(*p.w_o), tape.param(*p.w_c),
          tape.param(*p.u_i), tape.param(*p.u_f), tape.param(*p.u_o), tape.param(*p.u_c),
          tape.param(*p.b_i), tape.param(*p.b_f), tape.param(*p.b_o), tape.param(*p.b_c),
          tape.param(*p.k_filter)};
}

LstmState zero_state(Tape& tape, std::size_t batch, std::size_t hidden) {
  return {tape.constant({batch, hidden}, std::vector<double>(batch * hidden, 0.0)),
          tape.constant({batch, hidden}, std::vector<double>(batch * hidden, 0.0))};
}

Var gate_preactivation(Var x, Var h, Var w, Var u, Var b) {
  return ad::add(ad::dense(x, w, b), ad::matmul(h, u));
}

Var hinf_lambda(const LstmVars& p, std::size_t batch) {
  Var lambda = ad::sigmoid(p.k_filter);
  if (lambda.size() == 1) return lambda;
  return ad::broadcast_rows(lambda, batch);
}

namespace {

void check_step_shapes(Var x, const LstmState& s, const LstmVars& p) {
  const auto& xs = x.shape();
  const auto& ws = p.w_i.shape();
  if (xs.size() != 2 || xs[1] != ws[0])
    throw ValidationError("lstm step: input " + ad::shape_str(xs) + " incompatible with W " + ad::shape_str(ws));
  const ad::Shape state_shape{xs[0], ws[1]};
  if (s.h.shape() != state_shape || s.c.shape() != state_shape)
    throw ValidationError("lstm step: state shapes " + ad::shape_str(s.h.shape()) + "/" +
                          ad::shape_str(s.c.shape()) + " expected " + ad::shape_str(state_shape));
}

}  // namespace

LstmState standard_lstm_step(Var x, const LstmState& s, const LstmVars& p, const PinnedGates* pinned) {
  check_step_shapes(x, s, p);
  Var i = ad::sigmoid(gate_preactivation(x, s.h, p.w_i, p.u_i, p.b_i));
  Var o = ad::sigmoid(gate_preactivation(x, s.h, p.w_o, p.u_o, p.b_o));
  Var cand = ad::tanh(gate_preactivation(x, s.h, p.w_c, p.u_c, p.b_c));
  Var f = (pinned && pinned->forget) ? *pinned->forget
                                     : ad::sigmoid(gate_preactivation(x, s.h, p.w_f, p.u_f, p.b_f));
  if (pinned && pinned->input) i = pinned->input(i);
  Var c = ad::add(ad::mul(f, s.c), ad::mul(i, cand));
  Var h = ad::mul(o, ad::tanh(c));
  return {h, c};
}

LstmState hinf_lstm_step(Var x, const LstmState& s, const LstmVars& p) {
  check_step_shapes(x, s, p);
  Var i = ad::sigmoid(gate_preactivation(x, s.h, p.w_i, p.u_i, p.b_i));
  Var o = ad::sigmoid(gate_preactivation(x, s.h, p.w_o, p.u_o, p.b_o));
  Var cand = ad::tanh(gate_preactivation(x, s.h, p.w_c, p.u_c, p.b_c));
  Var lambda = hinf_lambda(p, x.shape()[0]);
  Var retained = ad::mul(ad::one_minus(lambda), s.c);
  Var written = ad::mul(lambda, ad::mul(i, cand));
  Var c = ad::add(retained, written);
  Var h = ad::mul(o, ad::tanh(c));
  return {h, c};
}

// ---------------------------------------------------------------------------
// Convolutional blocks
// ---------------------------------------------------------------------------

std::vector<ParamPtr> ConvLayer::all() const {
  return {weight, bias, gamma, beta, running_mean, running_var, batches_tracked};
}

ad::BatchNormBuffers ConvLayer::buffers() const {
  ad::BatchNormBuffers b;
  b.running_mean = running_mean.get();
  b.running_var = running_var.get();
  b.batches_tracked = batches_tracked.get();
  return b;
}

std::vector<ParamPtr> ConvBlock::all() const {
  auto v = first.all();
  auto w = second.all();
  v.insert(v.end(), w.begin(), w.end());
  return v;
}

namespace {

ConvLayer make_conv_layer(const std::string& prefix, std::size_t cin, std::size_t cout) {
  ConvLayer l;
  l.weight = std::make_shared<Parameter>(prefix + ".weight", ad::Shape{cout, cin, 3, 3});
  l.bias = std::make_shared<Parameter>(prefix + ".bias", ad::Shape{cout});
  l.gamma = std::make_shared<Parameter>(prefix + ".bn.gamma", ad::Shape{cout}, 1.0);
  l.beta = std::make_shared<Parameter>(prefix + ".bn.beta", ad::Shape{cout});
  l.running_mean = std::make_shared<Parameter>(prefix + ".bn.running_mean", ad::Shape{cout}, 0.0, false);
  l.running_var = std::make_shared<Parameter>(prefix + ".bn.running_var", ad::Shape{cout}, 1.0, false);
  l.batches_tracked = std::make_shared<Parameter>(prefix + ".bn.batches_tracked", ad::Shape{1}, 0.0, false);
  return l;
}

Var conv_layer_forward(Var x, const ConvLayer& l, NormMode mode) {
  Tape& t = x.tape();
  Var y = ad::conv2d_same(x, t.param(*l.weight), t.param(*l.bias));
  y = ad::batchnorm2d(y, t.param(*l.gamma), t.param(*l.beta), l.buffers(), mode);
  return ad::relu(y);
}

void fill_uniform(Parameter& p, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : p.value) v = dist(rng);
}

void fill_orthogonal(Parameter& p, std::mt19937_64& rng) {
  const auto n = static_cast<Eigen::Index>(p.shape[0]);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) a(r, c) = dist(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < n; ++c)
    if (r(c, c) < 0) q.col(c) *= -1.0;
  for (Eigen::Index r2 = 0; r2 < n; ++r2)
    for (Eigen::Index c = 0; c < n; ++c) p.value[static_cast<std::size_t>(r2 * n + c)] = q(r2, c);
}

}  // namespace

ConvBlock make_conv_block(const std::string& prefix, std::size_t in_channels, std::size_t out_channels) {
  return {make_conv_layer(prefix + ".conv0", in_channels, out_channels),
          make_conv_layer(prefix + ".conv1", out_channels, out_channels)};
}

Var conv_block_forward(Var x, const ConvBlock& block, NormMode mode) {
  Var y = conv_layer_forward(x, block.first, mode);
  y = conv_layer_forward(y, block.second, mode);
  return ad::maxpool_2x2(y);
}

// ---------------------------------------------------------------------------
// HInfModel
// ---------------------------------------------------------------------------

HInfModel::HInfModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), shapes_(shape_report(cfg_)) {
  std::size_t in = 1;
  for (std::size_t b = 0; b < cfg_.conv_blocks.size(); ++b) {
    blocks_.push_back(make_conv_block("block" + std::to_string(b), in, cfg_.conv_blocks[b]));
    in = cfg_.conv_blocks[b];
  }
  lstm_ = make_lstm_params("lstm", shapes_.step_dim, cfg_.hidden_size, cfg_.lambda_mode);
  if (cfg_.cell_mode == CellMode::kHInfinity) {
    lstm_.w_f->trainable = false;
    lstm_.u_f->trainable = false;
    lstm_.b_f->trainable = false;
  } else {
    lstm_.k_filter->trainable = false;
  }
  head_w_ = std::make_shared<Parameter>("head.weight", ad::Shape{cfg_.hidden_size, 1});
  head_b_ = std::make_shared<Parameter>("head.bias", ad::Shape{1});
  initialize(seed);
}

void HInfModel::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& block : blocks_) {
    for (const ConvLayer* l : {&block.first, &block.second}) {
      const double fan_in = static_cast<double>(l->weight->shape[1] * 9);
      fill_uniform(*l->weight, 1.0 / std::sqrt(fan_in), rng);
    }
  }
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(shapes_.step_dim));
  for (const auto& w : {lstm_.w_i, lstm_.w_f, lstm_.w_o, lstm_.w_c}) fill_uniform(*w, in_bound, rng);
  for (const auto& u : {lstm_.u_i, lstm_.u_f, lstm_.u_o, lstm_.u_c}) fill_orthogonal(*u, rng);
  fill_uniform(*head_w_, 1.0 / std::sqrt(static_cast<double>(cfg_.hidden_size)), rng);
}

std::vector<ParamPtr> HInfModel::parameters() const {
  std::vector<ParamPtr> out;
  for (const auto& b : blocks_) {
    auto v = b.all();
    out.insert(out.end(), v.begin(), v.end());
  }
  auto r = lstm_.all();
  out.insert(out.end(), r.begin(), r.end());
  out.push_back(head_w_);
  out.push_back(head_b_);
  return out;
}

std::vector<ParamPtr> HInfModel::trainable_parameters() const {
  std::vector<ParamPtr> out;
  for (const auto& p : parameters())
    if (p->trainable) out.push_back(p);
  return out;
}

void HInfModel::freeze_conv_stack() {
  for (const auto& b : blocks_)
    for (const ConvLayer* l : {&b.first, &b.second})
      for (const auto& p : {l->weight, l->bias, l->gamma, l->beta}) p->trainable = false;
  conv_frozen_ = true;
}

void HInfModel::zero_weights() {
  for (const auto& p : parameters()) {
    if (p->name.ends_with(".bn.gamma") || p->name.find(".bn.running") != std::string::npos ||
        p->name.ends_with(".bn.batches_tracked"))
      continue;
    std::fill(p->value.begin(), p->value.end(), 0.0);
  }
}

Var HInfModel::encode(Tape& tape, std::span<const double> input, std::size_t batch, NormMode mode) const {
  const ad::Shape shape{batch, 1, cfg_.n_mels, shapes_.padded_frames};
  if (input.size() != ad::numel(shape))
    throw ValidationError("model input holds " + std::to_string(input.size()) + " values, expected shape " +
                          ad::shape_str(shape));
  Var x = tape.constant(shape, std::vector<double>(input.begin(), input.end()));
  const NormMode conv_mode = conv_frozen_ ? NormMode::kEval : mode;
  for (const auto& block : blocks_) x = conv_block_forward(x, block, conv_mode);
  return x;
}

Var HInfModel::forward(Tape& tape, std::span<const double> input, std::size_t batch, NormMode mode) const {
  Var features = encode(tape, input, batch, mode);
  LstmVars vars = bind(tape, lstm_);
  LstmState state = zero_state(tape, batch, cfg_.hidden_size);
  for (std::size_t t = 0; t < shapes_.sequence_length; ++t) {
    Var step = ad::time_step(features, t);
    state = cfg_.cell_mode == CellMode::kHInfinity ? hinf_lstm_step(step, state, vars)
                                                   : standard_lstm_step(step, state, vars);
  }
  Var logits = ad::dense(state.h, tape.param(*head_w_), tape.param(*head_b_));
  return ad::reshape(ad::sigmoid(logits), {batch});
}

std::vector<double> HInfModel::pack(const std::vector<const mel::MelSpectrogram*>& batch) const {
  const std::size_t frames = shapes_.padded_frames;
  std::vector<double> out(batch.size() * cfg_.n_mels * frames, 0.0);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& s = *batch[b];
    if (s.n_mels != cfg_.n_mels || s.n_frames > frames)
      throw ValidationError("spectrogram '" + s.source_id + "' has shape (" + std::to_string(s.n_mels) + "," +
                            std::to_string(s.n_frames) + "), model expects (" + std::to_string(cfg_.n_mels) +
                            ", <=" + std::to_string(frames) + ")");
    for (std::size_t m = 0; m < s.n_mels; ++m)
      for (std::size_t f = 0; f < s.n_frames; ++f)
        out[(b * cfg_.n_mels + m) * frames + f] = s.at(m, f);
  }
  return out;
}

std::string model_metadata(const HInfModel& model, double tau, const std::string& mel_fingerprint) {
  json j = {{"model", json::parse(model.config().to_json())},
            {"tau", tau},
            {"mel_fingerprint", mel_fingerprint},
            {"conv_frozen", model.conv_frozen()}};
  return j.dump();
}

HInfModel transfer_and_freeze(const ad::Checkpoint& source, ModelConfig target, std::uint64_t seed) {
  ModelConfig source_cfg;
  try {
    const json meta = json::parse(source.metadata_json);
    source_cfg = ModelConfig::from_json(meta.at("model").dump());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("source checkpoint lacks a model config: ") + e.what());
  }
  if (source_cfg.cell_mode != CellMode::kStandard)
    throw ValidationError("transfer_and_freeze: source checkpoint must use the standard cell");
  target.cell_mode = CellMode::kHInfinity;
  HInfModel model(std::move(target), seed);
  const std::vector<std::string> allow{"block", "head."};
  ad::load_parameters(source, model.parameters(), &allow);
  model.freeze_conv_stack();
  return model;
}

}  // namespace pcgnet::model
