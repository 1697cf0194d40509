#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <optional>
#include <string>
#include <vector>

#include "pcgnet/autodiff.hpp"
#include "pcgnet/checkpoint.hpp"
#include "pcgnet/features_mel.hpp"

namespace pcgnet::model {

enum class CellMode { kStandard, kHInfinity };
enum class LambdaMode { kScalar, kPerUnit };

std::string to_string(CellMode m);
std::string to_string(LambdaMode m);
CellMode parse_cell_mode(const std::string& s);
LambdaMode parse_lambda_mode(const std::string& s);

struct ModelConfig {
  std::vector<std::size_t> conv_blocks{16, 32, 64};
  std::size_t hidden_size = 128;
  CellMode cell_mode = CellMode::kHInfinity;
  LambdaMode lambda_mode = LambdaMode::kScalar;
  std::size_t n_mels = 64;
  std::size_t n_frames = 38;

  /// Throws ValidationError listing every inconsistency.
  void validate() const;
  std::size_t reduction() const { return std::size_t{1} << conv_blocks.size(); }
  /// n_frames rounded up to a multiple of 2^len(conv_blocks).
  std::size_t padded_frames() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

/// Construction-time shape arithmetic of the network.
struct ShapeReport {
  std::size_t n_mels, n_frames, padded_frames;
  std::size_t feature_channels, feature_height, feature_width;
  std::size_t sequence_length, step_dim, hidden_size;
  std::string to_string() const;
};

ShapeReport shape_report(const ModelConfig& cfg);

// ---------------------------------------------------------------------------
// Recurrent cells
// ---------------------------------------------------------------------------

struct LstmParams {
  ad::ParamPtr w_i, w_f, w_o, w_c;  // [input_dim, hidden]
  ad::ParamPtr u_i, u_f, u_o, u_c;  // [hidden, hidden]
  ad::ParamPtr b_i, b_f, b_o, b_c;  // [hidden]
  ad::ParamPtr k_filter;            // [1] or [hidden]

  std::vector<ad::ParamPtr> all() const;
};

/// Allocates recurrent parameters named "<prefix>.W_i" etc. (zero-filled).
LstmParams make_lstm_params(const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                            LambdaMode lambda_mode);

/// LstmParams bound to one tape.
struct LstmVars {
  ad::Var w_i, w_f, w_o, w_c;
  ad::Var u_i, u_f, u_o, u_c;
  ad::Var b_i, b_f, b_o, b_c;
  ad::Var k_filter;
};

LstmVars bind(ad::Tape& tape, const LstmParams& p);

struct LstmState {
  ad::Var h;  // [B, hidden]
  ad::Var c;  // [B, hidden]
};

LstmState zero_state(ad::Tape& tape, std::size_t batch, std::size_t hidden);

/// W x + U h + b
ad::Var gate_preactivation(ad::Var x, ad::Var h, ad::Var w, ad::Var u, ad::Var b);

/// lambda_h = sigmoid(K_filter), broadcast to [B, hidden] in per-unit mode.
ad::Var hinf_lambda(const LstmVars& p, std::size_t batch);

/// Externally supplied gate values replacing the computed forget gate and/or
/// input gate of the standard cell. `input` maps the computed i_t to the
/// pinned value.
struct PinnedGates {
  std::optional<ad::Var> forget;
  std::function<ad::Var(ad::Var)> input;
};

/// c_t = f_t * c_{t-1} + i_t * c~_t,  h_t = o_t * tanh(c_t)
LstmState standard_lstm_step(ad::Var x, const LstmState& state, const LstmVars& p,
                             const PinnedGates* pinned = nullptr);

/// c_t = (1 - lambda_h) * c_{t-1} + lambda_h * (i_t * c~_t),  h_t = o_t * tanh(c_t);
/// the forget-gate path is never evaluated.
LstmState hinf_lstm_step(ad::Var x, const LstmState& state, const LstmVars& p);

// ---------------------------------------------------------------------------
// Convolutional blocks
// ---------------------------------------------------------------------------

struct ConvLayer {
  ad::ParamPtr weight, bias;  // [Cout, Cin, 3, 3], [Cout]
  ad::ParamPtr gamma, beta;   // [Cout]
  ad::ParamPtr running_mean, running_var, batches_tracked;

  std::vector<ad::ParamPtr> all() const;
  ad::BatchNormBuffers buffers() const;
};

struct ConvBlock {
  ConvLayer first, second;
  std::vector<ad::ParamPtr> all() const;
};

ConvBlock make_conv_block(const std::string& prefix, std::size_t in_channels, std::size_t out_channels);

/// conv -> BN -> ReLU, conv -> BN -> ReLU, 2x2 max-pool.
ad::Var conv_block_forward(ad::Var x, const ConvBlock& block, ad::NormMode mode);

// ---------------------------------------------------------------------------
// Full network
// ---------------------------------------------------------------------------

/// Conv blocks -> frame-axis sequence -> recurrent cell -> dense -> sigmoid.
class HInfModel {
 public:
  HInfModel(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const ShapeReport& shapes() const { return shapes_; }

  /// Every parameter and buffer in a stable order (checkpoint order).
  std::vector<ad::ParamPtr> parameters() const;
  /// Parameters the optimiser updates.
  std::vector<ad::ParamPtr> trainable_parameters() const;

  const std::vector<ConvBlock>& conv_blocks() const { return blocks_; }
  const LstmParams& recurrent() const { return lstm_; }
  const ad::ParamPtr& head_weight() const { return head_w_; }
  const ad::ParamPtr& head_bias() const { return head_b_; }

  /// Marks conv weights and BN affine parameters non-trainable and runs those
  /// BN layers on their running statistics from then on.
  void freeze_conv_stack();
  bool conv_frozen() const { return conv_frozen_; }

  /// Convolutional feature map [B, C', H', W'] for a packed input.
  ad::Var encode(ad::Tape& tape, std::span<const double> input, std::size_t batch, ad::NormMode mode) const;

  /// Probabilities [B] for a packed input of shape (B, 1, n_mels, padded_frames).
  ad::Var forward(ad::Tape& tape, std::span<const double> input, std::size_t batch, ad::NormMode mode) const;

  /// Packs spectrograms into (B, 1, n_mels, padded_frames), zero right-padding frames.
  std::vector<double> pack(const std::vector<const mel::MelSpectrogram*>& batch) const;

  /// Zeroes every weight (K_filter included); BN gamma stays 1.
  void zero_weights();

 private:
  void initialize(std::uint64_t seed);

  ModelConfig cfg_;
  ShapeReport shapes_;
  std::vector<ConvBlock> blocks_;
  LstmParams lstm_;
  ad::ParamPtr head_w_, head_b_;
  bool conv_frozen_ = false;
};

/// Checkpoint metadata helpers: the model config travels with the weights.
std::string model_metadata(const HInfModel& model, double tau, const std::string& mel_fingerprint);

/// Builds an H-infinity model from a standard-cell checkpoint: conv/BN
/// parameters and running stats copied and frozen, head copied and trainable,
/// recurrent parameters freshly initialised and trainable.
HInfModel transfer_and_freeze(const ad::Checkpoint& source, ModelConfig target, std::uint64_t seed);

}  // namespace pcgnet::model
