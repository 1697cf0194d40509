#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pcgnet::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// A named persistent array that outlives any single tape: trainable weights
/// as well as non-trainable buffers such as batch-norm running statistics.
struct Parameter {
  std::string name;
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Shape s, double fill = 0.0, bool train = true)
      : name(std::move(n)), shape(std::move(s)), value(numel(shape), fill),
        grad(numel(shape), 0.0), trainable(train) {}

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

using ParamPtr = std::shared_ptr<Parameter>;

class Tape;

/// Lightweight handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Shape& shape() const;
  std::span<const double> value() const;
  /// Gradient accumulated by Tape::backward (empty if none reached this node).
  std::span<const double> grad() const;
  bool requires_grad() const;
  std::size_t size() const { return value().size(); }
  double item() const;

  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Backward closure of one recorded operation. `tape.grad_of(self)` holds the
/// complete upstream gradient when it runs; it accumulates into inputs via
/// `tape.accum(input_id)`, which is empty for inputs that need no gradient.
using BackwardFn = std::function<void(Tape& tape, std::size_t self)>;

/// Records operations in creation order (already topological) and replays
/// them in reverse. One tape serves one forward/backward pass.
class Tape {
 public:
  /// A non-recording tape computes values only (evaluation, finite differences).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Shape shape, std::vector<double> values);
  Var scalar(double v) { return constant({1}, {v}); }
  /// Leaf tracking a persistent parameter; backward adds into param.grad
  /// when the parameter is trainable.
  Var param(Parameter& p);
  /// Tape-owned leaf with an optional gradient (tests differentiate w.r.t. it).
  Var input(Shape shape, std::vector<double> values, bool requires_grad);

  /// Appends an operation result. Throws NumericError naming `op` if any
  /// value is NaN/Inf. `backward` is dropped when no input requires grad.
  Var emit(const char* op, Shape shape, std::vector<double> values,
           std::vector<std::size_t> inputs, BackwardFn backward);

  /// Reverse sweep from a scalar loss. A second call without a fresh forward
  /// pass is an error.
  void backward(Var loss);

  const Shape& shape_of(std::size_t id) const { return nodes_[id].shape; }
  std::span<const double> value_of(std::size_t id) const { return nodes_[id].value; }
  std::span<double> grad_of(std::size_t id) { return nodes_[id].grad; }
  std::span<const double> grad_of(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const char* op_of(std::size_t id) const { return nodes_[id].op; }
  /// Gradient buffer of an input, allocated on first use; empty span if the
  /// node does not require grad.
  std::span<double> accum(std::size_t id);

  std::size_t size() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

 private:
  struct Node {
    const char* op = "";
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  bool record_;
  bool backward_done_ = false;
  std::deque<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Element-wise binary ops on identical shapes or tensor-vs-scalar (one side
/// holding a single element).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

Var sigmoid(Var x);
Var tanh(Var x);
Var relu(Var x);
/// Natural log; non-positive input throws ValidationError.
Var log(Var x);
/// 1 - x
Var one_minus(Var x);
Var scale(Var x, double factor);

Var sum(Var x);
Var mean(Var x);
Var reshape(Var x, Shape shape);
/// Repeats a rank-1 [n] tensor into [rows, n].
Var broadcast_rows(Var v, std::size_t rows);

/// [B,k] x [k,n]
Var matmul(Var a, Var b);
/// x[B,in] W[in,out] + b[out]
Var dense(Var x, Var w, Var b);

/// 3x3 convolution, stride 1, zero padding 1. x[B,Cin,H,W], k[Cout,Cin,3,3], bias[Cout].
Var conv2d_same(Var x, Var kernels, Var bias);

/// Non-overlapping 2x2 max; ties resolve to the first cell in row-major order.
Var maxpool_2x2(Var x);

enum class NormMode { kTrain, kEval };

struct BatchNormBuffers {
  Parameter* running_mean = nullptr;
  Parameter* running_var = nullptr;
  Parameter* batches_tracked = nullptr;
  double momentum = 0.1;
  double epsilon = 1e-5;
};

/// Per-channel normalisation of x[B,C,H,W]. Train mode standardises with
/// batch statistics and updates the running buffers (the first update copies
/// the batch statistics); eval mode uses the running buffers and requires at
/// least one prior training update.
Var batchnorm2d(Var x, Var gamma, Var beta, const BatchNormBuffers& buffers, NormMode mode);

/// Slice column t of x[B,C,H,W] into a [B, C*H] step (index c*H + h).
Var time_step(Var x, std::size_t t);

/// Mean binary cross-entropy of probabilities[B] against constant labels;
/// probabilities are clamped to [1e-7, 1 - 1e-7] before the log.
Var bce(Var probabilities, std::span<const double> labels);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking
// ---------------------------------------------------------------------------

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;  // sorted worst first
  double max_rel_error = 0.0;
  bool pass = true;
  std::string summary() const;
};

using LossBuilder = std::function<Var(Tape&)>;

/// Central differences with step h on every element of every listed parameter,
/// compared against the analytic gradients of one backward pass.
/// Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradCheckReport finite_diff_check(const LossBuilder& build, std::span<Parameter* const> params,
                                  double tolerance, double h = 1e-5);

double relative_error(double analytic, double numeric);

}  // namespace pcgnet::ad
