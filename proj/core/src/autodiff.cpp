#include <cmath>
#include <sstream>

#include "pcgnet/autodiff.hpp"
#include "pcgnet/error.hpp"

namespace pcgnet::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

const Shape& Var::shape() const { return tape_->shape_of(id_); }
std::span<const double> Var::value() const { return tape_->value_of(id_); }
std::span<const double> Var::grad() const { return tape_->grad_of(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

double Var::item() const {
  auto v = value();
  if (v.size() != 1)
    throw ValidationError("item() on tensor of shape " + shape_str(shape()));
  return v[0];
}

namespace {

void check_finite(std::span<const double> values, const char* op, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << "non-finite " << what << " in op '" << op << "' at element " << i;
      throw NumericError(os.str());
    }
  }
}

}  // namespace

Var Tape::constant(Shape shape, std::vector<double> values) {
  return input(std::move(shape), std::move(values), false);
}

Var Tape::input(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel(shape) != values.size())
    throw ValidationError("tensor of shape " + shape_str(shape) + " given " +
                          std::to_string(values.size()) + " values");
  check_finite(values, "input", "value");
  Node& n = nodes_.emplace_back();
  n.op = "input";
  n.shape = std::move(shape);
  n.value = std::move(values);
  n.requires_grad = record_ && requires_grad;
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  if (numel(p.shape) != p.value.size())
    throw ValidationError("parameter '" + p.name + "' holds " + std::to_string(p.value.size()) +
                          " values for shape " + shape_str(p.shape));
  check_finite(p.value, p.name.c_str(), "parameter value");
  Node& n = nodes_.emplace_back();
  n.op = "param";
  n.shape = p.shape;
  n.value = p.value;
  n.requires_grad = record_ && p.trainable;
  n.param = &p;
  return Var(this, nodes_.size() - 1);
}

Var Tape::emit(const char* op, Shape shape, std::vector<double> values,
               std::vector<std::size_t> inputs, BackwardFn backward) {
  if (numel(shape) != values.size())
    throw ValidationError(std::string("op '") + op + "' produced " + std::to_string(values.size()) +
                          " values for shape " + shape_str(shape));
  check_finite(values, op, "forward value");
  bool needs = false;
  if (record_)
    for (auto id : inputs) needs = needs || nodes_[id].requires_grad;
  Node& n = nodes_.emplace_back();
  n.op = op;
  n.shape = std::move(shape);
  n.value = std::move(values);
  n.requires_grad = needs;
  if (needs) {
    n.inputs = std::move(inputs);
    n.backward = std::move(backward);
  }
  return Var(this, nodes_.size() - 1);
}

std::span<double> Tape::accum(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return {};
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ValidationError("backward: loss belongs to another tape");
  if (backward_done_)
    throw ValidationError("backward: already run on this tape; rebuild the forward pass first");
  if (!record_) throw ValidationError("backward: tape was created without recording");
  Node& root = nodes_[loss.id()];
  if (root.value.size() != 1)
    throw ValidationError("backward: loss must be a scalar, got shape " + shape_str(root.shape));
  backward_done_ = true;
  if (!root.requires_grad) return;
  root.grad.assign(1, 1.0);

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    check_finite(n.grad, n.op, "gradient");
    if (n.backward) {
      n.backward(*this, i);
      // Intermediate gradients are not needed once propagated.
      std::vector<double>().swap(nodes_[i].grad);
    } else if (n.param != nullptr) {
      auto& g = n.param->grad;
      if (g.size() != n.grad.size()) g.assign(n.grad.size(), 0.0);
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
    }
  }
}

}  // namespace pcgnet::ad
