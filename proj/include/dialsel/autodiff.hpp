#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dialsel/rng.hpp"
#include "dialsel/tensor.hpp"

// Reverse-mode differentiation on a tape. Nodes only ever reference earlier
// nodes, so walking the tape backwards from the output is a reverse
// topological order that visits each node exactly once.

namespace dialsel::ad {

class Tape;

// Cheap handle to a tape node.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;
  const Tensor& value() const;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves: parameters (needs_grad) and batch constants.
  Var leaf(Tensor value, bool needs_grad);
  Var constant(double v) { return leaf(Tensor::scalar(v), false); }

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  // Gradient accumulator, allocated as zeros on first touch.
  Tensor& grad(std::size_t id);
  bool has_grad(std::size_t id) const { return nodes_[id].grad_live; }
  // Gradient of a node; zeros if nothing flowed into it (unused parameter).
  Tensor grad_or_zeros(std::size_t id) const;

  // Reverse-mode accumulation from a scalar output. Call once per tape.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

  // Plumbing for the op implementations.
  Var push(Tensor value, bool needs_grad);
  void set_back(std::size_t id, std::function<void()> fn);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    bool grad_live = false;
    std::function<void()> back;
  };
  std::vector<Node> nodes_;
};

// Differentiable ops. Forward values come from the parallel kernel lane;
// backward rules accumulate into Tape::grad.
Var matmul(Var a, Var b);            // A(m,k) * B(k,n)
Var matmul_nt(Var a, Var b);         // A(m,k) * B(n,k)^T
Var add(Var a, Var b);               // b broadcasts when b.shape is a suffix
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var tanh(Var a);
Var sigmoid(Var a);
Var gelu(Var a);
Var relu(Var a);
Var log(Var a);
Var clamp(Var a, double lo, double hi);  // zero gradient outside (lo, hi)
Var softmax(Var a);                      // last dim
Var mean_axis(Var a, int axis);          // keeps the reduced axis at size 1
Var max_axis(Var a, int axis);           // gradient routed to first argmax
Var concat(int axis, const std::vector<Var>& parts);
Var slice(Var a, int axis, std::size_t start, std::size_t end);
Var embedding_lookup(Var table, std::vector<std::size_t> ids);  // gather rows
Var layer_norm(Var x, Var gain, Var bias, double eps);
Var pick(Var p, std::vector<std::size_t> ids);  // out[i] = p[i, ids[i]]
Var reshape(Var a, std::vector<std::size_t> shape);
Var mean_all(Var a);  // scalar mean of all elements

// Central-difference gradient oracle. `loss` must be deterministic: called
// with a non-null pointer it also returns analytic gradients aligned with
// `params`; called with nullptr it only evaluates. Reported error is
// |fd - analytic| / max(1, |fd|, |analytic|) over n_coords sampled
// coordinates.
struct FdReport {
  double max_rel_err = 0.0;
  std::size_t coords = 0;
};
FdReport finite_diff_check(std::span<Tensor* const> params,
                           const std::function<double(std::vector<Tensor>*)>& loss,
                           double eps, std::size_t n_coords, Rng& rng);

inline const Tensor& Var::value() const { return tape->value(id); }

}  // namespace dialsel::ad
