#include "dialsel/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "dialsel/kernels.hpp"

namespace dialsel::ad {

namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape)
    throw Error("autodiff: operands live on different tapes");
  return *a.tape;
}

}  // namespace

Var Tape::leaf(Tensor value, bool needs_grad) {
  return push(std::move(value), needs_grad);
}

Var Tape::push(Tensor value, bool needs_grad) {
  if (checked_mode()) check_finite(value, "tape node");
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

void Tape::set_back(std::size_t id, std::function<void()> fn) {
  nodes_[id].back = std::move(fn);
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.grad_live) {
    n.grad = Tensor::zeros(n.value.shape());
    n.grad_live = true;
  }
  return n.grad;
}

Tensor Tape::grad_or_zeros(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.grad_live ? n.grad : Tensor::zeros(n.value.shape());
}

void Tape::backward(Var root) {
  if (root.tape != this) throw Error("backward: output from a different tape");
  if (value(root.id).size() != 1)
    throw Error("backward: output is not a scalar, shape " +
                value(root.id).shape_str());
  grad(root.id).at(0) = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad_live && n.back) n.back();
  }
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  Var out = t.push(kernels::matmul(t.value(a.id), t.value(b.id)),
                   t.needs_grad(a.id) || t.needs_grad(b.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = a.id, b = b.id, o = out.id] {
      const Tensor& dy = t.grad(o);
      if (t.needs_grad(a)) kernels::matmul_nt_acc(dy, t.value(b), t.grad(a));
      if (t.needs_grad(b)) kernels::matmul_tn_acc(t.value(a), dy, t.grad(b));
    });
  }
  return out;
}

Var matmul_nt(Var a, Var b) {
  Tape& t = same_tape(a, b);
  Var out = t.push(kernels::matmul_nt(t.value(a.id), t.value(b.id)),
                   t.needs_grad(a.id) || t.needs_grad(b.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = a.id, b = b.id, o = out.id] {
      const Tensor& dy = t.grad(o);
      if (t.needs_grad(a)) kernels::matmul_acc(dy, t.value(b), t.grad(a));
      if (t.needs_grad(b)) kernels::matmul_tn_acc(dy, t.value(a), t.grad(b));
    });
  }
  return out;
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  Var out = t.push(kernels::add(t.value(a.id), t.value(b.id)),
                   t.needs_grad(a.id) || t.needs_grad(b.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = a.id, b = b.id, o = out.id] {
      const Tensor& dy = t.grad(o);
      if (t.needs_grad(a)) {
        Tensor& da = t.grad(a);
        for (std::size_t i = 0; i < dy.size(); ++i) da.at(i) += dy.at(i);
      }
      if (t.needs_grad(b)) {
        Tensor& db = t.grad(b);
        const std::size_t bn = db.size();
        for (std::size_t i = 0; i < dy.size(); ++i) db.at(i % bn) += dy.at(i);
      }
    });
  }
  return out;
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  Var out = t.push(kernels::sub(t.value(a.id), t.value(b.id)),
                   t.needs_grad(a.id) || t.needs_grad(b.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = a.id, b = b.id, o = out.id] {
      const Tensor& dy = t.grad(o);
      if (t.needs_grad(a)) {
        Tensor& da = t.grad(a);
        for (std::size_t i = 0; i < dy.size(); ++i) da.at(i) += dy.at(i);
      }
      if (t.needs_grad(b)) {
        Tensor& db = t.grad(b);
        for (std::size_t i = 0; i < dy.size(); ++i) db.at(i) -= dy.at(i);
      }
    });
  }
  return out;
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  Var out = t.push(kernels::mul(t.value(a.id), t.value(b.id)),
                   t.needs_grad(a.id) || t.needs_grad(b.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = a.id, b = b.id, o = out.id] {
      const Tensor& dy = t.grad(o);
      if (t.needs_grad(a)) {
        Tensor& da = t.grad(a);
        const Tensor& bv = t.value(b);
        for (std::size_t i = 0; i < dy.size(); ++i) da.at(i) += dy.at(i) * bv.at(i);
      }
      if (t.needs_grad(b)) {
        Tensor& db = t.grad(b);
        const Tensor& av = t.value(a);
        for (std::size_t i = 0; i < dy.size(); ++i) db.at(i) += dy.at(i) * av.at(i);
      }
    });
  }
  return out;
}

Var scale(Var a, double c) {
  Tape& t = *a.tape;
  Var out = t.push(kernels::scale(t.value(a.id), c), t.needs_grad(a.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = a.id, o = out.id, c] {
      const Tensor& dy = t.grad(o);
      Tensor& da = t.grad(a);
      for (std::size_t i = 0; i < dy.size(); ++i) da.at(i) += c * dy.at(i);
    });
  }
  return out;
}

namespace {

// Unary elementwise op whose derivative is a function of input and output.
template <typename Fwd, typename Grad>
Var unary(Var a, Fwd fwd, Grad grad_of_xy) {
  Tape& t = *a.tape;
  Var out = t.push(fwd(t.value(a.id)), t.needs_grad(a.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = a.id, o = out.id, grad_of_xy] {
      const Tensor& dy = t.grad(o);
      const Tensor& x = t.value(a);
      const Tensor& y = t.value(o);
      Tensor& da = t.grad(a);
      for (std::size_t i = 0; i < dy.size(); ++i)
        da.at(i) += dy.at(i) * grad_of_xy(x.at(i), y.at(i));
    });
  }
  return out;
}

}  // namespace

Var tanh(Var a) {
  return unary(a, kernels::tanh_fwd, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(a, kernels::sigmoid_fwd, [](double, double y) { return y * (1.0 - y); });
}

Var gelu(Var a) {
  return unary(a, kernels::gelu_fwd,
               [](double x, double) { return kernels::gelu_grad_scalar(x); });
}

Var relu(Var a) {
  return unary(a, kernels::relu_fwd, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var log(Var a) {
  return unary(a, kernels::log_fwd, [](double x, double) { return 1.0 / x; });
}

Var clamp(Var a, double lo, double hi) {
  Tape& t = *a.tape;
  Var out = t.push(kernels::clamp_fwd(t.value(a.id), lo, hi), t.needs_grad(a.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = a.id, o = out.id, lo, hi] {
      const Tensor& dy = t.grad(o);
      const Tensor& x = t.value(a);
      Tensor& da = t.grad(a);
      for (std::size_t i = 0; i < dy.size(); ++i)
        if (x.at(i) > lo && x.at(i) < hi) da.at(i) += dy.at(i);
    });
  }
  return out;
}

Var softmax(Var a) {
  Tape& t = *a.tape;
  Var out = t.push(kernels::softmax(t.value(a.id)), t.needs_grad(a.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = a.id, o = out.id] {
      kernels::softmax_backward_acc(t.value(o), t.grad(o), t.grad(a));
    });
  }
  return out;
}

Var mean_axis(Var a, int axis) {
  Tape& t = *a.tape;
  Var out = t.push(kernels::mean_axis(t.value(a.id), axis), t.needs_grad(a.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = a.id, o = out.id, axis] {
      const Tensor& dy = t.grad(o);
      Tensor& da = t.grad(a);
      const Tensor& x = t.value(a);
      if (x.rank() == 1) {
        const double share = dy.at(0) / static_cast<double>(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) da.at(i) += share;
        return;
      }
      const std::size_t m = x.rows(), n = x.cols();
      if (axis == 0) {
        for (std::size_t j = 0; j < n; ++j) {
          const double share = dy.at(j) / static_cast<double>(m);
          for (std::size_t i = 0; i < m; ++i) da.at2(i, j) += share;
        }
      } else {
        for (std::size_t i = 0; i < m; ++i) {
          const double share = dy.at(i) / static_cast<double>(n);
          for (std::size_t j = 0; j < n; ++j) da.at2(i, j) += share;
        }
      }
    });
  }
  return out;
}

Var max_axis(Var a, int axis) {
  Tape& t = *a.tape;
  std::vector<std::size_t> argmax;
  Var out = t.push(kernels::max_axis(t.value(a.id), axis, &argmax),
                   t.needs_grad(a.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = a.id, o = out.id, axis, argmax = std::move(argmax)] {
      const Tensor& dy = t.grad(o);
      Tensor& da = t.grad(a);
      if (t.value(a).rank() == 1) {
        da.at(argmax[0]) += dy.at(0);
        return;
      }
      if (axis == 0) {
        for (std::size_t j = 0; j < argmax.size(); ++j)
          da.at2(argmax[j], j) += dy.at(j);
      } else {
        for (std::size_t i = 0; i < argmax.size(); ++i)
          da.at2(i, argmax[i]) += dy.at(i);
      }
    });
  }
  return out;
}

Var concat(int axis, const std::vector<Var>& parts) {
  if (parts.empty()) throw Error("concat: no inputs");
  Tape& t = *parts[0].tape;
  std::vector<const Tensor*> vals;
  std::vector<std::size_t> ids;
  bool ng = false;
  for (Var p : parts) {
    same_tape(parts[0], p);
    vals.push_back(&t.value(p.id));
    ids.push_back(p.id);
    ng = ng || t.needs_grad(p.id);
  }
  Var out = t.push(kernels::concat(axis, vals), ng);
  if (ng) {
    t.set_back(out.id, [&t, ids = std::move(ids), o = out.id, axis] {
      const Tensor& dy = t.grad(o);
      std::size_t off = 0;
      for (std::size_t p = 0; p < ids.size(); ++p) {
        const Tensor& v = t.value(ids[p]);
        const std::size_t extent = axis == 0 ? v.rows() : v.cols();
        if (t.needs_grad(ids[p])) {
          Tensor& dp = t.grad(ids[p]);
          if (axis == 0) {
            for (std::size_t i = 0; i < v.rows(); ++i)
              for (std::size_t j = 0; j < v.cols(); ++j)
                dp.at2(i, j) += dy.at2(off + i, j);
          } else {
            for (std::size_t i = 0; i < v.rows(); ++i)
              for (std::size_t j = 0; j < v.cols(); ++j)
                dp.at2(i, j) += dy.at2(i, off + j);
          }
        }
        off += extent;
      }
    });
  }
  return out;
}

Var slice(Var a, int axis, std::size_t start, std::size_t end) {
  Tape& t = *a.tape;
  Var out = t.push(kernels::slice(t.value(a.id), axis, start, end),
                   t.needs_grad(a.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = a.id, o = out.id, axis, start] {
      kernels::slice_backward_acc(t.grad(o), axis, start, t.grad(a));
    });
  }
  return out;
}

Var embedding_lookup(Var table, std::vector<std::size_t> ids) {
  Tape& t = *table.tape;
  Var out = t.push(kernels::embedding(t.value(table.id), ids),
                   t.needs_grad(table.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = table.id, o = out.id, ids = std::move(ids)] {
      kernels::embedding_backward_acc(t.grad(o), ids, t.grad(a));
    });
  }
  return out;
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tape& t = same_tape(x, gain);
  same_tape(x, bias);
  Var out =
      t.push(kernels::layer_norm(t.value(x.id), t.value(gain.id), t.value(bias.id), eps),
             t.needs_grad(x.id) || t.needs_grad(gain.id) || t.needs_grad(bias.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, x = x.id, g = gain.id, b = bias.id, o = out.id, eps] {
      // The kernel produces all three gradients; route unwanted ones into
      // scratch so a constant input stays untouched.
      Tensor sx, sg, sb;
      Tensor* dx = &sx;
      Tensor* dg = &sg;
      Tensor* db = &sb;
      if (t.needs_grad(x)) dx = &t.grad(x); else sx = Tensor::zeros(t.value(x).shape());
      if (t.needs_grad(g)) dg = &t.grad(g); else sg = Tensor::zeros(t.value(g).shape());
      if (t.needs_grad(b)) db = &t.grad(b); else sb = Tensor::zeros(t.value(b).shape());
      kernels::layer_norm_backward_acc(t.value(x), t.value(g), eps, t.grad(o), *dx,
                                       *dg, *db);
    });
  }
  return out;
}

Var pick(Var p, std::vector<std::size_t> ids) {
  Tape& t = *p.tape;
  Var out = t.push(kernels::pick(t.value(p.id), ids), t.needs_grad(p.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = p.id, o = out.id, ids = std::move(ids)] {
      const Tensor& dy = t.grad(o);
      Tensor& da = t.grad(a);
      for (std::size_t i = 0; i < ids.size(); ++i) da.at2(i, ids[i]) += dy.at(i);
    });
  }
  return out;
}

Var reshape(Var a, std::vector<std::size_t> shape) {
  Tape& t = *a.tape;
  const Tensor& x = t.value(a.id);
  Tensor y(shape, std::vector<double>(x.data(), x.data() + x.size()));
  Var out = t.push(std::move(y), t.needs_grad(a.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = a.id, o = out.id] {
      const Tensor& dy = t.grad(o);
      Tensor& da = t.grad(a);
      for (std::size_t i = 0; i < dy.size(); ++i) da.at(i) += dy.at(i);
    });
  }
  return out;
}

Var mean_all(Var a) {
  Tape& t = *a.tape;
  const Tensor& x = t.value(a.id);
  if (x.size() == 0) throw ShapeError("mean_all: empty tensor");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x.at(i);
  Var out = t.push(Tensor::scalar(s / static_cast<double>(x.size())),
                   t.needs_grad(a.id));
  if (t.needs_grad(out.id)) {
    t.set_back(out.id, [&t, a = a.id, o = out.id] {
      const Tensor& dy = t.grad(o);
      Tensor& da = t.grad(a);
      const double share = dy.at(0) / static_cast<double>(da.size());
      for (std::size_t i = 0; i < da.size(); ++i) da.at(i) += share;
    });
  }
  return out;
}

FdReport finite_diff_check(std::span<Tensor* const> params,
                           const std::function<double(std::vector<Tensor>*)>& loss,
                           double eps, std::size_t n_coords, Rng& rng) {
  std::vector<Tensor> grads;
  loss(&grads);
  if (grads.size() != params.size())
    throw Error("finite_diff_check: loss returned " + std::to_string(grads.size()) +
                " gradients for " + std::to_string(params.size()) + " parameters");
  std::size_t total = 0;
  for (const Tensor* p : params) total += p->size();
  FdReport report;
  if (total == 0) return report;
  for (std::size_t c = 0; c < n_coords; ++c) {
    std::size_t flat = rng.uniform_index(total);
    std::size_t pi = 0;
    while (flat >= params[pi]->size()) {
      flat -= params[pi]->size();
      ++pi;
    }
    double& coord = params[pi]->at(flat);
    const double orig = coord;
    coord = orig + eps;
    const double fp = loss(nullptr);
    coord = orig - eps;
    const double fm = loss(nullptr);
    coord = orig;
    const double fd = (fp - fm) / (2.0 * eps);
    const double an = grads[pi].at(flat);
    const double denom = std::max({1.0, std::fabs(fd), std::fabs(an)});
    report.max_rel_err = std::max(report.max_rel_err, std::fabs(fd - an) / denom);
    ++report.coords;
  }
  return report;
}

}  // namespace dialsel::ad
