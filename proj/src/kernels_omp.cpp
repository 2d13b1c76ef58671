#include <cmath>
#include <cstring>

#include "dialsel/kernels.hpp"
#include "kernel_guards.hpp"

// OpenMP lane. Every parallel loop iterates over independent output elements
// and keeps the per-element accumulation order of the serial reference, so
// results are bit-identical to kernels::serial at any thread count. Reduction
// sums are always formed in a local accumulator and stored/added once.

namespace dialsel::kernels {

using detail::broadcast_ok;
using detail::require_2d;
using detail::require_axis;
using detail::require_mm;
using detail::require_mm_nt;
using detail::require_same_shape;

double gelu_scalar(double x) {
  return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475244));
}

double gelu_grad_scalar(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
  const double pdf = 0.3989422804014326779 * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_mm(a, b, "matmul");
  const std::int64_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c({static_cast<std::size_t>(m), static_cast<std::size_t>(n)});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    double* crow = pc + i * n;
    for (std::int64_t l = 0; l < k; ++l) {
      const double av = pa[i * k + l];
      const double* brow = pb + l * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_mm_nt(a, b, "matmul_nt");
  const std::int64_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor c({static_cast<std::size_t>(m), static_cast<std::size_t>(n)});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      const double* arow = pa + i * k;
      const double* brow = pb + j * k;
      double s = 0.0;
      for (std::int64_t l = 0; l < k; ++l) s += arow[l] * brow[l];
      pc[i * n + j] = s;
    }
  }
  return c;
}

void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  require_mm(a, b, "matmul_acc");
  const std::int64_t m = a.rows(), k = a.cols(), n = b.cols();
  if (c.rows() != a.rows() || c.cols() != b.cols())
    throw ShapeError("matmul_acc: output shape mismatch " + shape_pair_str(a, c));
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::int64_t l = 0; l < k; ++l) s += pa[i * k + l] * pb[l * n + j];
      pc[i * n + j] += s;
    }
  }
}

void matmul_nt_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  require_mm_nt(a, b, "matmul_nt_acc");
  const std::int64_t m = a.rows(), k = a.cols(), n = b.rows();
  if (c.rows() != a.rows() || c.cols() != b.rows())
    throw ShapeError("matmul_nt_acc: output shape mismatch " + shape_pair_str(a, c));
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      const double* arow = pa + i * k;
      const double* brow = pb + j * k;
      double s = 0.0;
      for (std::int64_t l = 0; l < k; ++l) s += arow[l] * brow[l];
      pc[i * n + j] += s;
    }
  }
}

void matmul_tn_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  require_2d(a, "matmul_tn_acc");
  require_2d(b, "matmul_tn_acc");
  if (a.rows() != b.rows())
    throw ShapeError("matmul_tn_acc: inner dims disagree " + shape_pair_str(a, b));
  const std::int64_t k = a.rows(), m = a.cols(), n = b.cols();
  if (c.rows() != a.cols() || c.cols() != b.cols())
    throw ShapeError("matmul_tn_acc: output shape mismatch " + shape_pair_str(a, c));
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::int64_t l = 0; l < k; ++l) s += pa[l * m + i] * pb[l * n + j];
      pc[i * n + j] += s;
    }
  }
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!broadcast_ok(a, b))
    throw ShapeError("add: shape mismatch " + shape_pair_str(a, b));
  Tensor c = a;
  const std::int64_t n = a.size(), bn = b.size();
  double* pc = c.data();
  const double* pb = b.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) pc[i] += pb[i % bn];
  return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor c = a;
  const std::int64_t n = a.size();
  double* pc = c.data();
  const double* pb = b.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) pc[i] -= pb[i];
  return c;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor c = a;
  const std::int64_t n = a.size();
  double* pc = c.data();
  const double* pb = b.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) pc[i] *= pb[i];
  return c;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = a;
  const std::int64_t n = a.size();
  double* p = out.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) p[i] *= c;
  return out;
}

namespace {
template <typename F>
Tensor map_unary(const Tensor& a, F f) {
  Tensor out = a;
  const std::int64_t n = a.size();
  double* p = out.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) p[i] = f(p[i]);
  return out;
}
}  // namespace

Tensor tanh_fwd(const Tensor& a) { return map_unary(a, [](double x) { return std::tanh(x); }); }
Tensor sigmoid_fwd(const Tensor& a) {
  return map_unary(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}
Tensor gelu_fwd(const Tensor& a) { return map_unary(a, gelu_scalar); }
Tensor relu_fwd(const Tensor& a) {
  return map_unary(a, [](double x) { return x > 0.0 ? x : 0.0; });
}
Tensor log_fwd(const Tensor& a) { return map_unary(a, [](double x) { return std::log(x); }); }
Tensor clamp_fwd(const Tensor& a, double lo, double hi) {
  return map_unary(a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); });
}

Tensor softmax(const Tensor& a) {
  const std::int64_t rows = a.rank() == 2 ? a.rows() : 1;
  const std::int64_t n = a.rank() == 2 ? a.cols() : a.size();
  if (n == 0) throw ShapeError("softmax: empty last dim " + a.shape_str());
  Tensor out = a;
  double* p = out.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    double* row = p + r * n;
    double m = row[0];
    for (std::int64_t j = 1; j < n; ++j)
      if (row[j] > m) m = row[j];
    double s = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - m);
      s += row[j];
    }
    for (std::int64_t j = 0; j < n; ++j) row[j] /= s;
  }
  return out;
}

void softmax_backward_acc(const Tensor& y, const Tensor& dy, Tensor& dx) {
  require_same_shape(y, dy, "softmax_backward");
  require_same_shape(y, dx, "softmax_backward");
  const std::int64_t rows = y.rank() == 2 ? y.rows() : 1;
  const std::int64_t n = y.rank() == 2 ? y.cols() : y.size();
  const double* py = y.data();
  const double* pdy = dy.data();
  double* pdx = dx.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* yr = py + r * n;
    const double* dyr = pdy + r * n;
    double* dxr = pdx + r * n;
    double dot = 0.0;
    for (std::int64_t j = 0; j < n; ++j) dot += yr[j] * dyr[j];
    for (std::int64_t j = 0; j < n; ++j) dxr[j] += yr[j] * (dyr[j] - dot);
  }
}

Tensor mean_axis(const Tensor& a, int axis) {
  require_axis(a, axis, "mean_axis");
  if (a.rank() == 1) {
    const std::int64_t n = a.size();
    double s = 0.0;
    for (std::int64_t i = 0; i < n; ++i) s += a.at(i);
    return Tensor({1}, {s / static_cast<double>(n)});
  }
  const std::int64_t m = a.rows(), n = a.cols();
  const double* pa = a.data();
  if (axis == 0) {
    Tensor out({1, static_cast<std::size_t>(n)});
    double* po = out.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::int64_t i = 0; i < m; ++i) s += pa[i * n + j];
      po[j] = s / static_cast<double>(m);
    }
    return out;
  }
  Tensor out({static_cast<std::size_t>(m), 1});
  double* po = out.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::int64_t j = 0; j < n; ++j) s += pa[i * n + j];
    po[i] = s / static_cast<double>(n);
  }
  return out;
}

Tensor max_axis(const Tensor& a, int axis, std::vector<std::size_t>* argmax) {
  require_axis(a, axis, "max_axis");
  if (a.rank() == 1) {
    const std::int64_t n = a.size();
    if (n == 0) throw ShapeError("max_axis: empty tensor");
    std::size_t arg = 0;
    double best = a.at(0);
    for (std::int64_t i = 1; i < n; ++i)
      if (a.at(i) > best) { best = a.at(i); arg = i; }
    if (argmax) *argmax = {arg};
    return Tensor({1}, {best});
  }
  const std::int64_t m = a.rows(), n = a.cols();
  const double* pa = a.data();
  if (axis == 0) {
    if (m == 0) throw ShapeError("max_axis: empty axis");
    Tensor out({1, static_cast<std::size_t>(n)});
    if (argmax) argmax->assign(n, 0);
    double* po = out.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < n; ++j) {
      double best = pa[j];
      std::size_t arg = 0;
      for (std::int64_t i = 1; i < m; ++i)
        if (pa[i * n + j] > best) { best = pa[i * n + j]; arg = i; }
      po[j] = best;
      if (argmax) (*argmax)[j] = arg;
    }
    return out;
  }
  if (n == 0) throw ShapeError("max_axis: empty axis");
  Tensor out({static_cast<std::size_t>(m), 1});
  if (argmax) argmax->assign(m, 0);
  double* po = out.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    double best = pa[i * n];
    std::size_t arg = 0;
    for (std::int64_t j = 1; j < n; ++j)
      if (pa[i * n + j] > best) { best = pa[i * n + j]; arg = j; }
    po[i] = best;
    if (argmax) (*argmax)[i] = arg;
  }
  return out;
}

Tensor concat(int axis, const std::vector<const Tensor*>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  for (const Tensor* t : parts) require_2d(*t, "concat");
  if (axis == 0) {
    const std::size_t n = parts[0]->cols();
    std::size_t rows = 0;
    for (const Tensor* t : parts) {
      if (t->cols() != n)
        throw ShapeError("concat: column mismatch " + shape_pair_str(*parts[0], *t));
      rows += t->rows();
    }
    Tensor out({rows, n});
    std::size_t r0 = 0;
    for (const Tensor* t : parts) {
      std::memcpy(out.data() + r0 * n, t->data(), t->size() * sizeof(double));
      r0 += t->rows();
    }
    return out;
  }
  if (axis != 1) throw ShapeError("concat: axis must be 0 or 1");
  const std::size_t m = parts[0]->rows();
  std::size_t cols = 0;
  for (const Tensor* t : parts) {
    if (t->rows() != m)
      throw ShapeError("concat: row mismatch " + shape_pair_str(*parts[0], *t));
    cols += t->cols();
  }
  Tensor out({m, cols});
  double* po = out.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
    std::size_t c0 = 0;
    for (const Tensor* t : parts) {
      std::memcpy(po + i * cols + c0, t->data() + i * t->cols(),
                  t->cols() * sizeof(double));
      c0 += t->cols();
    }
  }
  return out;
}

Tensor slice(const Tensor& a, int axis, std::size_t start, std::size_t end) {
  require_axis(a, axis, "slice");
  const auto& shape = a.shape();
  if (start >= end || end > shape[axis])
    throw ShapeError("slice: range [" + std::to_string(start) + "," +
                     std::to_string(end) + ") invalid for " + a.shape_str());
  if (a.rank() == 1) {
    Tensor out({end - start});
    std::memcpy(out.data(), a.data() + start, (end - start) * sizeof(double));
    return out;
  }
  const std::size_t m = a.rows(), n = a.cols();
  if (axis == 0) {
    Tensor out({end - start, n});
    std::memcpy(out.data(), a.data() + start * n, (end - start) * n * sizeof(double));
    return out;
  }
  const std::size_t w = end - start;
  Tensor out({m, w});
  double* po = out.data();
  const double* pa = a.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i)
    std::memcpy(po + i * w, pa + i * n + start, w * sizeof(double));
  return out;
}

void slice_backward_acc(const Tensor& dy, int axis, std::size_t start, Tensor& dx) {
  require_axis(dx, axis, "slice_backward");
  if (dx.rank() == 1) {
    for (std::size_t i = 0; i < dy.size(); ++i) dx.at(start + i) += dy.at(i);
    return;
  }
  const std::size_t n = dx.cols();
  if (axis == 0) {
    const std::int64_t rows = dy.rows();
    double* pdx = dx.data() + start * n;
    const double* pdy = dy.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows * static_cast<std::int64_t>(n); ++i)
      pdx[i] += pdy[i];
    return;
  }
  const std::int64_t m = dy.rows(), w = dy.cols();
  double* pdx = dx.data();
  const double* pdy = dy.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < w; ++j) pdx[i * n + start + j] += pdy[i * w + j];
}

Tensor embedding(const Tensor& table, std::span<const std::size_t> ids) {
  require_2d(table, "embedding");
  const std::size_t d = table.cols();
  for (std::size_t id : ids)
    if (id >= table.rows())
      throw Error("embedding: id " + std::to_string(id) + " out of range (V=" +
                  std::to_string(table.rows()) + ")");
  Tensor out({ids.size(), d});
  double* po = out.data();
  const double* pt = table.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(ids.size()); ++i)
    std::memcpy(po + i * d, pt + ids[i] * d, d * sizeof(double));
  return out;
}

void embedding_backward_acc(const Tensor& dout, std::span<const std::size_t> ids,
                            Tensor& dtable) {
  const std::int64_t d = dtable.cols();
  const std::int64_t L = ids.size();
  const double* pdo = dout.data();
  double* pdt = dtable.data();
  // Parallel over columns: rows collide across positions, columns never do.
  // Per-cell accumulation order stays ascending in i, matching serial.
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < d; ++j)
    for (std::int64_t i = 0; i < L; ++i) pdt[ids[i] * d + j] += pdo[i * d + j];
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::int64_t rows = x.rank() == 2 ? x.rows() : 1;
  const std::int64_t n = x.rank() == 2 ? x.cols() : x.size();
  if (gain.size() != static_cast<std::size_t>(n) || bias.size() != static_cast<std::size_t>(n))
    throw ShapeError("layer_norm: parameter shape mismatch " + shape_pair_str(x, gain));
  Tensor out = x;
  double* p = out.data();
  const double* pg = gain.data();
  const double* pb = bias.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    double* row = p + r * n;
    double mu = 0.0;
    for (std::int64_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::int64_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::int64_t j = 0; j < n; ++j) row[j] = pg[j] * ((row[j] - mu) * inv) + pb[j];
  }
  return out;
}

void layer_norm_backward_acc(const Tensor& x, const Tensor& gain, double eps,
                             const Tensor& dy, Tensor& dx, Tensor& dgain,
                             Tensor& dbias) {
  const std::int64_t rows = x.rank() == 2 ? x.rows() : 1;
  const std::int64_t n = x.rank() == 2 ? x.cols() : x.size();
  std::vector<double> mu(rows), inv(rows);
  const double* px = x.data();
  const double* pg = gain.data();
  const double* pdy = dy.data();
  double* pdx = dx.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* xr = px + r * n;
    const double* dyr = pdy + r * n;
    double m = 0.0;
    for (std::int64_t j = 0; j < n; ++j) m += xr[j];
    m /= static_cast<double>(n);
    double var = 0.0;
    for (std::int64_t j = 0; j < n; ++j) var += (xr[j] - m) * (xr[j] - m);
    var /= static_cast<double>(n);
    const double iv = 1.0 / std::sqrt(var + eps);
    mu[r] = m;
    inv[r] = iv;
    double s1 = 0.0, s2 = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      const double xh = (xr[j] - m) * iv;
      const double dxh = dyr[j] * pg[j];
      s1 += dxh;
      s2 += dxh * xh;
    }
    s1 /= static_cast<double>(n);
    s2 /= static_cast<double>(n);
    double* dxr = pdx + r * n;
    for (std::int64_t j = 0; j < n; ++j) {
      const double xh = (xr[j] - m) * iv;
      const double dxh = dyr[j] * pg[j];
      dxr[j] += iv * (dxh - s1 - xh * s2);
    }
  }
  double* pdg = dgain.data();
  double* pdb = dbias.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < n; ++j) {
    double sg = 0.0, sb = 0.0;
    for (std::int64_t r = 0; r < rows; ++r) {
      const double xh = (px[r * n + j] - mu[r]) * inv[r];
      sg += pdy[r * n + j] * xh;
      sb += pdy[r * n + j];
    }
    pdg[j] += sg;
    pdb[j] += sb;
  }
}

Tensor pick(const Tensor& p, std::span<const std::size_t> ids) {
  require_2d(p, "pick");
  if (ids.size() != p.rows())
    throw ShapeError("pick: need one index per row, got " + std::to_string(ids.size()) +
                     " for " + p.shape_str());
  Tensor out({ids.size()});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= p.cols())
      throw Error("pick: index " + std::to_string(ids[i]) + " out of range");
    out.at(i) = p.at2(i, ids[i]);
  }
  return out;
}

}  // namespace dialsel::kernels
