#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dialsel/tensor.hpp"

// Dense kernels backing the autodiff tape. The default namespace holds the
// OpenMP-parallel implementations; kernels::serial holds a plain serial
// reference used by the tests and the kernel benchmark. Both must produce
// bit-identical results: every parallel loop runs over independent output
// elements and keeps the per-element accumulation order of the serial code.

namespace dialsel::kernels {

#define DIALSEL_KERNEL_SURFACE                                                 \
  /* C = A(m,k) * B(k,n) */                                                    \
  Tensor matmul(const Tensor& a, const Tensor& b);                             \
  /* C = A(m,k) * B(n,k)^T */                                                  \
  Tensor matmul_nt(const Tensor& a, const Tensor& b);                          \
  /* accumulating variants for backward passes */                             \
  void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c);                \
  void matmul_nt_acc(const Tensor& a, const Tensor& b, Tensor& c);             \
  /* C += A(k,m)^T * B(k,n) */                                                 \
  void matmul_tn_acc(const Tensor& a, const Tensor& b, Tensor& c);             \
  /* elementwise; add also broadcasts b over leading dims when b.shape is a   \
     suffix of a.shape */                                                      \
  Tensor add(const Tensor& a, const Tensor& b);                                \
  Tensor sub(const Tensor& a, const Tensor& b);                                \
  Tensor mul(const Tensor& a, const Tensor& b);                                \
  Tensor scale(const Tensor& a, double c);                                     \
  Tensor tanh_fwd(const Tensor& a);                                            \
  Tensor sigmoid_fwd(const Tensor& a);                                         \
  /* exact gelu: x * Phi(x) with Phi the standard normal CDF via erf */        \
  Tensor gelu_fwd(const Tensor& a);                                            \
  Tensor relu_fwd(const Tensor& a);                                            \
  Tensor log_fwd(const Tensor& a);                                             \
  Tensor clamp_fwd(const Tensor& a, double lo, double hi);                     \
  /* softmax over the last dim, stabilized by max subtraction */               \
  Tensor softmax(const Tensor& a);                                             \
  void softmax_backward_acc(const Tensor& y, const Tensor& dy, Tensor& dx);    \
  /* reductions keep the reduced axis with size 1 */                           \
  Tensor mean_axis(const Tensor& a, int axis);                                 \
  Tensor max_axis(const Tensor& a, int axis, std::vector<std::size_t>* argmax);\
  Tensor concat(int axis, const std::vector<const Tensor*>& parts);            \
  Tensor slice(const Tensor& a, int axis, std::size_t start, std::size_t end); \
  void slice_backward_acc(const Tensor& dy, int axis, std::size_t start,       \
                          Tensor& dx);                                         \
  Tensor embedding(const Tensor& table, std::span<const std::size_t> ids);     \
  void embedding_backward_acc(const Tensor& dout,                              \
                              std::span<const std::size_t> ids,                \
                              Tensor& dtable);                                 \
  Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,   \
                    double eps);                                               \
  void layer_norm_backward_acc(const Tensor& x, const Tensor& gain,            \
                               double eps, const Tensor& dy, Tensor& dx,       \
                               Tensor& dgain, Tensor& dbias);                  \
  /* out[i] = p[i, ids[i]] */                                                  \
  Tensor pick(const Tensor& p, std::span<const std::size_t> ids);

DIALSEL_KERNEL_SURFACE

namespace serial {
DIALSEL_KERNEL_SURFACE
}  // namespace serial

#undef DIALSEL_KERNEL_SURFACE

// Scalar helpers shared by forward and backward code.
double gelu_scalar(double x);
double gelu_grad_scalar(double x);

}  // namespace dialsel::kernels
