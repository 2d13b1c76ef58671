#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dialsel/error.hpp"

namespace dialsel {

// Dense row-major float64 tensor. Everything in this project is rank 1 or 2;
// scalars are shape {1}.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<std::size_t> shape, double v);
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  // 2-D views; rank-1 tensors are treated as a single row where convenient.
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : 0); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  double& at(std::size_t i) { return values_[i]; }
  double at(std::size_t i) const { return values_[i]; }
  double& at2(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at2(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const;

  bool requires_grad = false;

  void fill(double v);
  bool all_finite() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

// Checked mode turns on finite-value assertions after every kernel and flags
// clamped probabilities in loss code. Off by default.
bool checked_mode();
void set_checked_mode(bool on);

// Throws in checked mode if t contains NaN/Inf.
void check_finite(const Tensor& t, const char* where);

// Loss code flags probability clamping here when checked mode is on, so
// tests can detect saturated scores without failing the run.
std::uint64_t clamp_flag_count();
void note_clamp_flag();
void reset_clamp_flags();

std::string shape_pair_str(const Tensor& a, const Tensor& b);

}  // namespace dialsel
