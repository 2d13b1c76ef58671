#include "dialsel/tensor.hpp"

#include <atomic>
#include <cmath>

namespace dialsel {

namespace {
std::size_t count_of(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}
std::atomic<bool> g_checked{false};
std::atomic<std::uint64_t> g_clamp_flags{0};
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), values_(count_of(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != count_of(shape_))
    throw ShapeError("tensor value count " + std::to_string(values_.size()) +
                     " does not match shape " + shape_str());
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

std::string Tensor::shape_str() const {
  std::string s = "(";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s + ")";
}

void Tensor::fill(double v) {
  for (double& x : values_) x = v;
}

bool Tensor::all_finite() const {
  for (double x : values_)
    if (!std::isfinite(x)) return false;
  return true;
}

bool checked_mode() { return g_checked.load(std::memory_order_relaxed); }
void set_checked_mode(bool on) { g_checked.store(on, std::memory_order_relaxed); }

void check_finite(const Tensor& t, const char* where) {
  if (checked_mode() && !t.all_finite())
    throw Error(std::string("non-finite value in ") + where);
}

std::uint64_t clamp_flag_count() { return g_clamp_flags.load(std::memory_order_relaxed); }
void note_clamp_flag() { g_clamp_flags.fetch_add(1, std::memory_order_relaxed); }
void reset_clamp_flags() { g_clamp_flags.store(0, std::memory_order_relaxed); }

std::string shape_pair_str(const Tensor& a, const Tensor& b) {
  return a.shape_str() + " vs " + b.shape_str();
}

}  // namespace dialsel
