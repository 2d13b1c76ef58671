// Times the parallel kernel lane against the serial reference and verifies
// the two produce bit-identical outputs on every shape exercised.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "dialsel/kernels.hpp"
#include "dialsel/rng.hpp"

using namespace dialsel;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = rng.normal(0.0, 1.0);
  return t;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct Case {
  std::string name;
  std::function<Tensor()> parallel;
  std::function<Tensor()> serial;
};

int run(const std::vector<Case>& cases, int reps) {
  int failures = 0;
  std::printf("%-22s %12s %12s %9s  %s\n", "kernel", "parallel(us)", "serial(us)",
              "speedup", "bit-equal");
  for (const Case& c : cases) {
    Tensor p = c.parallel();
    Tensor s = c.serial();
    const bool same = bit_equal(p, s);
    failures += same ? 0 : 1;

    auto time_us = [&](const std::function<Tensor()>& fn) {
      const auto t0 = std::chrono::steady_clock::now();
      for (int r = 0; r < reps; ++r) fn();
      const auto t1 = std::chrono::steady_clock::now();
      return std::chrono::duration<double, std::micro>(t1 - t0).count() / reps;
    };
    const double tp = time_us(c.parallel);
    const double ts = time_us(c.serial);
    std::printf("%-22s %12.1f %12.1f %8.2fx  %s\n", c.name.c_str(), tp, ts, ts / tp,
                same ? "yes" : "NO");
  }
  return failures;
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 20;
  if (reps < 1) {
    std::fprintf(stderr, "usage: %s [reps], reps >= 1\n", argv[0]);
    return 2;
  }
  Rng rng(7);
  const Tensor a = random_tensor({128, 128}, rng);
  const Tensor b = random_tensor({128, 128}, rng);
  const Tensor wide = random_tensor({64, 512}, rng);
  const Tensor gain = random_tensor({512}, rng);
  const Tensor bias = random_tensor({512}, rng);
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < 256; ++i) ids.push_back(i % 128);

  std::vector<Case> cases;
  cases.push_back({"matmul 128x128",
                   [&] { return kernels::matmul(a, b); },
                   [&] { return kernels::serial::matmul(a, b); }});
  cases.push_back({"matmul_nt 128x128",
                   [&] { return kernels::matmul_nt(a, b); },
                   [&] { return kernels::serial::matmul_nt(a, b); }});
  cases.push_back({"softmax 64x512",
                   [&] { return kernels::softmax(wide); },
                   [&] { return kernels::serial::softmax(wide); }});
  cases.push_back({"gelu 64x512",
                   [&] { return kernels::gelu_fwd(wide); },
                   [&] { return kernels::serial::gelu_fwd(wide); }});
  cases.push_back({"layer_norm 64x512",
                   [&] { return kernels::layer_norm(wide, gain, bias, 1e-5); },
                   [&] { return kernels::serial::layer_norm(wide, gain, bias, 1e-5); }});
  cases.push_back({"embedding 256 of 128",
                   [&] { return kernels::embedding(a, ids); },
                   [&] { return kernels::serial::embedding(a, ids); }});

  const int failures = run(cases, reps);
  if (failures) {
    std::printf("%d kernel(s) diverged between lanes\n", failures);
    return 1;
  }
  return 0;
}
