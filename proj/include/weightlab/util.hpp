#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace weightlab {

// Neumaier compensated summation.
class Accumulator {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  Accumulator& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

// Seed for the i-th independent stream derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
double uniform01(Rng& g);

// Uniform integer in [0, n) by rejection; n > 0.
std::uint64_t uniform_index(Rng& g, std::uint64_t n);

// Explicit count if positive, else WEIGHTLAB_THREADS, else 1.
int resolve_threads(int requested);

// Runs fn(i) for i in [0, count) split into contiguous chunks. fn must only
// write to slot i so results do not depend on the thread count.
template <class F>
void parallel_for(std::size_t count, int threads, F&& fn) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t begin = count * w / workers;
    std::size_t end = count * (w + 1) / workers;
    pool.emplace_back([begin, end, w, &fn, &errors] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

inline constexpr const char* kVersion = "1.0.0";

}  // namespace weightlab
