#pragma once

#include <cstdint>

namespace ifbound {

/// Kahan-Babuska (Neumaier) compensated accumulator.
class KahanSum {
 public:
  KahanSum() = default;
  explicit KahanSum(double init) : sum_(init) {}

  void add(double x) {
    const double t = sum_ + x;
    if ((sum_ >= 0 ? sum_ : -sum_) >= (x >= 0 ? x : -x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  KahanSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Upper quantile z_{1-alpha/2} of the standard normal.
double normal_critical_value(double alpha);

/// SplitMix64 finalizer; used to derive independent RNG substreams.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t a,
                                       std::uint64_t b = 0) {
  return mix_seed(mix_seed(mix_seed(seed) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

}  // namespace ifbound
