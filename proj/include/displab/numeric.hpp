#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace displab {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Neumaier-compensated accumulator; works for double and std::complex<double>.
template <class T>
class CompensatedSum {
 public:
  void add(T x) {
    add_component(sum_, comp_, x);
  }
  CompensatedSum& operator+=(T x) {
    add(x);
    return *this;
  }
  T value() const { return sum_ + comp_; }

 private:
  static void add_scalar(double& s, double& c, double x) {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  static void add_component(double& s, double& c, double x) { add_scalar(s, c, x); }
  static void add_component(Complex& s, Complex& c, Complex x) {
    double sr = s.real(), si = s.imag(), cr = c.real(), ci = c.imag();
    add_scalar(sr, cr, x.real());
    add_scalar(si, ci, x.imag());
    s = {sr, si};
    c = {cr, ci};
  }

  T sum_{};
  T comp_{};
};

// Counter-based generator: a pure function of (seed, counter), so values
// keyed by n are reproducible regardless of generation order or threading.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t keyed_random(std::uint64_t seed, std::uint64_t counter) {
  return splitmix64(splitmix64(seed) ^ (counter * 0xd1b54a32d192ed03ULL));
}

// Uniform in [0, 1) with 53 random bits.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t counter) {
  return static_cast<double>(keyed_random(seed, counter) >> 11) * 0x1.0p-53;
}

// Smooth step on [0, 1]: b(u) = s(u) / (s(u) + s(1 - u)), s(u) = exp(-steepness / u).
// b(0) = 0, b(1) = 1, b(u) + b(1 - u) = 1.
inline double bump_ratio(double u, double steepness = 1.0) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  // exp(-k/u) / (exp(-k/u) + exp(-k/(1-u))) = 1 / (1 + exp(k/u - k/(1-u)))
  const double z = steepness / u - steepness / (1.0 - u);
  if (z > 700.0) return 0.0;
  return 1.0 / (1.0 + std::exp(z));
}

}  // namespace displab
