#pragma once
// Slow, obviously-correct reference implementations used only by tests.

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;

inline std::map<std::uint64_t, unsigned> factor(std::uint64_t n) {
  std::map<std::uint64_t, unsigned> f;
  for (std::uint64_t p = 2; p * p <= n; ++p)
    while (n % p == 0) {
      ++f[p];
      n /= p;
    }
  if (n > 1) ++f[n];
  return f;
}

inline std::uint64_t spf(std::uint64_t n) {
  if (n < 2) return 1;
  for (std::uint64_t p = 2; p * p <= n; ++p)
    if (n % p == 0) return p;
  return n;
}

inline bool is_prime(std::uint64_t n) { return n >= 2 && spf(n) == n; }

inline std::uint64_t phi(std::uint64_t n) {
  std::uint64_t c = 0;
  for (std::uint64_t k = 1; k <= n; ++k) c += std::gcd(k, n) == 1;
  return c;
}

inline std::uint64_t phi_factored(std::uint64_t n) {
  std::uint64_t r = n;
  for (auto [p, e] : factor(n)) r = r / p * (p - 1);
  return r;
}

inline int mu(std::uint64_t n) {
  int s = 1;
  for (auto [p, e] : factor(n)) {
    if (e > 1) return 0;
    s = -s;
  }
  return s;
}

inline unsigned big_omega(std::uint64_t n) {
  unsigned c = 0;
  for (auto [p, e] : factor(n)) c += e;
  return c;
}

inline unsigned small_omega(std::uint64_t n) { return static_cast<unsigned>(factor(n).size()); }

// Ordered k-tuples with product n, by recursion over divisors.
inline std::uint64_t tau_k(std::uint64_t n, unsigned k) {
  if (k == 1) return 1;
  std::uint64_t c = 0;
  for (std::uint64_t d = 1; d <= n; ++d)
    if (n % d == 0) c += tau_k(n / d, k - 1);
  return c;
}

inline Complex e(double x) { return std::polar(1.0, 2 * M_PI * x); }

inline std::int64_t inverse(std::int64_t a, std::int64_t m) {
  a = ((a % m) + m) % m;
  for (std::int64_t x = 1; x < m; ++x)
    if (a * x % m == 1) return x;
  return 0;
}

}  // namespace oracle
