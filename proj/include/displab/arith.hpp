#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "displab/numeric.hpp"

namespace displab {

struct PrimePower {
  std::uint64_t p = 0;
  std::uint32_t e = 0;
};

// Factorization of a single integer, primes ascending. No integer below
// 2^64 has more than 15 distinct prime factors.
class Factorization {
 public:
  static constexpr std::size_t kMaxDistinct = 15;

  void push(std::uint64_t p, std::uint32_t e) { terms_[size_++] = {p, e}; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  const PrimePower& operator[](std::size_t i) const { return terms_[i]; }
  std::span<const PrimePower> terms() const { return {terms_.data(), size_}; }
  void clear() { size_ = 0; }

 private:
  std::array<PrimePower, kMaxDistinct> terms_{};
  std::size_t size_ = 0;
};

// ---------------------------------------------------------------------------
// Elementary modular arithmetic.

std::int64_t mod_floor(std::int64_t a, std::int64_t m);
std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m);
std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m);

// x in [1, m-1] with a*x = 1 mod m (extended Euclid). Throws NotInvertible
// carrying gcd(a, m) when no inverse exists. m == 1 returns 0, the only
// residue modulo 1.
std::int64_t mod_inverse(std::int64_t a, std::int64_t m);

struct Congruence {
  std::int64_t residue = 0;
  std::int64_t modulus = 1;
  friend bool operator==(const Congruence&, const Congruence&) = default;
};

// Unique class modulo the product solving every congruence. Moduli must be
// pairwise coprime; the product must fit in int64 (128-bit intermediates).
Congruence crt(std::span<const Congruence> system);

// Merge of two congruences with arbitrary moduli: returns false when they
// are incompatible, otherwise writes the class modulo lcm.
bool crt_merge(const Congruence& x, const Congruence& y, Congruence& out);

// n = d1 * n_prime with every prime of d1 dividing d and gcd(n_prime, d) = 1.
struct DInftySplit {
  std::uint64_t d1 = 1;
  std::uint64_t n_prime = 1;
};
DInftySplit dinfty_split(std::uint64_t n, std::uint64_t d);

// ---------------------------------------------------------------------------
// Factorization and multiplicative functions of single integers.

// Trial division; fine for n up to ~10^12.
Factorization factor(std::uint64_t n);

// Number of ordered k-tuples with product n: product of C(e + k - 1, k - 1).
std::uint64_t tau_k(std::uint64_t n, unsigned k);
std::uint64_t tau_k(const Factorization& f, unsigned k);
std::uint64_t binomial(std::uint64_t n, std::uint64_t r);

std::uint64_t euler_phi(std::uint64_t n);
int moebius(std::uint64_t n);
bool is_prime(std::uint64_t n);

// All primes <= limit (simple Eratosthenes).
std::vector<std::uint64_t> primes_up_to(std::uint64_t limit);

// flags[i] == 1 iff lo + i is prime, segmented Eratosthenes on [lo, hi].
std::vector<std::uint8_t> prime_flags(std::uint64_t lo, std::uint64_t hi);

// Squarefree divisors d of n (given by its factorization) with their
// Moebius signs, unordered.
std::vector<std::pair<std::uint64_t, int>> squarefree_divisors(const Factorization& f);

// ---------------------------------------------------------------------------
// Segmented factorization pass.

using FactorizationVisitor = std::function<void(std::uint64_t n, const Factorization& f)>;

// Calls visit(n, factorization of n) for every n in [lo, hi]. Segments are
// processed in parallel; visit must only touch state owned by n.
void for_each_factorization(std::uint64_t lo, std::uint64_t hi, const FactorizationVisitor& visit);

// ---------------------------------------------------------------------------

inline constexpr std::size_t kDefaultSieveEntryCap = 60'000'000;

// Per-integer arithmetic data on [lo, hi]. Immutable after build.
class SieveTable {
 public:
  static SieveTable build(std::uint64_t lo, std::uint64_t hi,
                          std::size_t max_entries = kDefaultSieveEntryCap);

  std::uint64_t lo() const { return lo_; }
  std::uint64_t hi() const { return hi_; }
  std::size_t size() const { return spf_.size(); }
  bool contains(std::uint64_t n) const { return n >= lo_ && n <= hi_; }
  bool covers(std::uint64_t lo, std::uint64_t hi) const { return lo >= lo_ && hi <= hi_; }

  // Accessors require contains(n).
  std::uint64_t spf(std::uint64_t n) const { return spf_[n - lo_]; }
  std::uint64_t phi(std::uint64_t n) const { return phi_[n - lo_]; }
  int mu(std::uint64_t n) const { return mu_[n - lo_]; }
  unsigned big_omega(std::uint64_t n) const { return big_omega_[n - lo_]; }
  unsigned small_omega(std::uint64_t n) const { return small_omega_[n - lo_]; }
  bool is_prime(std::uint64_t n) const { return n >= 2 && spf_[n - lo_] == n; }

  // tau_k over a sub-range, derived from exponent vectors by re-sieving.
  std::vector<std::uint64_t> tau_k_values(unsigned k, std::uint64_t from, std::uint64_t to) const;

  // Values of a multiplicative function given on prime powers, over [from, to].
  std::vector<Complex> multiplicative_values(
      const std::function<Complex(std::uint64_t p, std::uint32_t e)>& on_prime_power,
      std::uint64_t from, std::uint64_t to) const;

 private:
  void check_subrange(std::uint64_t from, std::uint64_t to) const;

  std::uint64_t lo_ = 1;
  std::uint64_t hi_ = 0;
  std::vector<std::uint64_t> spf_;
  std::vector<std::uint64_t> phi_;
  std::vector<std::int8_t> mu_;
  std::vector<std::uint8_t> big_omega_;
  std::vector<std::uint8_t> small_omega_;
};

// ---------------------------------------------------------------------------
// Dirichlet characters modulo a prime p: chi_j(g^m) = e(j m / (p - 1)).

inline constexpr std::uint64_t kDefaultCharacterCap = 100'000;

class PrimeCharacterTable {
 public:
  static PrimeCharacterTable build(std::uint64_t p, std::uint64_t cap = kDefaultCharacterCap);

  std::uint64_t modulus() const { return p_; }
  std::uint64_t primitive_root() const { return g_; }
  std::size_t count() const { return p_ - 1; }
  // Exponent m with g^m = n mod p; requires p not dividing n.
  std::uint64_t dlog(std::uint64_t n) const { return dlog_[n % p_]; }
  // chi_j(n); zero when p | n. j = 0 is the principal character.
  Complex chi(std::uint64_t j, std::int64_t n) const;

 private:
  std::uint64_t p_ = 0;
  std::uint64_t g_ = 0;
  std::vector<std::uint32_t> dlog_;
};

}  // namespace displab
