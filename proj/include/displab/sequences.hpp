#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "displab/arith.hpp"
#include "displab/numeric.hpp"

namespace displab {

// A complex sequence supported on (n_lo, 2 n_lo] with |value(n)| <= tau_k(n),
// k = bound_order. Immutable.
class ArithSequence {
 public:
  ArithSequence() = default;

  // Validates the divisor bound (1e-9 slack) and throws InvalidArgument on
  // the first violation.
  static ArithSequence from_values(std::int64_t n_lo, std::vector<Complex> values,
                                   unsigned bound_order);

  std::int64_t n_lo() const { return n_lo_; }
  std::int64_t n_hi() const { return 2 * n_lo_; }
  std::int64_t first() const { return n_lo_ + 1; }
  std::size_t size() const { return values_.size(); }
  unsigned bound_order() const { return bound_order_; }
  bool contains(std::int64_t n) const { return n > n_lo_ && n <= 2 * n_lo_; }
  Complex value(std::int64_t n) const { return contains(n) ? values_[n - n_lo_ - 1] : Complex{}; }
  Complex operator[](std::size_t i) const { return values_[i]; }
  std::span<const Complex> values() const { return values_; }

  double l2_norm() const;
  ArithSequence scaled(Complex c) const;

 private:
  std::int64_t n_lo_ = 0;
  std::vector<Complex> values_;
  unsigned bound_order_ = 1;
};

ArithSequence operator+(const ArithSequence& x, const ArithSequence& y);

enum class SequenceKind {
  constant_one,
  moebius,
  tau_k,
  prime_indicator,
  omega_eq,
  multiplicative_from_primes,
  sieve_weight_divisor_sum,
  random_unimodular,
  random_pm1,
};

std::string to_string(SequenceKind kind);
SequenceKind sequence_kind_from_string(const std::string& name);

// Factorization-shape restrictions modelled on the sets used for the
// multiplicative-function and almost-prime corollaries.
enum class SetFilterKind { none, smooth_ladder, almost_prime_ladder };

struct SetFilter {
  SetFilterKind kind = SetFilterKind::none;
  double x = 0;            // scale; 0 means use n_lo
  double epsilon = 0.2;
  double A = 2.5;          // ladder ratio (1 + Delta) with Delta = (log x)^-A
  double y_exponent = 0.2; // y = exp((log x)^y_exponent)
  double c0 = 1.0;
  unsigned k = 2;          // Omega(n) for the almost-prime ladder
};

// Membership tests on a factorization.
//  smooth_ladder: some prime in J = [exp((log x)^eps), x^eps] and at most one
//    prime factor (with multiplicity) in each [M_l, M_{l+1}), M_l = M_0 (1+Delta)^l.
//  almost_prime_ladder: Omega(n) = k, smallest prime in [y, c0 x^eps], at most
//    one prime factor in each [y 2^j, y 2^{j+1}) below c0 x^eps.
bool in_filter_set(const Factorization& f, const SetFilter& filter, double x);

struct SequenceSpec {
  SequenceKind kind = SequenceKind::constant_one;
  std::int64_t n_lo = 1;
  double twist_t = 0.0;
  unsigned k = 2;                    // tau_k and omega_eq
  std::vector<Complex> prime_table;  // multiplicative_from_primes: g(p^e) = table[p mod r]^e
  std::int64_t z = 16;               // sieve_weight_divisor_sum
  std::uint64_t seed = 0;
  SetFilter filter;
};

// Values on (n_lo, 2 n_lo]. The sieve must cover that range unless it is
// empty (hi < lo), in which case a private one is built.
ArithSequence generate(const SequenceSpec& spec, const SieveTable& sieve);
ArithSequence generate(const SequenceSpec& spec);

unsigned default_bound_order(const SequenceSpec& spec);

// (sum_{d | n, d <= sqrt z} mu(d) (1 - log d / log sqrt z))^2.
double sieve_weight_divisor_sum(std::int64_t n, std::int64_t z);
double sieve_weight_divisor_sum(const Factorization& f, std::int64_t z);

// Coefficients lambda_{d,z}, d <= z, of the expanded square above:
// result[d] for 1 <= d <= z (result[0] unused).
std::vector<double> sieve_weights(std::int64_t z);

// max over 2 <= q <= q_max, (a, q) = 1, 1 <= r <= r_max of
// |E*(seq, q, a; r)| / (tau_k(r) N), k = bound_order, N = n_lo.
double siegel_walfisz_score(const ArithSequence& seq, std::int64_t q_max, std::int64_t r_max);

// The unique split n = b c with every prime of b below smooth_below and every
// prime of c above rough_above; empty when n has a prime in between.
std::optional<std::pair<std::uint64_t, std::uint64_t>> smooth_rough_split(
    const Factorization& f, double smooth_below, double rough_above);

// beta_n = g(b) g(c) over that split (0 when no split exists).
ArithSequence smooth_rough_convolution(const std::function<Complex(std::uint64_t)>& g,
                                       double smooth_below, double rough_above,
                                       std::int64_t n_lo, unsigned bound_order);

}  // namespace displab
