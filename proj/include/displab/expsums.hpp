#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "displab/numeric.hpp"

namespace displab {

// exp(2 pi i num / den) evaluated from the reduced residue num mod den, so
// the phase carries no drift for 64-bit numerators.
Complex e_frac(std::int64_t num, std::int64_t den);
Complex e_frac(__int128 num, std::int64_t den);

// S(a, b; c) = sum over x mod c, gcd(x, c) = 1, of e((a x + b xbar) / c).
Complex complete_kloosterman(std::int64_t a, std::int64_t b, std::int64_t c);

// Integer range lo < v <= hi (the "v ~ V" convention when hi = 2 lo).
struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  static IntRange dyadic(std::int64_t v) { return {v, 2 * v}; }
  std::int64_t size() const { return hi > lo ? hi - lo : 0; }
  std::int64_t first() const { return lo + 1; }
};

// sum_{a} sum_{m} sum_{n, (m,n)=1} nu(a) alpha(m) beta(n) e(theta a mbar / n).
// Coefficients are indexed by offset from range.first().
struct TrilinearConfig {
  std::int64_t theta = 1;
  IntRange a_range, m_range, n_range;
  std::vector<Complex> nu, alpha, beta;
};

struct BoundParams {
  double epsilon = 0.05;
  double constant = 1.0;
};

struct CancellationReport {
  Complex sum_value;
  double trivial_bound = 0;     // l1 product of the coefficients
  double bilinear_bound = 0;    // trilinear-form bound formula at (epsilon, constant)
  double ratio_trivial = 0;     // |sum| / trivial_bound
  double ratio_bound = 0;       // |sum| / bilinear_bound
  std::uint64_t skipped_pairs = 0;  // (m, n) pairs with gcd > 1
  double norm_alpha = 0, norm_beta = 0, norm_nu = 0;
};

inline constexpr double kDefaultTrilinearBudget = 1e10;

// Right-hand side of the trilinear Kloosterman-fraction bound.
double trilinear_bound_formula(double norm_alpha, double norm_beta, double norm_nu,
                               std::int64_t theta, double A, double M, double N,
                               const BoundParams& params);

CancellationReport trilinear_sum(const TrilinearConfig& cfg, const BoundParams& params = {},
                                 double budget = kDefaultTrilinearBudget);

// sum_{m} sum_{n, (m,n)=1} alpha(m) beta(n) e(theta mbar / n).
Complex bilinear_sum(std::int64_t theta, IntRange m_range, std::span<const Complex> alpha,
                     IntRange n_range, std::span<const Complex> beta);

// The inner exponential sum left after the Bezout transformation of the
// W error term, with nu1' and nu2 fixed:
//   sum_{1<=h<=H} sum_{k1' ~ K1} sum_{k2' ~ K2} eta0(h) eta1(k1') eta2(k2')
//     e(a h gbar dbar d1bar (d1 nu1' - nu2) conj(nu2 k1') / (nu1' k2'))
// where bars are inverses mod nu1' k2'.
struct WErr1Params {
  std::int64_t a = 1;
  std::int64_t gamma = 1, d = 1, d1 = 1;
  std::int64_t H = 1;
  std::int64_t nu1p = 1, nu2 = 1;
  std::int64_t K1 = 1, K2 = 1;
};

// Variables of the trilinear bound the inner sum maps onto.
struct TrilinearMapping {
  std::int64_t theta = 0;   // a (d1 nu1' - nu2)
  std::int64_t m_scale = 0; // gamma d d1 nu2; m = m_scale * k1'
  std::int64_t n_scale = 0; // nu1'; n = n_scale * k2'
  double A = 0, M = 0, N = 0;
};

struct WErr1Result {
  Complex value;
  std::uint64_t skipped = 0;
  TrilinearMapping mapping;
  double bound = 0;  // trilinear bound at the mapped sizes
};

WErr1Result werr1_inner_sum(const WErr1Params& params, std::span<const Complex> eta0,
                            std::span<const Complex> eta1, std::span<const Complex> eta2,
                            const BoundParams& bound = {});

}  // namespace displab
