#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "displab/numeric.hpp"
#include "displab/sequences.hpp"

namespace displab {

// psi = 1 on [1, 2], 0 outside (1/2, 5/2); edges b(2t - 1) and b(5 - 2t) with
// b the bump ratio. psi is symmetric about 3/2, so
// psi_hat(xi) = e(-3 xi / 2) R(xi) with R real.
class SmoothCutoff {
 public:
  explicit SmoothCutoff(double steepness = 1.0);

  double steepness() const { return steepness_; }
  double operator()(double t) const;
  double hat0() const { return hat0_; }
  // R(xi) by adaptive Gauss-Kronrod, absolute error <= 1e-10.
  double hat_real_part(double xi) const;
  Complex hat(double xi) const;
  // Beyond this |psi_hat| is below 1e-15 and treated as 0.
  double hat_cutoff() const { return xi_cut_; }

 private:
  double steepness_;
  double hat0_;
  double xi_cut_;
};

SmoothCutoff make_cutoff(double steepness = 1.0);
Complex psi_hat(const SmoothCutoff& cutoff, double xi);

// R(xi) tabulated on [0, hat_cutoff] and read back by cubic interpolation.
class PsiHatTable {
 public:
  explicit PsiHatTable(const SmoothCutoff& cutoff, double step = 1.0 / 512);
  Complex operator()(double xi) const;
  double step() const { return step_; }

 private:
  double step_;
  double xi_cut_;
  std::vector<double> r_;
};

// ---------------------------------------------------------------------------
// Poisson summation in progressions.

// Values psi(m / M) for floor(M/2) < m < ceil(5M/2).
struct PsiSamples {
  std::int64_t m_first = 0;
  std::vector<double> w;
  double at(std::int64_t m) const {
    const std::int64_t i = m - m_first;
    return (i >= 0 && i < static_cast<std::int64_t>(w.size())) ? w[i] : 0.0;
  }
  std::int64_t m_last() const { return m_first + static_cast<std::int64_t>(w.size()) - 1; }
  // sum over m = r mod modulus
  double progression_sum(std::int64_t r, std::int64_t modulus) const;
};
PsiSamples sample_cutoff(const SmoothCutoff& cutoff, std::int64_t M);

std::int64_t poisson_threshold_H(std::int64_t M, std::int64_t q);

struct PoissonResult {
  double approx = 0;
  double exact = 0;
  double residual = 0;
  std::int64_t H = 0;
};

// H < 0 selects the threshold; H below the threshold is rejected.
PoissonResult poisson_progression(const SmoothCutoff& cutoff, std::int64_t M, std::int64_t q,
                                  std::int64_t a, std::int64_t H = -1);

struct PoissonCoprimeResult {
  double exact = 0;
  double main = 0;      // (phi(q)/q) psi_hat(0) M
  double residual = 0;
  double scale = 0;     // tau_2(q) log^4(2M)
};
PoissonCoprimeResult poisson_coprime(const SmoothCutoff& cutoff, std::int64_t M, std::int64_t q);

// ---------------------------------------------------------------------------
// Exact re-indexings.

struct ReindexSums {
  Complex direct;
  Complex reindexed;
  double difference = 0;
};

using PairWeight = std::function<Complex(std::int64_t, std::int64_t)>;

// sum_{q1, q2 ~ Q} w vs sum_delta sum_{k1, k2 ~ Q/delta, (k1, k2) = 1} w(delta k1, delta k2).
ReindexSums gcd_reindex(std::int64_t Q, const PairWeight& w);
double gcd_reindex_check(std::int64_t Q, const PairWeight& w);

// sum_{n1, n2 ~ N} w vs the sum over (d, d1, nu1', nu2) with d1 | d^inf,
// (nu1', d) = 1, (d1 nu1', nu2) = 1 of w(d d1 nu1', d nu2).
ReindexSums conv_reindex(std::int64_t N, const PairWeight& w);

// ---------------------------------------------------------------------------
// Congruence reduction.

struct CongruenceReduction {
  std::int64_t n1 = 0, n2 = 0, q1 = 0, q2 = 0, a = 0;
  std::int64_t d = 0, d1 = 0, nu1p = 0, nu2 = 0;
  std::int64_t delta = 0, delta1 = 0, delta2 = 0, k1p = 0, k2p = 0;
  std::int64_t gamma = 0;   // delta delta1 delta2
  std::int64_t ell = 0;     // gamma k1' k2' = lcm(q1, q2)
  std::int64_t lambda = 0;  // class mod gamma with m = a lambda mod gamma
  std::int64_t m0 = 0;
  bool solvable = false;
};

// Requires gcd(a, q1 q2) = 1. Solvable iff (n1, q1) = (n2, q2) = 1 and
// n1 = n2 mod delta; otherwise the flag is false and ell, m0 stay 0.
CongruenceReduction reduce_congruence_system(std::int64_t n1, std::int64_t n2, std::int64_t q1,
                                             std::int64_t q2, std::int64_t a);

// m0 from the three-term display (a lambda k1'k2' conj(k1'k2') + ...) mod ell.
std::int64_t m0_display_formula(const CongruenceReduction& red);

// ---------------------------------------------------------------------------
// Bezout reciprocity.

struct BezoutTriple {
  std::int64_t r = 1, s = 1;
  std::int64_t s_bar = 0;  // inverse of s mod r
  std::int64_t r_bar = 0;  // inverse of r mod s
  // s_bar/r + r_bar/s - 1/(rs) = integer_part, exactly
  std::int64_t integer_part = 0;
  bool holds = false;
};
BezoutTriple bezout_reciprocity(std::int64_t r, std::int64_t s);

// conj(g nu1' k2')/k1' = 1/(g nu1' k1' k2') - conj(g) conj(k1')/(nu1' k2')
//                        - conj(nu1' k1' k2')/g  (mod 1), with each bar taken
// modulo the denominator it sits over. Checked exactly with 128-bit numerators.
bool bezout_three_term(std::int64_t g, std::int64_t nu1p, std::int64_t k1p, std::int64_t k2p);

// ---------------------------------------------------------------------------
// Dispersion decomposition.

// c_q (index q - Q - 1, q in (Q, 2Q]) with c_q E = |E|, 0 when (q, a) > 1.
// prime_only keeps prime q and zeroes the rest.
std::vector<Complex> signs_from_discrepancy(const ArithSequence& alpha, const ArithSequence& beta,
                                            std::int64_t Q, std::int64_t a,
                                            bool prime_only = false);

struct MainTerms {
  Complex U_main;       // psi_hat(0) M sum 1/(delta phi(delta)) ...
  Complex W_MT;         // psi_hat(0) M sum 1/delta ... sum over classes
  Complex T;            // W_MT - U_main, evaluated through E*
  double calE = 0;      // calE*(beta, N, Q)
  double bound_literal = 0;  // M Q^-1 calE*
  double bound_chain = 0;    // psi_hat(0) M sum_delta (H_delta/delta) sum_k (1/k) sum |E*|^2
};

MainTerms main_term_T(const std::vector<Complex>& c, const ArithSequence& beta, std::int64_t M,
                      std::int64_t Q, const SmoothCutoff& cutoff);

struct WTupleOptions {
  std::vector<std::int64_t> D_values;  // truncation levels to report
  std::int64_t D_split = 0;            // level used for the MT/Err1/Err2 split; 0 = none
  double H = -1;                       // Fourier length; < 0 means 4 L^4 Q^2 / M, L = log(2 M N)
  double budget = 5e8;                 // tuple-times-progression-length cap
};

struct WTupleResult {
  Complex W;                           // exact, tuple by tuple
  std::vector<Complex> W_trunc;        // one per D value
  std::vector<double> tail;            // |W - W_trunc|
  Complex MT, Err1, Err2;              // split of W(Q, D_split)
  double Err2_abs = 0;                 // sum of |c c beta beta| |Err2 per tuple|
  double H = 0;
  std::uint64_t tuples = 0;            // solvable tuples
};

WTupleResult W_tuples(const std::vector<Complex>& c, const ArithSequence& beta, std::int64_t M,
                      std::int64_t Q, std::int64_t a, const SmoothCutoff& cutoff,
                      const WTupleOptions& opts);

struct DispersionOptions {
  bool transformed = true;   // exact re-summed U and V
  bool tuples = true;        // tuple-level W, truncation and Fourier split
  std::int64_t D = 2;
  double H = -1;
  double budget = 5e8;
};

struct DispersionParts {
  std::int64_t M = 0, N = 0, Q = 0, a = 0;
  Complex U, V, W;                    // direct definitions
  double P_minus_R = 0;               // sum psi |P - R|^2, computed directly
  Complex U_transformed, V_transformed, W_transformed;
  bool transformed_done = false, tuples_done = false;
  Complex U_main;
  Complex W_MT_formula;
  std::int64_t D = 0;
  Complex W_trunc;
  double W_tail = 0;
  Complex W_MT, W_Err1, W_Err2;
  double W_Err2_bound = 0;
  Complex T;
  double T_bound_literal = 0, T_bound_chain = 0, calE = 0;
  double residual_VU = 0;             // |V - U|
  double dispersion = 0;              // Re(W - 2 Re V + U)
  double residual_disp = 0;           // dispersion - Re T
};

DispersionParts compute_UVW(const std::vector<Complex>& c, const ArithSequence& beta,
                            std::int64_t M, std::int64_t Q, std::int64_t a,
                            const SmoothCutoff& cutoff, const DispersionOptions& opts = {});

std::string dispersion_csv_header();
std::string to_csv_row(const DispersionParts& p);
std::string to_json(const DispersionParts& p);

}  // namespace displab
