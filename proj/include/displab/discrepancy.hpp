#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "displab/numeric.hpp"
#include "displab/sequences.hpp"

namespace displab {

struct DiscrepancyReport {
  std::int64_t q = 1;
  std::int64_t a = 0;
  std::int64_t r = 1;
  Complex progression_sum;
  Complex coprime_sum;
  Complex value;  // progression_sum - coprime_sum / phi(q)
};

// E(beta, N, q, a). Requires gcd(a, q) = 1.
DiscrepancyReport E(const ArithSequence& beta, std::int64_t q, std::int64_t a);

// E*(beta, N, q, a; r): progression side restricted to (n, r) = 1, coprime
// side to (n, q r) = 1.
DiscrepancyReport E_star(const ArithSequence& beta, std::int64_t q, std::int64_t a,
                         std::int64_t r);

enum class WindowMode { none, sharp, smooth };

// Weight on t = m n / x: none -> 1; sharp -> 1 on (1, 2]; smooth -> 1 on
// [1, 2], 0 outside (1 - delta, 2 + delta), bump edges in between.
struct Window {
  WindowMode mode = WindowMode::none;
  std::int64_t x = 0;
  double delta = -1;  // smooth only; negative means (log x)^-2
  double steepness = 1.0;

  static Window none() { return {}; }
  static Window sharp(std::int64_t x) { return {WindowMode::sharp, x, -1, 1.0}; }
  static Window smooth(std::int64_t x, double delta = -1) { return {WindowMode::smooth, x, delta, 1.0}; }

  double effective_delta() const;
  double weight(std::int64_t mn) const;
};

std::string to_string(WindowMode mode);
WindowMode window_mode_from_string(const std::string& name);

// E(alpha, beta, M, N, q, a) with optional window on m n.
DiscrepancyReport E_conv(const ArithSequence& alpha, const ArithSequence& beta, std::int64_t q,
                         std::int64_t a, const Window& window = {});

struct DeltaReport {
  std::int64_t Q = 1;
  std::int64_t a = 0;
  std::vector<std::int64_t> moduli;     // q ~ Q with (q, a) = 1, ascending
  std::vector<double> per_q;            // |E| for each modulus
  std::vector<Complex> values;          // the signed E values
  double total = 0;                     // sum of per_q
};

enum class EvalPath { fast, oracle };

// Delta(alpha, beta, M, N, Q, a) = sum_{q ~ Q, (q, a) = 1} |E(alpha, beta, M, N, q, a)|.
DeltaReport Delta(const ArithSequence& alpha, const ArithSequence& beta, std::int64_t Q,
                  std::int64_t a, const Window& window = {}, EvalPath path = EvalPath::fast);

// Single-sequence analogue: sum_{q ~ Q, (q, a) = 1} |E(beta, N, q, a)|.
DeltaReport Delta_single(const ArithSequence& beta, std::int64_t Q, std::int64_t a,
                         EvalPath path = EvalPath::fast);

// calE*(beta, N, Q) = sum_{delta <= 2Q} sum_{v ~ Q/delta} sum_{(delta', delta) = 1}
// |E*(beta, N, delta, delta'; v)|^2.
double calE_star(const ArithSequence& beta, std::int64_t Q);

// Per-delta pieces of calE*: entry delta holds
// sum_{v ~ Q/delta} (1/v) sum_{delta'} |E*(beta, delta, delta'; v)|^2 (weighted)
// and the unweighted sum.
struct CalEStarTerms {
  std::vector<double> plain;     // index delta, 1..2Q
  std::vector<double> weighted;  // same with 1/v
};
CalEStarTerms calE_star_terms(const ArithSequence& beta, std::int64_t Q);

std::string discrepancy_csv_header();
std::string to_csv_row(const DiscrepancyReport& r);
std::string delta_csv_header();
std::string to_csv_rows(const DeltaReport& r);

}  // namespace displab
