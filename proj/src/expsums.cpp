#include "displab/expsums.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "displab/arith.hpp"
#include "displab/errors.hpp"

namespace displab {

namespace {

Complex phase_of_residue(std::int64_t r, std::int64_t den) {
  // r in [0, den); fold to (-den/2, den/2] so the angle stays small.
  if (2 * static_cast<__int128>(r) > den) r -= den;
  return std::polar(1.0, kTwoPi * (static_cast<double>(r) / static_cast<double>(den)));
}

std::vector<Complex> root_table(std::int64_t n) {
  std::vector<Complex> table(static_cast<std::size_t>(n));
  for (std::int64_t j = 0; j < n; ++j) table[j] = phase_of_residue(j, n);
  return table;
}

double l2_norm(std::span<const Complex> v) {
  double s = 0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s);
}

double l1_norm(std::span<const Complex> v) {
  double s = 0;
  for (const auto& x : v) s += std::abs(x);
  return s;
}

void check_coefficients(const IntRange& r, std::size_t n, const char* name) {
  if (r.hi < r.lo || static_cast<std::size_t>(r.size()) != n)
    throw InvalidArgument(std::string("trilinear_sum: coefficient vector ") + name +
                          " does not match its range");
  if (r.lo < 0) throw InvalidArgument("trilinear_sum: ranges must be positive");
}

}  // namespace

Complex e_frac(std::int64_t num, std::int64_t den) {
  if (den < 1) throw InvalidArgument("e_frac: denominator must be >= 1");
  return phase_of_residue(mod_floor(num, den), den);
}

Complex e_frac(__int128 num, std::int64_t den) {
  if (den < 1) throw InvalidArgument("e_frac: denominator must be >= 1");
  __int128 r = num % den;
  if (r < 0) r += den;
  return phase_of_residue(static_cast<std::int64_t>(r), den);
}

Complex complete_kloosterman(std::int64_t a, std::int64_t b, std::int64_t c) {
  if (c < 1) throw InvalidArgument("complete_kloosterman: modulus must be >= 1");
  const std::int64_t ar = mod_floor(a, c), br = mod_floor(b, c);
  const auto table = root_table(c);
  CompensatedSum<Complex> sum;
  for (std::int64_t x = 0; x < c; ++x) {
    if (std::gcd(x, c) != 1) continue;
    const std::int64_t xbar = mod_inverse(x, c);
    const auto phase = (static_cast<__int128>(ar) * x + static_cast<__int128>(br) * xbar) % c;
    sum += table[static_cast<std::size_t>(phase)];
  }
  return sum.value();
}

double trilinear_bound_formula(double norm_alpha, double norm_beta, double norm_nu,
                               std::int64_t theta, double A, double M, double N,
                               const BoundParams& params) {
  const double eps = params.epsilon;
  const double amn = A * M * N;
  const double shape = std::pow(amn, 7.0 / 20.0 + eps) * std::pow(M + N, 0.25) +
                       std::pow(amn, 3.0 / 8.0 + eps) * std::pow(A * N + A * M, 0.125);
  const double twist = std::sqrt(1.0 + std::abs(static_cast<double>(theta)) * A / (M * N));
  return params.constant * norm_alpha * norm_beta * norm_nu * twist * shape;
}

CancellationReport trilinear_sum(const TrilinearConfig& cfg, const BoundParams& params,
                                 double budget) {
  if (cfg.theta == 0) throw InvalidArgument("trilinear_sum: theta must be non-zero");
  check_coefficients(cfg.a_range, cfg.nu.size(), "nu");
  check_coefficients(cfg.m_range, cfg.alpha.size(), "alpha");
  check_coefficients(cfg.n_range, cfg.beta.size(), "beta");
  const double cost = static_cast<double>(cfg.a_range.size()) * cfg.m_range.size() *
                      static_cast<double>(cfg.n_range.size());
  if (cost > budget) throw BudgetExceeded("trilinear_sum", cost, budget);

  const std::int64_t n_count = cfg.n_range.size();
  std::vector<Complex> per_n(static_cast<std::size_t>(n_count));
  std::vector<std::uint64_t> skipped(static_cast<std::size_t>(n_count), 0);

  // n outermost; for each n the inverses mbar are computed once and alpha is
  // bucketed by mbar, so the a-sum runs once per occupied residue.
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t j = 0; j < n_count; ++j) {
    const std::int64_t n = cfg.n_range.first() + j;
    const auto table = root_table(n);
    std::vector<Complex> bucket(static_cast<std::size_t>(n));
    std::vector<std::int64_t> touched;
    for (std::int64_t i = 0; i < cfg.m_range.size(); ++i) {
      const std::int64_t m = cfg.m_range.first() + i;
      if (std::gcd(m, n) != 1) {
        ++skipped[j];
        continue;
      }
      const std::int64_t mbar = mod_inverse(m, n);
      if (bucket[mbar] == Complex{}) touched.push_back(mbar);
      bucket[mbar] += cfg.alpha[i];
    }
    const std::int64_t theta_r = mod_floor(cfg.theta, n);
    CompensatedSum<Complex> acc;
    for (std::int64_t r : touched) {
      const std::int64_t step = static_cast<std::int64_t>(static_cast<__int128>(theta_r) * r % n);
      std::int64_t phase = static_cast<std::int64_t>(
          static_cast<__int128>(step) * cfg.a_range.first() % n);
      Complex inner = 0.0;
      for (std::int64_t k = 0; k < cfg.a_range.size(); ++k) {
        inner += cfg.nu[k] * table[phase];
        phase += step;
        if (phase >= n) phase -= n;
      }
      acc += bucket[r] * inner;
    }
    per_n[j] = cfg.beta[j] * acc.value();
  }

  CancellationReport rep;
  CompensatedSum<Complex> total;
  for (std::int64_t j = 0; j < n_count; ++j) {
    total += per_n[j];
    rep.skipped_pairs += skipped[j];
  }
  rep.sum_value = total.value();
  rep.norm_alpha = l2_norm(cfg.alpha);
  rep.norm_beta = l2_norm(cfg.beta);
  rep.norm_nu = l2_norm(cfg.nu);
  rep.trivial_bound = l1_norm(cfg.nu) * l1_norm(cfg.alpha) * l1_norm(cfg.beta);
  rep.bilinear_bound = trilinear_bound_formula(
      rep.norm_alpha, rep.norm_beta, rep.norm_nu, cfg.theta, static_cast<double>(cfg.a_range.lo),
      static_cast<double>(cfg.m_range.lo), static_cast<double>(cfg.n_range.lo), params);
  const double mag = std::abs(rep.sum_value);
  rep.ratio_trivial = rep.trivial_bound > 0 ? mag / rep.trivial_bound : 0.0;
  rep.ratio_bound = rep.bilinear_bound > 0 ? mag / rep.bilinear_bound : 0.0;
  return rep;
}

Complex bilinear_sum(std::int64_t theta, IntRange m_range, std::span<const Complex> alpha,
                     IntRange n_range, std::span<const Complex> beta) {
  check_coefficients(m_range, alpha.size(), "alpha");
  check_coefficients(n_range, beta.size(), "beta");
  CompensatedSum<Complex> sum;
  for (std::int64_t j = 0; j < n_range.size(); ++j) {
    const std::int64_t n = n_range.first() + j;
    for (std::int64_t i = 0; i < m_range.size(); ++i) {
      const std::int64_t m = m_range.first() + i;
      if (std::gcd(m, n) != 1) continue;
      const __int128 num = static_cast<__int128>(theta) * mod_inverse(m, n);
      sum += alpha[i] * beta[j] * e_frac(num, n);
    }
  }
  return sum.value();
}

WErr1Result werr1_inner_sum(const WErr1Params& p, std::span<const Complex> eta0,
                            std::span<const Complex> eta1, std::span<const Complex> eta2,
                            const BoundParams& bound) {
  if (p.H < 1 || p.K1 < 1 || p.K2 < 1 || p.nu1p < 1 || p.nu2 < 1 || p.gamma < 1 || p.d < 1 ||
      p.d1 < 1)
    throw InvalidArgument("werr1_inner_sum: sizes and fixed variables must be positive");
  if (eta0.size() != static_cast<std::size_t>(p.H) ||
      eta1.size() != static_cast<std::size_t>(p.K1) ||
      eta2.size() != static_cast<std::size_t>(p.K2))
    throw InvalidArgument("werr1_inner_sum: coefficient lengths must be H, K1, K2");

  WErr1Result res;
  const std::int64_t g_d_d1 = p.gamma * p.d * p.d1;
  const std::int64_t shift = p.d1 * p.nu1p - p.nu2;
  CompensatedSum<Complex> sum;
  for (std::int64_t i2 = 0; i2 < p.K2; ++i2) {
    const std::int64_t k2 = p.K2 + 1 + i2;
    const std::int64_t modulus = p.nu1p * k2;
    if (std::gcd(g_d_d1, modulus) != 1) {
      res.skipped += static_cast<std::uint64_t>(p.K1);
      continue;
    }
    const std::int64_t inv_gdd1 = mod_inverse(g_d_d1, modulus);
    for (std::int64_t i1 = 0; i1 < p.K1; ++i1) {
      const std::int64_t k1 = p.K1 + 1 + i1;
      const std::int64_t v = p.nu2 * k1;
      if (std::gcd(v, modulus) != 1) {
        ++res.skipped;
        continue;
      }
      // base = a * gbar dbar d1bar * (d1 nu1' - nu2) * conj(nu2 k1') mod modulus
      __int128 base = mod_floor(p.a, modulus);
      base = base * inv_gdd1 % modulus;
      base = base * mod_floor(shift, modulus) % modulus;
      base = base * mod_inverse(v, modulus) % modulus;
      Complex inner = 0.0;
      for (std::int64_t h = 1; h <= p.H; ++h) inner += eta0[h - 1] * e_frac(base * h, modulus);
      sum += eta1[i1] * eta2[i2] * inner;
    }
  }
  res.value = sum.value();
  res.mapping.theta = p.a * shift;
  res.mapping.m_scale = g_d_d1 * p.nu2;
  res.mapping.n_scale = p.nu1p;
  res.mapping.A = static_cast<double>(p.H);
  res.mapping.M = static_cast<double>(res.mapping.m_scale) * static_cast<double>(p.K1);
  res.mapping.N = static_cast<double>(p.nu1p) * static_cast<double>(p.K2);
  if (res.mapping.theta != 0)
    res.bound = trilinear_bound_formula(l2_norm(eta1), l2_norm(eta2), l2_norm(eta0),
                                        res.mapping.theta, res.mapping.A, res.mapping.M,
                                        res.mapping.N, bound);
  return res;
}

}  // namespace displab
