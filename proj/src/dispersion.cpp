#include "displab/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "displab/arith.hpp"
#include "displab/discrepancy.hpp"
#include "displab/errors.hpp"
#include "displab/expsums.hpp"
#include "displab/format.hpp"

namespace displab {

namespace {

constexpr double kQuadratureTolerance = 1e-10;
constexpr double kHatNegligible = 1e-15;

double edge_integral(double steepness, double xi, double& err_out) {
  // int_{1/2}^{1} b(2 - 2s) cos(2 pi xi s) ds, split so each piece holds at
  // most one oscillation.
  using boost::math::quadrature::gauss_kronrod;
  const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(xi))));
  const double width = 0.5 / pieces;
  double total = 0, err_total = 0;
  auto f = [&](double s) { return bump_ratio(2.0 - 2.0 * s, steepness) * std::cos(kTwoPi * xi * s); };
  for (int i = 0; i < pieces; ++i) {
    const double lo = 0.5 + i * width, hi = lo + width;
    double err = 0;
    total += gauss_kronrod<double, 31>::integrate(f, lo, hi, 3, 1e-13, &err);
    // the error estimate is relative to the piece's L1 norm, at most width
    err_total += err * width;
  }
  err_out = err_total;
  return total;
}

void validate_signs(const std::vector<Complex>& c, std::int64_t Q, std::int64_t a) {
  if (Q < 1) throw InvalidArgument("dispersion: Q must be >= 1");
  if (c.size() != static_cast<std::size_t>(Q))
    throw InvalidArgument("dispersion: expected " + std::to_string(Q) + " coefficients c_q");
  for (std::int64_t q = Q + 1; q <= 2 * Q; ++q) {
    const Complex cq = c[q - Q - 1];
    const double mag = std::abs(cq);
    if (mag > 1e-9 && std::abs(mag - 1.0) > 1e-9)
      throw InvalidArgument("dispersion: |c_q| must be 0 or 1 (q = " + std::to_string(q) + ")");
    if (mag > 1e-9 && std::gcd(q, a) != 1)
      throw InvalidArgument("dispersion: c_q must vanish when (q, a) > 1 (q = " +
                            std::to_string(q) + ")");
  }
}

Complex coef(const std::vector<Complex>& c, std::int64_t Q, std::int64_t q) {
  return (q > Q && q <= 2 * Q) ? c[q - Q - 1] : Complex{};
}

std::uint64_t radical(std::uint64_t n) {
  std::uint64_t r = 1;
  for (const auto& t : factor(n).terms()) r *= t.p;
  return r;
}

// All integers <= limit whose prime factors divide d.
void d_infinity_numbers(const Factorization& f, std::size_t idx, std::int64_t current,
                        std::int64_t limit, std::vector<std::int64_t>& out) {
  if (idx == f.size()) {
    out.push_back(current);
    return;
  }
  const auto p = static_cast<std::int64_t>(f[idx].p);
  for (std::int64_t v = current; v <= limit; v *= p) {
    d_infinity_numbers(f, idx + 1, v, limit, out);
    if (v > limit / p) break;
  }
}

__int128 mulmod128(__int128 x, __int128 y, __int128 m) {
  __int128 r = (x % m) * (y % m) % m;
  return r < 0 ? r + m : r;
}

struct PairDecomposition {
  std::int64_t delta, delta1, delta2, k1p, k2p;
};

PairDecomposition decompose_moduli(std::int64_t q1, std::int64_t q2) {
  PairDecomposition p;
  p.delta = std::gcd(q1, q2);
  const auto s1 = dinfty_split(static_cast<std::uint64_t>(q1 / p.delta), static_cast<std::uint64_t>(p.delta));
  const auto s2 = dinfty_split(static_cast<std::uint64_t>(q2 / p.delta), static_cast<std::uint64_t>(p.delta));
  p.delta1 = static_cast<std::int64_t>(s1.d1);
  p.k1p = static_cast<std::int64_t>(s1.n_prime);
  p.delta2 = static_cast<std::int64_t>(s2.d1);
  p.k2p = static_cast<std::int64_t>(s2.n_prime);
  return p;
}

// One table per steepness for the life of the process.
const PsiHatTable& shared_table(const SmoothCutoff& cutoff) {
  static std::mutex lock;
  static std::map<double, std::unique_ptr<PsiHatTable>> tables;
  std::lock_guard<std::mutex> guard(lock);
  auto& slot = tables[cutoff.steepness()];
  if (!slot) slot = std::make_unique<PsiHatTable>(cutoff);
  return *slot;
}

}  // namespace

// ---------------------------------------------------------------------------

SmoothCutoff::SmoothCutoff(double steepness) : steepness_(steepness), hat0_(0), xi_cut_(0) {
  if (!(steepness > 0)) throw InvalidArgument("make_cutoff: steepness must be > 0");
  double err = 0;
  hat0_ = 2.0 * (0.5 + edge_integral(steepness_, 0.0, err));
  if (err > kQuadratureTolerance) throw ConvergenceError("psi_hat(0)", err);
  // Scan for the point past which |R| stays below the negligible level.
  int quiet = 0;
  for (double xi = 5.37; xi < 1e5; xi += 5.0) {
    if (std::abs(hat_real_part(xi)) < kHatNegligible) {
      if (++quiet == 3) {
        xi_cut_ = xi;
        break;
      }
    } else {
      quiet = 0;
    }
  }
  if (xi_cut_ == 0) throw ConvergenceError("psi_hat decay scan", 1e5);
}

double SmoothCutoff::operator()(double t) const {
  if (t <= 0.5 || t >= 2.5) return 0.0;
  if (t >= 1.0 && t <= 2.0) return 1.0;
  if (t < 1.0) return bump_ratio(2.0 * t - 1.0, steepness_);
  return bump_ratio(5.0 - 2.0 * t, steepness_);
}

double SmoothCutoff::hat_real_part(double xi) const {
  xi = std::abs(xi);
  if (xi == 0.0) return hat0_;
  double err = 0;
  const double edge = edge_integral(steepness_, xi, err);
  if (err > kQuadratureTolerance) throw ConvergenceError("psi_hat", err);
  const double plateau = std::sin(std::numbers::pi * xi) / (kTwoPi * xi);
  return 2.0 * (plateau + edge);
}

Complex SmoothCutoff::hat(double xi) const {
  if (xi_cut_ > 0 && std::abs(xi) > xi_cut_) return {};
  return std::polar(1.0, -kTwoPi * 1.5 * xi) * hat_real_part(xi);
}

SmoothCutoff make_cutoff(double steepness) { return SmoothCutoff(steepness); }

Complex psi_hat(const SmoothCutoff& cutoff, double xi) { return cutoff.hat(xi); }

PsiHatTable::PsiHatTable(const SmoothCutoff& cutoff, double step)
    : step_(step), xi_cut_(cutoff.hat_cutoff()) {
  if (!(step > 0)) throw InvalidArgument("PsiHatTable: step must be > 0");
  const auto n = static_cast<std::size_t>(std::ceil(xi_cut_ / step_)) + 3;
  r_.assign(n, 0.0);
  // Composite 20-point Gauss-Legendre on [1/2, 1] with at most half an
  // oscillation per piece at xi_cut; the cosines advance by rotation and are
  // reseeded at the start of every block.
  using rule = boost::math::quadrature::gauss<double, 20>;
  const int pieces = static_cast<int>(std::ceil(xi_cut_)) + 1;
  const double half = 0.25 / pieces;
  std::vector<double> nodes, weights;
  for (int p = 0; p < pieces; ++p) {
    const double mid = 0.5 + (2 * p + 1) * half;
    for (std::size_t k = 0; k < rule::abscissa().size(); ++k) {
      const double x = rule::abscissa()[k], w = rule::weights()[k];
      for (int sgn : {-1, 1}) {
        if (x == 0.0 && sgn == 1) continue;
        const double s = mid + sgn * half * x;
        nodes.push_back(s);
        weights.push_back(w * half * bump_ratio(2.0 - 2.0 * s, cutoff.steepness()));
      }
    }
  }
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t i0 = b * kBlock, i1 = std::min(n, i0 + kBlock);
    std::vector<double> acc(i1 - i0, 0.0);
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      Complex z = std::polar(1.0, kTwoPi * static_cast<double>(i0) * step_ * nodes[j]);
      const Complex rot = std::polar(1.0, kTwoPi * step_ * nodes[j]);
      for (std::size_t i = i0; i < i1; ++i) {
        acc[i - i0] += weights[j] * z.real();
        z *= rot;
      }
    }
    for (std::size_t i = i0; i < i1; ++i) {
      const double xi = static_cast<double>(i) * step_;
      const double plateau = i == 0 ? 0.5 : std::sin(std::numbers::pi * xi) / (kTwoPi * xi);
      r_[i] = 2.0 * (plateau + acc[i - i0]);
    }
  }
}

Complex PsiHatTable::operator()(double xi) const {
  const double x = std::abs(xi);
  if (x > xi_cut_) return {};
  const double u = x / step_;
  const auto i = static_cast<std::int64_t>(std::floor(u));
  const double t = u - static_cast<double>(i);
  auto at = [&](std::int64_t j) { return r_[static_cast<std::size_t>(std::abs(j))]; };  // R even
  const double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
  // cubic Lagrange through i-1, i, i+1, i+2
  const double r = -p0 * t * (t - 1) * (t - 2) / 6 + p1 * (t + 1) * (t - 1) * (t - 2) / 2 -
                   p2 * (t + 1) * t * (t - 2) / 2 + p3 * (t + 1) * t * (t - 1) / 6;
  return std::polar(1.0, -kTwoPi * 1.5 * xi) * r;
}

// ---------------------------------------------------------------------------

double PsiSamples::progression_sum(std::int64_t r, std::int64_t modulus) const {
  if (w.empty()) return 0.0;
  CompensatedSum<double> s;
  const std::int64_t start = m_first + mod_floor(r - m_first, modulus);
  for (std::int64_t m = start; m <= m_last(); m += modulus) s += w[m - m_first];
  return s.value();
}

PsiSamples sample_cutoff(const SmoothCutoff& cutoff, std::int64_t M) {
  if (M < 1) throw InvalidArgument("sample_cutoff: M must be >= 1");
  PsiSamples s;
  s.m_first = M / 2 + 1;
  const std::int64_t last = (5 * M + 1) / 2;  // ceil(5M/2) - 1 or 5M/2 exactly, psi = 0 there
  s.w.resize(static_cast<std::size_t>(last - s.m_first + 1));
  for (std::int64_t m = s.m_first; m <= last; ++m)
    s.w[m - s.m_first] = cutoff(static_cast<double>(m) / static_cast<double>(M));
  while (!s.w.empty() && s.w.back() == 0.0) s.w.pop_back();
  return s;
}

std::int64_t poisson_threshold_H(std::int64_t M, std::int64_t q) {
  const double L = std::log(2.0 * static_cast<double>(M));
  return static_cast<std::int64_t>(std::ceil(static_cast<double>(q) / M * L * L * L * L));
}

PoissonResult poisson_progression(const SmoothCutoff& cutoff, std::int64_t M, std::int64_t q,
                                  std::int64_t a, std::int64_t H) {
  if (M < 1 || q < 1) throw InvalidArgument("poisson_progression: M and q must be >= 1");
  const std::int64_t threshold = poisson_threshold_H(M, q);
  if (H < 0) H = threshold;
  if (H < threshold)
    throw InvalidArgument("poisson_progression: H = " + std::to_string(H) +
                          " is below the threshold " + std::to_string(threshold));
  PoissonResult res;
  res.H = H;
  res.exact = sample_cutoff(cutoff, M).progression_sum(a, q);
  const double scale = static_cast<double>(M) / static_cast<double>(q);
  CompensatedSum<double> tail;
  for (std::int64_t h = 1; h <= H; ++h) {
    const double xi = static_cast<double>(h) * scale;
    if (xi > cutoff.hat_cutoff()) break;
    // h and -h pair into twice the real part
    tail += 2.0 * (e_frac(static_cast<__int128>(a) * h, q) * cutoff.hat(xi)).real();
  }
  res.approx = cutoff.hat0() * scale + scale * tail.value();
  res.residual = std::abs(res.exact - res.approx);
  return res;
}

PoissonCoprimeResult poisson_coprime(const SmoothCutoff& cutoff, std::int64_t M, std::int64_t q) {
  if (M < 1 || q < 1) throw InvalidArgument("poisson_coprime: M and q must be >= 1");
  const auto samples = sample_cutoff(cutoff, M);
  CompensatedSum<double> s;
  for (std::size_t i = 0; i < samples.w.size(); ++i)
    if (std::gcd(samples.m_first + static_cast<std::int64_t>(i), q) == 1) s += samples.w[i];
  PoissonCoprimeResult r;
  r.exact = s.value();
  r.main = static_cast<double>(euler_phi(static_cast<std::uint64_t>(q))) / q * cutoff.hat0() * M;
  r.residual = std::abs(r.exact - r.main);
  const double L = std::log(2.0 * M);
  r.scale = static_cast<double>(tau_k(static_cast<std::uint64_t>(q), 2)) * L * L * L * L;
  return r;
}

// ---------------------------------------------------------------------------

ReindexSums gcd_reindex(std::int64_t Q, const PairWeight& w) {
  if (Q < 1) throw InvalidArgument("gcd_reindex: Q must be >= 1");
  CompensatedSum<Complex> direct, re;
  for (std::int64_t q1 = Q + 1; q1 <= 2 * Q; ++q1)
    for (std::int64_t q2 = Q + 1; q2 <= 2 * Q; ++q2) direct += w(q1, q2);
  for (std::int64_t delta = 1; delta <= 2 * Q; ++delta)
    for (std::int64_t k1 = Q / delta + 1; k1 <= 2 * Q / delta; ++k1)
      for (std::int64_t k2 = Q / delta + 1; k2 <= 2 * Q / delta; ++k2)
        if (std::gcd(k1, k2) == 1) re += w(delta * k1, delta * k2);
  ReindexSums r{direct.value(), re.value(), 0};
  r.difference = std::abs(r.direct - r.reindexed);
  return r;
}

double gcd_reindex_check(std::int64_t Q, const PairWeight& w) { return gcd_reindex(Q, w).difference; }

ReindexSums conv_reindex(std::int64_t N, const PairWeight& w) {
  if (N < 1) throw InvalidArgument("conv_reindex: N must be >= 1");
  CompensatedSum<Complex> direct, re;
  for (std::int64_t n1 = N + 1; n1 <= 2 * N; ++n1)
    for (std::int64_t n2 = N + 1; n2 <= 2 * N; ++n2) direct += w(n1, n2);
  for (std::int64_t d = 1; d <= 2 * N; ++d) {
    std::vector<std::int64_t> d1s;
    d_infinity_numbers(factor(static_cast<std::uint64_t>(d)), 0, 1, 2 * N / d, d1s);
    for (std::int64_t nu2 = N / d + 1; nu2 <= 2 * N / d; ++nu2) {
      for (std::int64_t d1 : d1s) {
        const std::int64_t dd1 = d * d1;
        for (std::int64_t nu1p = N / dd1 + 1; nu1p <= 2 * N / dd1; ++nu1p) {
          if (std::gcd(nu1p, d) != 1) continue;
          if (std::gcd(d1 * nu1p, nu2) != 1) continue;
          re += w(dd1 * nu1p, d * nu2);
        }
      }
    }
  }
  ReindexSums r{direct.value(), re.value(), 0};
  r.difference = std::abs(r.direct - r.reindexed);
  return r;
}

// ---------------------------------------------------------------------------

CongruenceReduction reduce_congruence_system(std::int64_t n1, std::int64_t n2, std::int64_t q1,
                                             std::int64_t q2, std::int64_t a) {
  if (n1 < 1 || n2 < 1 || q1 < 1 || q2 < 1)
    throw InvalidArgument("reduce_congruence_system: n1, n2, q1, q2 must be >= 1");
  if (std::gcd(a, q1) != 1 || std::gcd(a, q2) != 1)
    throw InvalidArgument("reduce_congruence_system: gcd(a, q1 q2) > 1");
  CongruenceReduction r;
  r.n1 = n1, r.n2 = n2, r.q1 = q1, r.q2 = q2, r.a = a;
  r.d = std::gcd(n1, n2);
  const auto s = dinfty_split(static_cast<std::uint64_t>(n1 / r.d), static_cast<std::uint64_t>(r.d));
  r.d1 = static_cast<std::int64_t>(s.d1);
  r.nu1p = static_cast<std::int64_t>(s.n_prime);
  r.nu2 = n2 / r.d;
  const auto p = decompose_moduli(q1, q2);
  r.delta = p.delta, r.delta1 = p.delta1, r.delta2 = p.delta2, r.k1p = p.k1p, r.k2p = p.k2p;
  r.gamma = r.delta * r.delta1 * r.delta2;

  r.solvable = std::gcd(n1, q1) == 1 && std::gcd(n2, q2) == 1 && (n1 - n2) % r.delta == 0;
  if (!r.solvable) return r;

  const std::int64_t i1 = mod_inverse(n1, q1), i2 = mod_inverse(n2, q2);
  Congruence merged;
  const Congruence c1{static_cast<std::int64_t>(mulmod128(a, i1, q1)), q1};
  const Congruence c2{static_cast<std::int64_t>(mulmod128(a, i2, q2)), q2};
  if (!crt_merge(c1, c2, merged))
    throw Error("reduce_congruence_system: solvable system failed to merge");
  r.ell = merged.modulus;
  r.m0 = merged.residue;
  if (r.ell != r.gamma * r.k1p * r.k2p)
    throw Error("reduce_congruence_system: lcm(q1, q2) != gamma k1' k2'");

  // lambda: n1bar mod delta delta1 merged with n2bar mod delta delta2.
  const std::int64_t m1 = r.delta * r.delta1, m2 = r.delta * r.delta2;
  Congruence lam;
  if (!crt_merge({mod_inverse(n1, m1), m1}, {mod_inverse(n2, m2), m2}, lam) || lam.modulus != r.gamma)
    throw Error("reduce_congruence_system: lambda merge failed");
  r.lambda = lam.residue;
  return r;
}

std::int64_t m0_display_formula(const CongruenceReduction& red) {
  if (!red.solvable) throw InvalidArgument("m0_display_formula: system is not solvable");
  const __int128 ell = red.ell;
  const std::int64_t g = red.gamma, k1 = red.k1p, k2 = red.k2p;
  __int128 t1 = mulmod128(red.a, red.lambda, ell);
  t1 = mulmod128(t1, static_cast<__int128>(k1) * k2, ell);
  t1 = mulmod128(t1, mod_inverse(mod_floor(k1 * k2, g), g), ell);
  __int128 t2 = mulmod128(red.a, g, ell);
  t2 = mulmod128(t2, mod_inverse(g, k1), ell);
  t2 = mulmod128(t2, mod_inverse(red.n1, k1), ell);
  t2 = mulmod128(t2, k2, ell);
  t2 = mulmod128(t2, mod_inverse(k2, k1), ell);
  __int128 t3 = mulmod128(red.a, g, ell);
  t3 = mulmod128(t3, mod_inverse(g, k2), ell);
  t3 = mulmod128(t3, mod_inverse(red.n2, k2), ell);
  t3 = mulmod128(t3, k1, ell);
  t3 = mulmod128(t3, mod_inverse(k1, k2), ell);
  return static_cast<std::int64_t>((t1 + t2 + t3) % ell);
}

// ---------------------------------------------------------------------------

BezoutTriple bezout_reciprocity(std::int64_t r, std::int64_t s) {
  if (r < 1 || s < 1) throw InvalidArgument("bezout_reciprocity: r, s must be >= 1");
  if (std::gcd(r, s) != 1) throw InvalidArgument("bezout_reciprocity: gcd(r, s) > 1");
  BezoutTriple b;
  b.r = r, b.s = s;
  b.s_bar = mod_inverse(s, r);
  b.r_bar = mod_inverse(r, s);
  const __int128 num = static_cast<__int128>(s) * b.s_bar + static_cast<__int128>(r) * b.r_bar - 1;
  const __int128 den = static_cast<__int128>(r) * s;
  b.holds = num % den == 0;
  b.integer_part = static_cast<std::int64_t>(num / den);
  return b;
}

bool bezout_three_term(std::int64_t g, std::int64_t nu1p, std::int64_t k1p, std::int64_t k2p) {
  if (g < 1 || nu1p < 1 || k1p < 1 || k2p < 1)
    throw InvalidArgument("bezout_three_term: arguments must be >= 1");
  const std::int64_t nk = nu1p * k2p;
  if (std::gcd(g, nk) != 1 || std::gcd(g, k1p) != 1 || std::gcd(nk, k1p) != 1)
    throw InvalidArgument("bezout_three_term: g, nu1' k2', k1' must be pairwise coprime");
  const __int128 D = static_cast<__int128>(g) * nk * k1p;
  const __int128 lhs = static_cast<__int128>(mod_inverse(mod_floor(g * nk, k1p), k1p)) * (D / k1p);
  const __int128 inv_g_nk = mod_inverse(g, nk), inv_k1_nk = mod_inverse(k1p, nk);
  const __int128 mid = (inv_g_nk * inv_k1_nk % nk) * (D / nk);
  const __int128 last = static_cast<__int128>(mod_inverse(mod_floor(nk * k1p, g), g)) * (D / g);
  const __int128 rhs = 1 - mid - last;
  __int128 diff = (lhs - rhs) % D;
  return diff == 0;
}

// ---------------------------------------------------------------------------

std::vector<Complex> signs_from_discrepancy(const ArithSequence& alpha, const ArithSequence& beta,
                                            std::int64_t Q, std::int64_t a, bool prime_only) {
  if (Q < 1) throw InvalidArgument("signs_from_discrepancy: Q must be >= 1");
  std::vector<Complex> c(static_cast<std::size_t>(Q));
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t q = Q + 1; q <= 2 * Q; ++q) {
    if (std::gcd(q, a) != 1) continue;
    if (prime_only && !is_prime(static_cast<std::uint64_t>(q))) continue;
    const Complex e = E_conv(alpha, beta, q, a).value;
    const double mag = std::abs(e);
    c[q - Q - 1] = mag > 0 ? std::conj(e) / mag : Complex{1.0};
  }
  return c;
}

MainTerms main_term_T(const std::vector<Complex>& c, const ArithSequence& beta, std::int64_t M,
                      std::int64_t Q, const SmoothCutoff& cutoff) {
  validate_signs(c, Q, 1);  // (q, a) checks are the caller's; only moduli shape here
  const double scale = cutoff.hat0() * static_cast<double>(M);
  std::vector<Complex> u_part(static_cast<std::size_t>(2 * Q + 1)), w_part(u_part.size()),
      t_part(u_part.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t delta = 1; delta <= 2 * Q; ++delta) {
    const double phi = static_cast<double>(euler_phi(static_cast<std::uint64_t>(delta)));
    std::vector<std::int64_t> ks;
    for (std::int64_t k = Q / delta + 1; k <= 2 * Q / delta; ++k)
      if (coef(c, Q, delta * k) != Complex{}) ks.push_back(k);
    if (ks.empty()) continue;
    std::vector<std::int64_t> units;
    for (std::int64_t r = 0; r < delta; ++r)
      if (std::gcd(r, delta) == 1) units.push_back(r);
    // A[k][alpha] = sum_{n = alpha mod delta, (n, k) = 1} beta_n
    std::vector<std::vector<Complex>> A(ks.size(), std::vector<Complex>(static_cast<std::size_t>(delta)));
    std::vector<Complex> S(ks.size());
    for (std::size_t j = 0; j < ks.size(); ++j) {
      for (std::size_t i = 0; i < beta.size(); ++i) {
        const std::int64_t n = beta.first() + static_cast<std::int64_t>(i);
        if (ks[j] > 1 && std::gcd(n, ks[j]) != 1) continue;
        A[j][n % delta] += beta[i];
      }
      for (std::int64_t r : units) S[j] += A[j][r];
    }
    CompensatedSum<Complex> u, w, t;
    for (std::size_t j1 = 0; j1 < ks.size(); ++j1) {
      for (std::size_t j2 = 0; j2 < ks.size(); ++j2) {
        if (std::gcd(ks[j1], ks[j2]) != 1) continue;
        const Complex weight = coef(c, Q, delta * ks[j1]) * std::conj(coef(c, Q, delta * ks[j2])) /
                               (static_cast<double>(ks[j1]) * static_cast<double>(ks[j2]));
        Complex classes = 0.0, stars = 0.0;
        for (std::int64_t r : units) {
          classes += A[j1][r] * std::conj(A[j2][r]);
          stars += (A[j1][r] - S[j1] / phi) * std::conj(A[j2][r] - S[j2] / phi);
        }
        u += weight * S[j1] * std::conj(S[j2]) / phi;
        w += weight * classes;
        t += weight * stars;
      }
    }
    u_part[delta] = scale * u.value() / static_cast<double>(delta);
    w_part[delta] = scale * w.value() / static_cast<double>(delta);
    t_part[delta] = scale * t.value() / static_cast<double>(delta);
  }

  MainTerms out;
  CompensatedSum<Complex> u, w, t;
  for (std::size_t i = 0; i < u_part.size(); ++i) {
    u += u_part[i];
    w += w_part[i];
    t += t_part[i];
  }
  out.U_main = u.value();
  out.W_MT = w.value();
  out.T = t.value();

  const auto terms = calE_star_terms(beta, Q);
  CompensatedSum<double> cal, chain;
  for (std::int64_t delta = 1; delta <= 2 * Q; ++delta) {
    cal += terms.plain[delta];
    double h = 0;
    for (std::int64_t k = Q / delta + 1; k <= 2 * Q / delta; ++k) h += 1.0 / static_cast<double>(k);
    chain += h / static_cast<double>(delta) * terms.weighted[delta];
  }
  out.calE = cal.value();
  out.bound_literal = static_cast<double>(M) / static_cast<double>(Q) * out.calE;
  out.bound_chain = scale * chain.value();
  return out;
}

WTupleResult W_tuples(const std::vector<Complex>& c, const ArithSequence& beta, std::int64_t M,
                      std::int64_t Q, std::int64_t a, const SmoothCutoff& cutoff,
                      const WTupleOptions& opts) {
  validate_signs(c, Q, a);
  const std::int64_t N = beta.n_lo();
  std::vector<std::int64_t> qs;
  for (std::int64_t q = Q + 1; q <= 2 * Q; ++q)
    if (coef(c, Q, q) != Complex{}) qs.push_back(q);
  std::vector<std::int64_t> ns;
  for (std::size_t i = 0; i < beta.size(); ++i)
    if (beta[i] != Complex{}) ns.push_back(beta.first() + static_cast<std::int64_t>(i));

  const double pairs_q = static_cast<double>(qs.size()) * qs.size();
  const double pairs_n = static_cast<double>(ns.size()) * ns.size();
  const double cost = pairs_q * pairs_n * (2.0 * M / std::max<double>(1.0, Q * Q) + 1.0);
  if (cost > opts.budget) throw BudgetExceeded("W_tuples", cost, opts.budget);

  WTupleResult res;
  const double L = std::log(2.0 * static_cast<double>(M) * static_cast<double>(N));
  res.H = opts.H >= 0 ? opts.H : 4.0 * L * L * L * L * static_cast<double>(Q) * Q / M;
  const auto samples = sample_cutoff(cutoff, M);
  const PsiHatTable* table = opts.D_split > 0 ? &shared_table(cutoff) : nullptr;
  const std::size_t nD = opts.D_values.size();

  struct Slot {
    CompensatedSum<Complex> W, MT, Err1, Err2;
    std::vector<CompensatedSum<Complex>> trunc;
    CompensatedSum<double> err2_abs;
    std::uint64_t tuples = 0;
  };
  std::vector<Slot> slots(qs.size());
  for (auto& s : slots) s.trunc.resize(nD);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i1 = 0; i1 < qs.size(); ++i1) {
    const std::int64_t q1 = qs[i1];
    Slot& slot = slots[i1];
    for (std::int64_t q2 : qs) {
      const auto pd = decompose_moduli(q1, q2);
      const Complex cc = coef(c, Q, q1) * std::conj(coef(c, Q, q2));
      const std::int64_t mod_part = std::max({pd.delta, pd.delta1, pd.delta2});
      for (std::int64_t n1 : ns) {
        if (std::gcd(n1, q1) != 1) continue;
        const std::int64_t c1 = static_cast<std::int64_t>(mulmod128(a, mod_inverse(n1, q1), q1));
        for (std::int64_t n2 : ns) {
          if (std::gcd(n2, q2) != 1 || (n1 - n2) % pd.delta != 0) continue;
          const std::int64_t c2 = static_cast<std::int64_t>(mulmod128(a, mod_inverse(n2, q2), q2));
          Congruence merged;
          if (!crt_merge({c1, q1}, {c2, q2}, merged)) continue;  // cannot happen once solvable
          ++slot.tuples;
          const Complex weight = cc * beta.value(n1) * std::conj(beta.value(n2));
          const double G = samples.progression_sum(merged.residue, merged.modulus);
          slot.W += weight * G;

          const std::int64_t d = std::gcd(n1, n2);
          const auto d1 = static_cast<std::int64_t>(
              dinfty_split(static_cast<std::uint64_t>(n1 / d), static_cast<std::uint64_t>(d)).d1);
          const std::int64_t level = std::max({d, d1, mod_part});
          for (std::size_t k = 0; k < nD; ++k)
            if (level <= opts.D_values[k]) slot.trunc[k] += weight * G;

          if (table && level <= opts.D_split) {
            const double ell = static_cast<double>(merged.modulus);
            const double scale = static_cast<double>(M) / ell;
            const double mt = cutoff.hat0() * scale;
            const auto h_max = static_cast<std::int64_t>(
                std::min(std::floor(res.H), std::floor(cutoff.hat_cutoff() / scale)));
            double err1 = 0;
            for (std::int64_t h = 1; h <= h_max; ++h)
              err1 += 2.0 * (e_frac(static_cast<__int128>(h) * merged.residue, merged.modulus) *
                             (*table)(static_cast<double>(h) * scale))
                                .real();
            err1 *= scale;
            const double err2 = G - mt - err1;
            slot.MT += weight * mt;
            slot.Err1 += weight * err1;
            slot.Err2 += weight * err2;
            slot.err2_abs += std::abs(weight) * std::abs(err2);
          }
        }
      }
    }
  }

  CompensatedSum<Complex> W, MT, Err1, Err2;
  std::vector<CompensatedSum<Complex>> trunc(nD);
  CompensatedSum<double> err2_abs;
  for (auto& s : slots) {
    W += s.W.value();
    MT += s.MT.value();
    Err1 += s.Err1.value();
    Err2 += s.Err2.value();
    err2_abs += s.err2_abs.value();
    for (std::size_t k = 0; k < nD; ++k) trunc[k] += s.trunc[k].value();
    res.tuples += s.tuples;
  }
  res.W = W.value();
  res.MT = MT.value();
  res.Err1 = Err1.value();
  res.Err2 = Err2.value();
  res.Err2_abs = err2_abs.value();
  for (std::size_t k = 0; k < nD; ++k) {
    res.W_trunc.push_back(trunc[k].value());
    res.tail.push_back(std::abs(res.W - res.W_trunc.back()));
  }
  return res;
}

DispersionParts compute_UVW(const std::vector<Complex>& c, const ArithSequence& beta,
                            std::int64_t M, std::int64_t Q, std::int64_t a,
                            const SmoothCutoff& cutoff, const DispersionOptions& opts) {
  validate_signs(c, Q, a);
  if (M < 1) throw InvalidArgument("compute_UVW: M must be >= 1");
  DispersionParts out;
  out.M = M, out.N = beta.n_lo(), out.Q = Q, out.a = a, out.D = opts.D;

  std::vector<std::int64_t> qs;
  for (std::int64_t q = Q + 1; q <= 2 * Q; ++q)
    if (coef(c, Q, q) != Complex{}) qs.push_back(q);
  // B[q][r] = sum_{n = r mod q} beta_n over n coprime to q; S[q] its total.
  std::vector<std::vector<Complex>> B(qs.size());
  std::vector<Complex> S(qs.size());
  std::vector<double> phi(qs.size());
  std::vector<std::int64_t> a_red(qs.size());
  for (std::size_t j = 0; j < qs.size(); ++j) {
    const std::int64_t q = qs[j];
    B[j].assign(static_cast<std::size_t>(q), Complex{});
    for (std::size_t i = 0; i < beta.size(); ++i) {
      const std::int64_t n = beta.first() + static_cast<std::int64_t>(i);
      if (std::gcd(n, q) == 1) B[j][n % q] += beta[i];
    }
    for (const auto& v : B[j]) S[j] += v;
    phi[j] = static_cast<double>(euler_phi(static_cast<std::uint64_t>(q)));
    a_red[j] = mod_floor(a, q);
  }

  const auto samples = sample_cutoff(cutoff, M);
  const std::size_t count = samples.w.size();
  std::vector<double> u_m(count), w_m(count), d_m(count);
  std::vector<Complex> v_m(count);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < count; ++i) {
    const std::int64_t m = samples.m_first + static_cast<std::int64_t>(i);
    Complex P = 0.0, R = 0.0;
    for (std::size_t j = 0; j < qs.size(); ++j) {
      const std::int64_t q = qs[j];
      if (std::gcd(m, q) != 1) continue;
      const Complex cq = coef(c, Q, q);
      const auto r = static_cast<std::size_t>(mulmod128(a_red[j], mod_inverse(m, q), q));
      P += cq * B[j][r];
      R += cq * S[j] / phi[j];
    }
    const double psi = samples.w[i];
    u_m[i] = psi * std::norm(R);
    v_m[i] = psi * P * std::conj(R);
    w_m[i] = psi * std::norm(P);
    d_m[i] = psi * std::norm(P - R);
  }
  CompensatedSum<double> U, W, D;
  CompensatedSum<Complex> V;
  for (std::size_t i = 0; i < count; ++i) {
    U += u_m[i];
    V += v_m[i];
    W += w_m[i];
    D += d_m[i];
  }
  out.U = U.value();
  out.V = V.value();
  out.W = W.value();
  out.P_minus_R = D.value();

  if (opts.transformed) {
    // Estimated cost of the V re-summation: pairs times the progression walk.
    const double cost = static_cast<double>(qs.size()) * qs.size() * 2.5 * M * 4.0;
    if (cost <= opts.budget) {
      std::map<std::int64_t, double> multiples;  // sum_{d | m} psi(m / M)
      auto mult_sum = [&](std::int64_t d) {
        auto it = multiples.find(d);
        if (it != multiples.end()) return it->second;
        const double v = samples.progression_sum(0, d);
        multiples.emplace(d, v);
        return v;
      };
      CompensatedSum<Complex> Ut, Vt;
      for (std::size_t j1 = 0; j1 < qs.size(); ++j1) {
        for (std::size_t j2 = 0; j2 < qs.size(); ++j2) {
          const std::int64_t q1 = qs[j1], q2 = qs[j2];
          const Complex cc = coef(c, Q, q1) * std::conj(coef(c, Q, q2));
          const auto rad = radical(static_cast<std::uint64_t>(q1) * static_cast<std::uint64_t>(q2));
          double coprime_mass = 0;
          for (const auto& [d, mu] : squarefree_divisors(factor(rad)))
            coprime_mass += mu * mult_sum(static_cast<std::int64_t>(d));
          Ut += cc / (phi[j1] * phi[j2]) * S[j1] * std::conj(S[j2]) * coprime_mass;

          // sum over classes r1 of n1 mod q1; m = a r1bar mod q1, (m, q2) = 1
          const auto divs = squarefree_divisors(factor(static_cast<std::uint64_t>(q2)));
          Complex inner = 0.0;
          for (std::int64_t r1 = 0; r1 < q1; ++r1) {
            const Complex b = B[j1][r1];
            if (b == Complex{}) continue;
            const std::int64_t lam = static_cast<std::int64_t>(mulmod128(a_red[j1], mod_inverse(r1, q1), q1));
            double mass = 0;
            for (const auto& [d, mu] : divs) {
              const auto dd = static_cast<std::int64_t>(d);
              if (std::gcd(dd, q1) != 1) continue;
              Congruence both;
              crt_merge({lam, q1}, {0, dd}, both);
              mass += mu * samples.progression_sum(both.residue, both.modulus);
            }
            inner += b * mass;
          }
          Vt += cc / phi[j2] * std::conj(S[j2]) * inner;
        }
      }
      out.U_transformed = Ut.value();
      out.V_transformed = Vt.value();
      out.transformed_done = true;
    }
  }

  const auto mt = main_term_T(c, beta, M, Q, cutoff);
  out.U_main = mt.U_main;
  out.W_MT_formula = mt.W_MT;
  out.T = mt.T;
  out.calE = mt.calE;
  out.T_bound_literal = mt.bound_literal;
  out.T_bound_chain = mt.bound_chain;

  if (opts.tuples) {
    WTupleOptions wo;
    wo.D_values = {opts.D};
    wo.D_split = opts.D;
    wo.H = opts.H;
    wo.budget = opts.budget;
    try {
      const auto wt = W_tuples(c, beta, M, Q, a, cutoff, wo);
      out.W_transformed = wt.W;
      out.W_trunc = wt.W_trunc[0];
      out.W_tail = wt.tail[0];
      out.W_MT = wt.MT;
      out.W_Err1 = wt.Err1;
      out.W_Err2 = wt.Err2;
      out.W_Err2_bound = wt.Err2_abs;
      out.tuples_done = true;
    } catch (const BudgetExceeded&) {
      out.tuples_done = false;
    }
  }

  out.residual_VU = std::abs(out.V - out.U);
  out.dispersion = out.W.real() - 2.0 * out.V.real() + out.U.real();
  out.residual_disp = out.dispersion - out.T.real();
  return out;
}

std::string dispersion_csv_header() {
  return "M,N,Q,a,D,U,V_re,V_im,W,P_minus_R,U_transformed,V_transformed_re,V_transformed_im,"
         "W_transformed,U_main,W_MT_formula,W_trunc,W_tail,W_MT,W_Err1,W_Err2,W_Err2_bound,T_re,"
         "T_im,T_bound_literal,T_bound_chain,calE,residual_VU,dispersion,residual_disp";
}

std::string to_csv_row(const DispersionParts& p) {
  std::string s;
  auto add = [&](const std::string& v) {
    if (!s.empty()) s += ",";
    s += v;
  };
  add(fmt(p.M)), add(fmt(p.N)), add(fmt(p.Q)), add(fmt(p.a)), add(fmt(p.D));
  add(fmt(p.U.real())), add(fmt(p.V.real())), add(fmt(p.V.imag())), add(fmt(p.W.real()));
  add(fmt(p.P_minus_R));
  add(p.transformed_done ? fmt(p.U_transformed.real()) : "");
  add(p.transformed_done ? fmt(p.V_transformed.real()) : "");
  add(p.transformed_done ? fmt(p.V_transformed.imag()) : "");
  add(p.tuples_done ? fmt(p.W_transformed.real()) : "");
  add(fmt(p.U_main.real())), add(fmt(p.W_MT_formula.real()));
  add(p.tuples_done ? fmt(p.W_trunc.real()) : "");
  add(p.tuples_done ? fmt(p.W_tail) : "");
  add(p.tuples_done ? fmt(p.W_MT.real()) : "");
  add(p.tuples_done ? fmt(p.W_Err1.real()) : "");
  add(p.tuples_done ? fmt(p.W_Err2.real()) : "");
  add(p.tuples_done ? fmt(p.W_Err2_bound) : "");
  add(fmt(p.T.real())), add(fmt(p.T.imag()));
  add(fmt(p.T_bound_literal)), add(fmt(p.T_bound_chain)), add(fmt(p.calE));
  add(fmt(p.residual_VU)), add(fmt(p.dispersion)), add(fmt(p.residual_disp));
  return s;
}

std::string to_json(const DispersionParts& p) {
  using nlohmann::ordered_json;
  auto cx = [](Complex z) { return ordered_json{{"re", z.real()}, {"im", z.imag()}}; };
  ordered_json j;
  j["M"] = p.M;
  j["N"] = p.N;
  j["Q"] = p.Q;
  j["a"] = p.a;
  j["D"] = p.D;
  j["U"] = cx(p.U);
  j["V"] = cx(p.V);
  j["W"] = cx(p.W);
  j["P_minus_R"] = p.P_minus_R;
  if (p.transformed_done) {
    j["U_transformed"] = cx(p.U_transformed);
    j["V_transformed"] = cx(p.V_transformed);
  }
  j["U_main"] = cx(p.U_main);
  j["W_MT_formula"] = cx(p.W_MT_formula);
  if (p.tuples_done) {
    j["W_transformed"] = cx(p.W_transformed);
    j["W_trunc"] = cx(p.W_trunc);
    j["W_tail"] = p.W_tail;
    j["W_MT"] = cx(p.W_MT);
    j["W_Err1"] = cx(p.W_Err1);
    j["W_Err2"] = cx(p.W_Err2);
    j["W_Err2_bound"] = p.W_Err2_bound;
  }
  j["T"] = cx(p.T);
  j["T_bound_literal"] = p.T_bound_literal;
  j["T_bound_chain"] = p.T_bound_chain;
  j["calE_star"] = p.calE;
  j["residual_VU"] = p.residual_VU;
  j["dispersion"] = p.dispersion;
  j["residual_disp"] = p.residual_disp;
  return j.dump(2);
}

}  // namespace displab
