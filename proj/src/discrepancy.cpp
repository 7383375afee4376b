#include "displab/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "displab/arith.hpp"
#include "displab/errors.hpp"
#include "displab/format.hpp"

namespace displab {

namespace {

void require_coprime(std::int64_t a, std::int64_t q, const char* what) {
  if (q < 1) throw InvalidArgument(std::string(what) + ": modulus must be >= 1");
  if (std::gcd(a, q) != 1)
    throw InvalidArgument(std::string(what) + ": gcd(a, q) = " + std::to_string(std::gcd(a, q)) +
                          " for a = " + std::to_string(a) + ", q = " + std::to_string(q));
}

DiscrepancyReport finish(std::int64_t q, std::int64_t a, std::int64_t r, Complex prog,
                         Complex coprime) {
  DiscrepancyReport rep;
  rep.q = q;
  rep.a = a;
  rep.r = r;
  rep.progression_sum = prog;
  rep.coprime_sum = coprime;
  rep.value = prog - coprime / static_cast<double>(euler_phi(static_cast<std::uint64_t>(q)));
  return rep;
}

std::vector<std::int64_t> admissible_moduli(std::int64_t Q, std::int64_t a) {
  if (Q < 1) throw InvalidArgument("Delta: Q must be >= 1");
  if (a == 0) throw InvalidArgument("Delta: a must be non-zero");
  std::vector<std::int64_t> out;
  for (std::int64_t q = Q + 1; q <= 2 * Q; ++q)
    if (std::gcd(q, a) == 1) out.push_back(q);
  return out;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t d = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --d;
  return d;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

// One modulus of the fast convolution path.
struct ConvBuckets {
  std::int64_t first, last, q;
  std::vector<Complex> class_prefix;    // running sums along n = n0, n0 + q, ...
  std::vector<Complex> coprime_prefix;  // prefix over n with (n, q) = 1

  ConvBuckets(const ArithSequence& beta, std::int64_t q_)
      : first(beta.first()), last(beta.n_hi()), q(q_) {
    const std::size_t n = beta.size();
    class_prefix.assign(n, Complex{});
    coprime_prefix.assign(n + 1, Complex{});
    CompensatedSum<Complex> run;
    for (std::size_t i = 0; i < n; ++i) {
      const std::int64_t v = first + static_cast<std::int64_t>(i);
      const bool coprime = std::gcd(v, q) == 1;
      const Complex b = coprime ? beta[i] : Complex{};
      class_prefix[i] = b + (i >= static_cast<std::size_t>(q) ? class_prefix[i - q] : Complex{});
      run += b;
      coprime_prefix[i + 1] = run.value();
    }
  }

  // sum of beta_n over lo <= n <= hi, n = c mod q.
  Complex class_sum(std::int64_t lo, std::int64_t hi, std::int64_t c) const {
    lo = std::max(lo, first);
    hi = std::min(hi, last);
    if (lo > hi) return {};
    const std::int64_t top = hi - mod_floor(hi - c, q);
    if (top < lo) return {};
    const std::int64_t below = (lo - 1) - mod_floor(lo - 1 - c, q);
    Complex s = class_prefix[top - first];
    if (below >= first) s -= class_prefix[below - first];
    return s;
  }

  Complex coprime_sum(std::int64_t lo, std::int64_t hi) const {
    lo = std::max(lo, first);
    hi = std::min(hi, last);
    if (lo > hi) return {};
    return coprime_prefix[hi - first + 1] - coprime_prefix[lo - first];
  }
};

DiscrepancyReport conv_fast(const ArithSequence& alpha, const ArithSequence& beta,
                            std::int64_t q, std::int64_t a, const Window& w) {
  const ConvBuckets buckets(beta, q);
  const std::int64_t a_red = mod_floor(a, q);
  const double delta = w.mode == WindowMode::smooth ? w.effective_delta() : 0.0;
  CompensatedSum<Complex> prog, cop;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const Complex am = alpha[i];
    if (am == Complex{}) continue;
    const std::int64_t m = alpha.first() + static_cast<std::int64_t>(i);
    if (std::gcd(m, q) != 1) continue;
    const std::int64_t c = q == 1 ? 0 : static_cast<std::int64_t>(
                                            static_cast<__int128>(a_red) * mod_inverse(m, q) % q);
    std::int64_t lo = buckets.first, hi = buckets.last;
    if (w.mode == WindowMode::sharp) {
      lo = floor_div(w.x, m) + 1;
      hi = floor_div(2 * w.x, m);
    } else if (w.mode == WindowMode::smooth) {
      lo = ceil_div(w.x, m);
      hi = floor_div(2 * w.x, m);
    }
    Complex p = buckets.class_sum(lo, hi, c);
    Complex s = buckets.coprime_sum(lo, hi);
    if (w.mode == WindowMode::smooth) {
      const auto xd = static_cast<double>(w.x);
      const std::int64_t lower_from =
          std::max(buckets.first, static_cast<std::int64_t>(std::floor((1.0 - delta) * xd / m)));
      const std::int64_t upper_to =
          std::min(buckets.last, static_cast<std::int64_t>(std::ceil((2.0 + delta) * xd / m)));
      auto edge = [&](std::int64_t from, std::int64_t to) {
        for (std::int64_t n = std::max(from, buckets.first); n <= std::min(to, buckets.last); ++n) {
          if (std::gcd(n, q) != 1) continue;
          const double wt = w.weight(m * n);
          if (wt == 0.0) continue;
          const Complex b = beta.value(n) * wt;
          s += b;
          if (mod_floor(n - c, q) == 0) p += b;
        }
      };
      edge(lower_from, lo - 1);
      edge(hi + 1, upper_to);
    }
    prog += am * p;
    cop += am * s;
  }
  return finish(q, a, 1, prog.value(), cop.value());
}

DiscrepancyReport conv_oracle(const ArithSequence& alpha, const ArithSequence& beta,
                              std::int64_t q, std::int64_t a, const Window& w) {
  const std::int64_t a_red = mod_floor(a, q);
  CompensatedSum<Complex> prog, cop;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const std::int64_t m = alpha.first() + static_cast<std::int64_t>(i);
    for (std::size_t j = 0; j < beta.size(); ++j) {
      const std::int64_t n = beta.first() + static_cast<std::int64_t>(j);
      const double wt = w.weight(m * n);
      if (wt == 0.0) continue;
      const Complex t = alpha[i] * beta[j] * wt;
      if (static_cast<std::int64_t>(static_cast<__int128>(m) * n % q) == a_red) prog += t;
      if (std::gcd(m, q) == 1 && std::gcd(n, q) == 1) cop += t;
    }
  }
  return finish(q, a, 1, prog.value(), cop.value());
}

DeltaReport assemble(std::int64_t Q, std::int64_t a, std::vector<std::int64_t> moduli,
                     std::vector<Complex> values) {
  DeltaReport rep;
  rep.Q = Q;
  rep.a = a;
  rep.moduli = std::move(moduli);
  rep.values = std::move(values);
  rep.per_q.resize(rep.values.size());
  CompensatedSum<double> total;
  for (std::size_t i = 0; i < rep.values.size(); ++i) {
    rep.per_q[i] = std::abs(rep.values[i]);
    total += rep.per_q[i];
  }
  rep.total = total.value();
  return rep;
}

}  // namespace

DiscrepancyReport E(const ArithSequence& beta, std::int64_t q, std::int64_t a) {
  return E_star(beta, q, a, 1);
}

DiscrepancyReport E_star(const ArithSequence& beta, std::int64_t q, std::int64_t a,
                         std::int64_t r) {
  require_coprime(a, q, "E_star");
  if (r < 1) throw InvalidArgument("E_star: r must be >= 1");
  const std::int64_t a_red = mod_floor(a, q);
  CompensatedSum<Complex> prog, cop;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    const std::int64_t n = beta.first() + static_cast<std::int64_t>(i);
    if (r > 1 && std::gcd(n, r) != 1) continue;
    if (n % q == a_red) prog += beta[i];
    if (std::gcd(n, q) == 1) cop += beta[i];
  }
  return finish(q, a, r, prog.value(), cop.value());
}

double Window::effective_delta() const {
  if (delta > 0) return delta;
  if (x < 3) throw InvalidArgument("Window: smooth window needs x >= 3");
  const double L = std::log(static_cast<double>(x));
  return 1.0 / (L * L);
}

double Window::weight(std::int64_t mn) const {
  switch (mode) {
    case WindowMode::none: return 1.0;
    case WindowMode::sharp: return (mn > x && mn <= 2 * x) ? 1.0 : 0.0;
    case WindowMode::smooth: {
      if (mn >= x && mn <= 2 * x) return 1.0;
      const double d = effective_delta();
      const double t = static_cast<double>(mn) / static_cast<double>(x);
      if (t < 1.0) return bump_ratio((t - (1.0 - d)) / d, steepness);
      return bump_ratio((2.0 + d - t) / d, steepness);
    }
  }
  return 0.0;
}

std::string to_string(WindowMode mode) {
  switch (mode) {
    case WindowMode::none: return "none";
    case WindowMode::sharp: return "sharp";
    case WindowMode::smooth: return "smooth";
  }
  return "none";
}

WindowMode window_mode_from_string(const std::string& name) {
  if (name == "none") return WindowMode::none;
  if (name == "sharp") return WindowMode::sharp;
  if (name == "smooth") return WindowMode::smooth;
  throw ConfigError("unknown window mode '" + name + "'");
}

DiscrepancyReport E_conv(const ArithSequence& alpha, const ArithSequence& beta, std::int64_t q,
                         std::int64_t a, const Window& window) {
  require_coprime(a, q, "E_conv");
  if (window.mode != WindowMode::none && window.x < 1)
    throw InvalidArgument("E_conv: window needs x >= 1");
  return conv_fast(alpha, beta, q, a, window);
}

DeltaReport Delta(const ArithSequence& alpha, const ArithSequence& beta, std::int64_t Q,
                  std::int64_t a, const Window& window, EvalPath path) {
  auto moduli = admissible_moduli(Q, a);
  if (window.mode != WindowMode::none && window.x < 1)
    throw InvalidArgument("Delta: window needs x >= 1");
  std::vector<Complex> values(moduli.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < moduli.size(); ++i) {
    values[i] = path == EvalPath::fast ? conv_fast(alpha, beta, moduli[i], a, window).value
                                       : conv_oracle(alpha, beta, moduli[i], a, window).value;
  }
  return assemble(Q, a, std::move(moduli), std::move(values));
}

DeltaReport Delta_single(const ArithSequence& beta, std::int64_t Q, std::int64_t a,
                         EvalPath path) {
  auto moduli = admissible_moduli(Q, a);
  std::vector<Complex> values(moduli.size());
  const std::int64_t first = beta.first(), last = beta.n_hi();
  // sums over multiples of d, shared by every q
  std::vector<Complex> multiples;
  if (path == EvalPath::fast && !moduli.empty()) {
    multiples.assign(static_cast<std::size_t>(moduli.back()) + 1, Complex{});
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t d = 1; d <= moduli.back(); ++d) {
      CompensatedSum<Complex> s;
      for (std::int64_t n = ceil_div(first, d) * d; n <= last; n += d) s += beta.value(n);
      multiples[d] = s.value();
    }
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < moduli.size(); ++i) {
    const std::int64_t q = moduli[i];
    const std::int64_t a_red = mod_floor(a, q);
    CompensatedSum<Complex> prog, cop;
    if (path == EvalPath::oracle) {
      for (std::int64_t n = first; n <= last; ++n) {
        if (n % q == a_red) prog += beta.value(n);
        if (std::gcd(n, q) == 1) cop += beta.value(n);
      }
    } else {
      const std::int64_t start = first + mod_floor(a_red - first, q);
      for (std::int64_t n = start; n <= last; n += q) prog += beta.value(n);
      // sum over (n, q) = 1 by Moebius over squarefree d | q
      for (const auto& [d, mu] : squarefree_divisors(factor(static_cast<std::uint64_t>(q)))) {
        cop += static_cast<double>(mu) * multiples[d];
      }
    }
    values[i] = finish(q, a, 1, prog.value(), cop.value()).value;
  }
  return assemble(Q, a, std::move(moduli), std::move(values));
}

CalEStarTerms calE_star_terms(const ArithSequence& beta, std::int64_t Q) {
  if (Q < 1) throw InvalidArgument("calE_star: Q must be >= 1");
  CalEStarTerms out;
  out.plain.assign(static_cast<std::size_t>(2 * Q + 1), 0.0);
  out.weighted.assign(static_cast<std::size_t>(2 * Q + 1), 0.0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t delta = 2; delta <= 2 * Q; ++delta) {
    // delta = 1 contributes nothing: E*(beta, 1, 1; v) = 0.
    const double phi = static_cast<double>(euler_phi(static_cast<std::uint64_t>(delta)));
    std::vector<Complex> bucket(static_cast<std::size_t>(delta));
    CompensatedSum<double> plain, weighted;
    for (std::int64_t v = Q / delta + 1; v <= 2 * Q / delta; ++v) {
      std::fill(bucket.begin(), bucket.end(), Complex{});
      for (std::size_t i = 0; i < beta.size(); ++i) {
        const std::int64_t n = beta.first() + static_cast<std::int64_t>(i);
        if (v > 1 && std::gcd(n, v) != 1) continue;
        bucket[n % delta] += beta[i];
      }
      Complex total = 0.0;
      for (std::int64_t r = 1; r < delta; ++r)
        if (std::gcd(r, delta) == 1) total += bucket[r];
      double s = 0;
      for (std::int64_t r = 1; r < delta; ++r)
        if (std::gcd(r, delta) == 1) s += std::norm(bucket[r] - total / phi);
      plain += s;
      weighted += s / static_cast<double>(v);
    }
    out.plain[delta] = plain.value();
    out.weighted[delta] = weighted.value();
  }
  return out;
}

double calE_star(const ArithSequence& beta, std::int64_t Q) {
  const auto terms = calE_star_terms(beta, Q);
  CompensatedSum<double> s;
  for (double v : terms.plain) s += v;
  return s.value();
}

std::string discrepancy_csv_header() {
  return "q,a,r,progression_re,progression_im,coprime_re,coprime_im,value_re,value_im";
}

std::string to_csv_row(const DiscrepancyReport& r) {
  return fmt(r.q) + "," + fmt(r.a) + "," + fmt(r.r) + "," + fmt(r.progression_sum.real()) + "," +
         fmt(r.progression_sum.imag()) + "," + fmt(r.coprime_sum.real()) + "," +
         fmt(r.coprime_sum.imag()) + "," + fmt(r.value.real()) + "," + fmt(r.value.imag());
}

std::string delta_csv_header() { return "Q,a,q,value_re,value_im,abs_value"; }

std::string to_csv_rows(const DeltaReport& r) {
  std::string out;
  for (std::size_t i = 0; i < r.moduli.size(); ++i) {
    out += fmt(r.Q) + "," + fmt(r.a) + "," + fmt(r.moduli[i]) + "," + fmt(r.values[i].real()) +
           "," + fmt(r.values[i].imag()) + "," + fmt(r.per_q[i]) + "\n";
  }
  return out;
}

}  // namespace displab
