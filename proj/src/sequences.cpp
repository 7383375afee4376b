#include "displab/sequences.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "displab/errors.hpp"
#include "displab/expsums.hpp"

namespace displab {

namespace {

constexpr double kBoundSlack = 1e-9;

std::int64_t isqrt_floor(std::int64_t z) {
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(z)));
  while (r * r > z) --r;
  while ((r + 1) * (r + 1) <= z) ++r;
  return r;
}

}  // namespace

ArithSequence ArithSequence::from_values(std::int64_t n_lo, std::vector<Complex> values,
                                         unsigned bound_order) {
  if (n_lo < 1) throw InvalidArgument("ArithSequence: n_lo must be >= 1");
  if (bound_order < 1) throw InvalidArgument("ArithSequence: bound_order must be >= 1");
  if (values.size() != static_cast<std::size_t>(n_lo))
    throw InvalidArgument("ArithSequence: expected " + std::to_string(n_lo) + " values, got " +
                          std::to_string(values.size()));
  const std::uint64_t first = static_cast<std::uint64_t>(n_lo) + 1;
  if (bound_order == 1) {
    for (std::size_t i = 0; i < values.size(); ++i)
      if (std::abs(values[i]) > 1.0 + kBoundSlack)
        throw InvalidArgument("ArithSequence: |value(" + std::to_string(first + i) +
                              ")| exceeds tau_1 = 1");
  } else {
    std::vector<std::uint8_t> bad(values.size(), 0);
    for_each_factorization(first, 2 * static_cast<std::uint64_t>(n_lo),
                           [&](std::uint64_t n, const Factorization& f) {
                             const double bound = static_cast<double>(tau_k(f, bound_order));
                             if (std::abs(values[n - first]) > bound + kBoundSlack)
                               bad[n - first] = 1;
                           });
    const auto it = std::find(bad.begin(), bad.end(), 1);
    if (it != bad.end())
      throw InvalidArgument("ArithSequence: |value(" +
                            std::to_string(first + (it - bad.begin())) + ")| exceeds tau_" +
                            std::to_string(bound_order));
  }
  ArithSequence s;
  s.n_lo_ = n_lo;
  s.values_ = std::move(values);
  s.bound_order_ = bound_order;
  return s;
}

double ArithSequence::l2_norm() const {
  double acc = 0;
  for (const auto& v : values_) acc += std::norm(v);
  return std::sqrt(acc);
}

ArithSequence ArithSequence::scaled(Complex c) const {
  ArithSequence s = *this;
  for (auto& v : s.values_) v *= c;
  return s;
}

ArithSequence operator+(const ArithSequence& x, const ArithSequence& y) {
  if (x.n_lo() != y.n_lo()) throw InvalidArgument("ArithSequence sum: supports differ");
  std::vector<Complex> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] + y[i];
  // |x + y| <= tau_a + tau_b <= tau_{a+b}
  return ArithSequence::from_values(x.n_lo(), std::move(v), x.bound_order() + y.bound_order());
}

std::string to_string(SequenceKind kind) {
  switch (kind) {
    case SequenceKind::constant_one: return "constant_one";
    case SequenceKind::moebius: return "moebius";
    case SequenceKind::tau_k: return "tau_k";
    case SequenceKind::prime_indicator: return "prime_indicator";
    case SequenceKind::omega_eq: return "omega_eq";
    case SequenceKind::multiplicative_from_primes: return "multiplicative_from_primes";
    case SequenceKind::sieve_weight_divisor_sum: return "sieve_weight_divisor_sum";
    case SequenceKind::random_unimodular: return "random_unimodular";
    case SequenceKind::random_pm1: return "random_pm1";
  }
  return "unknown";
}

SequenceKind sequence_kind_from_string(const std::string& name) {
  static const std::map<std::string, SequenceKind> table = {
      {"constant_one", SequenceKind::constant_one},
      {"moebius", SequenceKind::moebius},
      {"tau_k", SequenceKind::tau_k},
      {"prime_indicator", SequenceKind::prime_indicator},
      {"omega_eq", SequenceKind::omega_eq},
      {"multiplicative_from_primes", SequenceKind::multiplicative_from_primes},
      {"sieve_weight_divisor_sum", SequenceKind::sieve_weight_divisor_sum},
      {"random_unimodular", SequenceKind::random_unimodular},
      {"random_pm1", SequenceKind::random_pm1},
  };
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown sequence kind '" + name + "'");
  return it->second;
}

bool in_filter_set(const Factorization& f, const SetFilter& filter, double x) {
  if (filter.kind == SetFilterKind::none) return true;
  if (x < 3) throw InvalidArgument("set filter: scale x must be >= 3");
  const double L = std::log(x);
  const double top = filter.c0 * std::pow(x, filter.epsilon);

  if (filter.kind == SetFilterKind::smooth_ladder) {
    const double m0 = std::exp(std::pow(L, filter.epsilon));
    const double step = std::log1p(std::pow(L, -filter.A));
    const double rungs = std::ceil((filter.epsilon * L - std::pow(L, filter.epsilon)) / step);
    bool hit_j = false;
    long long last_rung = -1;
    for (const auto& t : f.terms()) {
      const double p = static_cast<double>(t.p);
      if (p >= m0 && p <= top) hit_j = true;
      if (p < m0) continue;
      const auto rung = static_cast<long long>(std::floor(std::log(p / m0) / step));
      if (rung >= rungs) continue;
      if (t.e > 1 || rung == last_rung) return false;
      last_rung = rung;
    }
    return hit_j;
  }

  // almost_prime_ladder
  unsigned omega = 0;
  for (const auto& t : f.terms()) omega += t.e;
  if (omega != filter.k || f.empty()) return false;
  const double y = std::exp(std::pow(L, filter.y_exponent));
  const double p1 = static_cast<double>(f[0].p);
  if (p1 < y || p1 > top) return false;
  const double bins = std::ceil(std::log2(top / y));
  long long last_bin = -1;
  for (const auto& t : f.terms()) {
    const auto bin = static_cast<long long>(std::floor(std::log2(static_cast<double>(t.p) / y)));
    if (bin >= bins) continue;
    if (t.e > 1 || bin == last_bin) return false;
    last_bin = bin;
  }
  return true;
}

unsigned default_bound_order(const SequenceSpec& spec) {
  switch (spec.kind) {
    case SequenceKind::tau_k: return spec.k;
    // The squared divisor sum is at most 4^omega(n) <= tau_4(n).
    case SequenceKind::sieve_weight_divisor_sum: return 4;
    default: return 1;
  }
}

double sieve_weight_divisor_sum(const Factorization& f, std::int64_t z) {
  if (z < 4) throw InvalidArgument("sieve_weight_divisor_sum: z must be >= 4");
  const std::int64_t root = isqrt_floor(z);
  const double log_root = 0.5 * std::log(static_cast<double>(z));
  double inner = 0;
  for (const auto& [d, mu] : squarefree_divisors(f)) {
    if (static_cast<std::int64_t>(d) > root) continue;
    inner += mu * (1.0 - std::log(static_cast<double>(d)) / log_root);
  }
  return inner * inner;
}

double sieve_weight_divisor_sum(std::int64_t n, std::int64_t z) {
  if (n < 1) throw InvalidArgument("sieve_weight_divisor_sum: n must be >= 1");
  return sieve_weight_divisor_sum(factor(static_cast<std::uint64_t>(n)), z);
}

std::vector<double> sieve_weights(std::int64_t z) {
  if (z < 4) throw InvalidArgument("sieve_weights: z must be >= 4");
  const std::int64_t root = isqrt_floor(z);
  const double log_root = 0.5 * std::log(static_cast<double>(z));
  std::vector<double> rho(static_cast<std::size_t>(root) + 1, 0.0);
  for (std::int64_t d = 1; d <= root; ++d) {
    const int mu = moebius(static_cast<std::uint64_t>(d));
    if (mu != 0) rho[d] = mu * (1.0 - std::log(static_cast<double>(d)) / log_root);
  }
  std::vector<double> lambda(static_cast<std::size_t>(z) + 1, 0.0);
  for (std::int64_t d1 = 1; d1 <= root; ++d1) {
    if (rho[d1] == 0.0) continue;
    for (std::int64_t d2 = 1; d2 <= root; ++d2) {
      if (rho[d2] == 0.0) continue;
      const std::int64_t l = d1 / std::gcd(d1, d2) * d2;
      lambda[l] += rho[d1] * rho[d2];
    }
  }
  return lambda;
}

ArithSequence generate(const SequenceSpec& spec, const SieveTable& sieve) {
  if (spec.n_lo < 1) throw InvalidArgument("generate: n_lo must be >= 1");
  const std::uint64_t first = static_cast<std::uint64_t>(spec.n_lo) + 1;
  const std::uint64_t last = 2 * static_cast<std::uint64_t>(spec.n_lo);
  if (!sieve.covers(first, last))
    throw InvalidArgument("generate: sieve [" + std::to_string(sieve.lo()) + ", " +
                          std::to_string(sieve.hi()) + "] does not cover (" +
                          std::to_string(spec.n_lo) + ", " + std::to_string(last) + "]");
  const std::size_t count = static_cast<std::size_t>(spec.n_lo);
  std::vector<Complex> v(count);

  switch (spec.kind) {
    case SequenceKind::constant_one:
      std::fill(v.begin(), v.end(), Complex{1.0});
      break;
    case SequenceKind::moebius:
      for (std::size_t i = 0; i < count; ++i) v[i] = sieve.mu(first + i);
      break;
    case SequenceKind::tau_k: {
      if (spec.k < 1) throw InvalidArgument("generate: tau_k needs k >= 1");
      const auto t = sieve.tau_k_values(spec.k, first, last);
      for (std::size_t i = 0; i < count; ++i) v[i] = static_cast<double>(t[i]);
      break;
    }
    case SequenceKind::prime_indicator:
      for (std::size_t i = 0; i < count; ++i) v[i] = sieve.is_prime(first + i) ? 1.0 : 0.0;
      break;
    case SequenceKind::omega_eq:
      for (std::size_t i = 0; i < count; ++i) v[i] = sieve.big_omega(first + i) == spec.k ? 1.0 : 0.0;
      break;
    case SequenceKind::multiplicative_from_primes: {
      if (spec.prime_table.empty())
        throw InvalidArgument("generate: multiplicative_from_primes needs a prime table");
      for (const auto& c : spec.prime_table)
        if (std::abs(c) > 1.0 + kBoundSlack)
          throw InvalidArgument("generate: prime table entries must have modulus <= 1");
      const auto r = spec.prime_table.size();
      v = sieve.multiplicative_values(
          [&](std::uint64_t p, std::uint32_t e) {
            return std::pow(spec.prime_table[p % r], static_cast<int>(e));
          },
          first, last);
      break;
    }
    case SequenceKind::sieve_weight_divisor_sum:
      if (spec.z < 4) throw InvalidArgument("generate: sieve weights need z >= 4");
      for_each_factorization(first, last, [&](std::uint64_t n, const Factorization& f) {
        v[n - first] = sieve_weight_divisor_sum(f, spec.z);
      });
      break;
    case SequenceKind::random_unimodular:
      for (std::size_t i = 0; i < count; ++i)
        v[i] = std::polar(1.0, kTwoPi * keyed_uniform(spec.seed, first + i));
      break;
    case SequenceKind::random_pm1:
      for (std::size_t i = 0; i < count; ++i)
        v[i] = (keyed_random(spec.seed, first + i) >> 63) ? 1.0 : -1.0;
      break;
  }

  if (spec.filter.kind != SetFilterKind::none) {
    const double x = spec.filter.x > 0 ? spec.filter.x : static_cast<double>(spec.n_lo);
    for_each_factorization(first, last, [&](std::uint64_t n, const Factorization& f) {
      if (!in_filter_set(f, spec.filter, x)) v[n - first] = 0.0;
    });
  }
  if (spec.twist_t != 0.0) {
    for (std::size_t i = 0; i < count; ++i)
      v[i] *= std::polar(1.0, -spec.twist_t * std::log(static_cast<double>(first + i)));
  }
  return ArithSequence::from_values(spec.n_lo, std::move(v), default_bound_order(spec));
}

ArithSequence generate(const SequenceSpec& spec) {
  if (spec.n_lo < 1) throw InvalidArgument("generate: n_lo must be >= 1");
  const auto sieve = SieveTable::build(static_cast<std::uint64_t>(spec.n_lo) + 1,
                                       2 * static_cast<std::uint64_t>(spec.n_lo));
  return generate(spec, sieve);
}

double siegel_walfisz_score(const ArithSequence& seq, std::int64_t q_max, std::int64_t r_max) {
  if (q_max < 2) throw InvalidArgument("siegel_walfisz_score: q_max must be >= 2");
  if (r_max < 1) throw InvalidArgument("siegel_walfisz_score: r_max must be >= 1");
  const double N = static_cast<double>(seq.n_lo());
  std::vector<double> best(static_cast<std::size_t>(q_max + 1), 0.0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t q = 2; q <= q_max; ++q) {
    const double phi_q = static_cast<double>(euler_phi(static_cast<std::uint64_t>(q)));
    std::vector<Complex> bucket(static_cast<std::size_t>(q));
    for (std::int64_t r = 1; r <= r_max; ++r) {
      std::fill(bucket.begin(), bucket.end(), Complex{});
      for (std::size_t i = 0; i < seq.size(); ++i) {
        const std::int64_t n = seq.first() + static_cast<std::int64_t>(i);
        if (r > 1 && std::gcd(n, r) != 1) continue;
        bucket[n % q] += seq[i];
      }
      Complex coprime = 0.0;
      for (std::int64_t a = 1; a < q; ++a)
        if (std::gcd(a, q) == 1) coprime += bucket[a];
      const double norm = static_cast<double>(tau_k(static_cast<std::uint64_t>(r),
                                                    seq.bound_order())) * N;
      for (std::int64_t a = 1; a < q; ++a) {
        if (std::gcd(a, q) != 1) continue;
        best[q] = std::max(best[q], std::abs(bucket[a] - coprime / phi_q) / norm);
      }
    }
  }
  return *std::max_element(best.begin(), best.end());
}

std::optional<std::pair<std::uint64_t, std::uint64_t>> smooth_rough_split(
    const Factorization& f, double smooth_below, double rough_above) {
  std::uint64_t b = 1, c = 1;
  for (const auto& t : f.terms()) {
    const double p = static_cast<double>(t.p);
    std::uint64_t pe = 1;
    for (std::uint32_t i = 0; i < t.e; ++i) pe *= t.p;
    if (p < smooth_below)
      b *= pe;
    else if (p > rough_above)
      c *= pe;
    else
      return std::nullopt;
  }
  return std::make_pair(b, c);
}

ArithSequence smooth_rough_convolution(const std::function<Complex(std::uint64_t)>& g,
                                       double smooth_below, double rough_above,
                                       std::int64_t n_lo, unsigned bound_order) {
  if (smooth_below > rough_above)
    throw InvalidArgument("smooth_rough_convolution: smooth bound exceeds rough bound");
  const std::uint64_t first = static_cast<std::uint64_t>(n_lo) + 1;
  std::vector<Complex> v(static_cast<std::size_t>(n_lo));
  for_each_factorization(first, 2 * static_cast<std::uint64_t>(n_lo),
                         [&](std::uint64_t n, const Factorization& f) {
                           const auto split = smooth_rough_split(f, smooth_below, rough_above);
                           if (split) v[n - first] = g(split->first) * g(split->second);
                         });
  return ArithSequence::from_values(n_lo, std::move(v), bound_order);
}

}  // namespace displab
