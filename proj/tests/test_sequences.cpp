#include <doctest.h>

#include <cmath>
#include <numeric>

#include "displab/arith.hpp"
#include "displab/errors.hpp"
#include "displab/sequences.hpp"
#include "oracles.hpp"

using namespace displab;

namespace {
SequenceSpec spec_of(SequenceKind kind, std::int64_t n_lo, unsigned k = 2) {
  SequenceSpec s;
  s.kind = kind;
  s.n_lo = n_lo;
  s.k = k;
  return s;
}
}  // namespace

TEST_CASE("generate small examples") {
  auto one = generate(spec_of(SequenceKind::constant_one, 4));
  CHECK(one.size() == 4);
  for (std::int64_t n = 5; n <= 8; ++n) CHECK(one.value(n) == Complex(1));
  CHECK(one.value(4) == Complex(0));
  CHECK(one.value(9) == Complex(0));

  auto om = generate(spec_of(SequenceKind::omega_eq, 4, 2));
  CHECK(om.value(5) == Complex(0));
  CHECK(om.value(6) == Complex(1));
  CHECK(om.value(7) == Complex(0));
  CHECK(om.value(8) == Complex(0));

  auto t = generate(spec_of(SequenceKind::tau_k, 2, 2));
  CHECK(t.value(3) == Complex(2));
  CHECK(t.value(4) == Complex(3));
  CHECK(t.bound_order() == 2);
}

TEST_CASE("generate matches factorization for every kind") {
  const std::int64_t n_lo = 3000;
  auto mu = generate(spec_of(SequenceKind::moebius, n_lo));
  auto pr = generate(spec_of(SequenceKind::prime_indicator, n_lo));
  auto t3 = generate(spec_of(SequenceKind::tau_k, n_lo, 3));
  auto o3 = generate(spec_of(SequenceKind::omega_eq, n_lo, 3));
  for (std::int64_t n = n_lo + 1; n <= 2 * n_lo; ++n) {
    REQUIRE(mu.value(n).real() == oracle::mu(n));
    REQUIRE(pr.value(n).real() == (oracle::is_prime(n) ? 1.0 : 0.0));
    REQUIRE(t3.value(n).real() == static_cast<double>(oracle::tau_k(n, 3)));
    REQUIRE(o3.value(n).real() == (oracle::big_omega(n) == 3 ? 1.0 : 0.0));
  }
}

TEST_CASE("generate with a supplied sieve") {
  const auto sieve = SieveTable::build(1, 100);
  auto s = generate(spec_of(SequenceKind::moebius, 50), sieve);
  CHECK(s.value(51).real() == oracle::mu(51));
  CHECK_THROWS_AS(generate(spec_of(SequenceKind::moebius, 60), sieve), InvalidArgument);
}

TEST_CASE("random kinds are deterministic and bounded") {
  auto spec = spec_of(SequenceKind::random_unimodular, 500);
  spec.seed = 42;
  auto a = generate(spec), b = generate(spec);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i] == b[i]);
    REQUIRE(std::abs(std::abs(a[i]) - 1.0) < 1e-12);
  }
  spec.kind = SequenceKind::random_pm1;
  auto c = generate(spec);
  for (std::size_t i = 0; i < c.size(); ++i) REQUIRE(std::abs(c[i].real()) == 1.0);
  spec.seed = 43;
  auto d = generate(spec);
  bool differs = false;
  for (std::size_t i = 0; i < c.size(); ++i) differs = differs || c[i] != d[i];
  CHECK(differs);
}

TEST_CASE("twist preserves absolute values") {
  for (double t : {0.5, 3.0, -17.25}) {
    auto spec = spec_of(SequenceKind::tau_k, 1000, 2);
    auto plain = generate(spec);
    spec.twist_t = t;
    auto tw = generate(spec);
    for (std::size_t i = 0; i < plain.size(); ++i) {
      REQUIRE(std::abs(std::abs(tw[i]) - std::abs(plain[i])) < 1e-12);
      const double n = static_cast<double>(plain.first() + static_cast<std::int64_t>(i));
      REQUIRE(std::abs(tw[i] - plain[i] * std::polar(1.0, -t * std::log(n))) < 1e-9);
    }
  }
}

TEST_CASE("bound compliance is enforced") {
  std::vector<Complex> v = {1, 1, 1, 1};
  CHECK_NOTHROW(ArithSequence::from_values(4, v, 1));
  v[1] = 1.5;  // n = 6
  CHECK_THROWS_AS(ArithSequence::from_values(4, v, 1), InvalidArgument);
  v[1] = 4.0;  // tau_2(6) = 4
  CHECK_NOTHROW(ArithSequence::from_values(4, v, 2));
  v[1] = 4.0 + 1e-6;
  CHECK_THROWS_AS(ArithSequence::from_values(4, v, 2), InvalidArgument);
  CHECK_THROWS_AS(ArithSequence::from_values(4, {1, 1}, 1), InvalidArgument);
}

TEST_CASE("sieve weight divisor sum") {
  CHECK(sieve_weight_divisor_sum(5, 16) == doctest::Approx(1.0).epsilon(1e-15));
  const double inner = std::log(6.0) / std::log(4.0) - 1.0;
  CHECK(inner == doctest::Approx(0.29248).epsilon(1e-4));
  CHECK(sieve_weight_divisor_sum(6, 16) == doctest::Approx(inner * inner).epsilon(1e-12));
  CHECK(sieve_weight_divisor_sum(6, 16) == doctest::Approx(0.08555).epsilon(1e-3));
  CHECK_THROWS_AS(sieve_weight_divisor_sum(6, 3), InvalidArgument);
  for (std::int64_t n = 1; n <= 2000; ++n) REQUIRE(sieve_weight_divisor_sum(n, 100) >= 0.0);
  for (std::int64_t p = 11; p < 2000; ++p)
    if (oracle::is_prime(p)) REQUIRE(sieve_weight_divisor_sum(p, 100) == doctest::Approx(1.0));
}

TEST_CASE("expanded sieve weights") {
  for (std::int64_t z : {4, 16, 100, 1000, 10000}) {
    const auto lam = sieve_weights(z);
    REQUIRE(lam.size() == static_cast<std::size_t>(z) + 1);
    // brute-force convolution of rho_d = mu(d)(1 - log d / log sqrt z), d <= sqrt z
    const double L = 0.5 * std::log(static_cast<double>(z));
    const auto root = static_cast<std::int64_t>(std::sqrt(static_cast<double>(z)) + 1e-9);
    std::vector<double> ref(static_cast<std::size_t>(z) + 1, 0.0);
    for (std::int64_t d1 = 1; d1 <= root; ++d1)
      for (std::int64_t d2 = 1; d2 <= root; ++d2) {
        const double r1 = oracle::mu(d1) * (1 - std::log(static_cast<double>(d1)) / L);
        const double r2 = oracle::mu(d2) * (1 - std::log(static_cast<double>(d2)) / L);
        ref[std::lcm(d1, d2)] += r1 * r2;
      }
    for (std::int64_t d = 1; d <= z; ++d) {
      REQUIRE(lam[d] == doctest::Approx(ref[d]).epsilon(1e-12).scale(1.0));
      REQUIRE(std::abs(lam[d]) <= std::pow(3.0, oracle::small_omega(d)) + 1e-12);
    }
    // sum over d | n of lambda_d reproduces the squared divisor sum
    for (std::int64_t n = 1; n <= 300; ++n) {
      double s = 0;
      for (std::int64_t d = 1; d <= std::min(n, z); ++d)
        if (n % d == 0) s += lam[d];
      REQUIRE(s == doctest::Approx(sieve_weight_divisor_sum(n, z)).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("Siegel-Walfisz score") {
  const auto one = generate(spec_of(SequenceKind::constant_one, 10000));
  CHECK(siegel_walfisz_score(one, 50, 10) < 0.01);

  std::vector<Complex> v(3000);
  for (std::int64_t n = 3001; n <= 6000; ++n) v[n - 3001] = n % 3 == 1 ? 1.0 : 0.0;
  const auto skew = ArithSequence::from_values(3000, v, 1);
  CHECK(siegel_walfisz_score(skew, 3, 1) >= 0.5 * (1.0 / 3.0) - 0.01);

  const auto mu = generate(spec_of(SequenceKind::moebius, 100000));
  CHECK(siegel_walfisz_score(mu, 30, 5) < 0.05);
}

TEST_CASE("smooth-rough convolution factorizes over rectangles") {
  auto g = [](std::uint64_t n) { return Complex(oracle::mu(n)) * Complex(n % 4 == 1 ? 1.0 : -1.0); };
  for (std::int64_t N : {100, 1000, 10000}) {
    const double below = 7.5, above = 20.0;
    const auto beta = smooth_rough_convolution(g, below, above, N, 2);
    // brute-force double sum over b smooth, c rough with b c ~ N
    Complex ref = 0;
    for (std::int64_t b = 1; b <= 2 * N; ++b) {
      bool smooth = true;
      for (auto [p, e] : oracle::factor(b)) smooth = smooth && static_cast<double>(p) < below;
      if (!smooth) continue;
      for (std::int64_t c = N / b + 1; b * c <= 2 * N; ++c) {
        bool rough = true;
        for (auto [p, e] : oracle::factor(c)) rough = rough && static_cast<double>(p) > above;
        if (rough) ref += g(b) * g(c);
      }
    }
    Complex total = 0;
    for (std::size_t i = 0; i < beta.size(); ++i) total += beta[i];
    REQUIRE(std::abs(total - ref) < 1e-9);
  }
}

TEST_CASE("set filters") {
  SetFilter f;
  f.kind = SetFilterKind::almost_prime_ladder;
  f.k = 2;
  f.epsilon = 0.5;
  f.y_exponent = 0.2;
  const double x = 1e6;
  // y = exp((log x)^0.2) ~ 4.5, x^eps = 1000
  CHECK(in_filter_set(factor(7 * 100003ULL), f, x));
  CHECK_FALSE(in_filter_set(factor(3 * 100003ULL), f, x));   // smallest prime below y
  CHECK_FALSE(in_filter_set(factor(7 * 11 * 13ULL), f, x));  // Omega = 3
  f.kind = SetFilterKind::none;
  CHECK(in_filter_set(factor(12), f, x));
}

TEST_CASE("sequence kind names round trip") {
  for (auto k : {SequenceKind::constant_one, SequenceKind::moebius, SequenceKind::tau_k,
                 SequenceKind::prime_indicator, SequenceKind::omega_eq,
                 SequenceKind::multiplicative_from_primes, SequenceKind::sieve_weight_divisor_sum,
                 SequenceKind::random_unimodular, SequenceKind::random_pm1})
    CHECK(sequence_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(sequence_kind_from_string("nope"), ConfigError);
}
