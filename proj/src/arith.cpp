#include "displab/arith.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "displab/errors.hpp"
#include "displab/expsums.hpp"

namespace displab {

std::int64_t mod_floor(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (exp) {
    if (exp & 1) result = mul_mod(result, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return result;
}

std::int64_t mod_inverse(std::int64_t a, std::int64_t m) {
  if (m < 1) throw InvalidArgument("mod_inverse: modulus must be >= 1, got " + std::to_string(m));
  if (m == 1) return 0;
  std::int64_t old_r = mod_floor(a, m), r = m;
  std::int64_t old_s = 1, s = 0;
  while (r != 0) {
    const std::int64_t q = old_r / r;
    std::tie(old_r, r) = std::make_pair(r, old_r - q * r);
    std::tie(old_s, s) = std::make_pair(s, old_s - q * s);
  }
  if (old_r != 1) throw NotInvertible(a, m, old_r);
  return mod_floor(old_s, m);
}

Congruence crt(std::span<const Congruence> system) {
  Congruence acc{0, 1};
  for (const auto& c : system) {
    if (c.modulus < 1) throw InvalidArgument("crt: modulus must be >= 1");
    if (std::gcd(acc.modulus, c.modulus) != 1)
      throw InvalidArgument("crt: moduli " + std::to_string(acc.modulus) + " and " +
                            std::to_string(c.modulus) + " are not coprime");
    const __int128 product = static_cast<__int128>(acc.modulus) * c.modulus;
    if (product > INT64_MAX) throw InvalidArgument("crt: product of moduli overflows int64");
    // acc.residue + acc.modulus * t = c.residue mod c.modulus
    const std::int64_t inv = mod_inverse(mod_floor(acc.modulus, c.modulus), c.modulus);
    const __int128 diff = mod_floor(c.residue - acc.residue % c.modulus, c.modulus);
    const __int128 t = diff * inv % c.modulus;
    __int128 x = acc.residue + static_cast<__int128>(acc.modulus) * t;
    x %= product;
    if (x < 0) x += product;
    acc = {static_cast<std::int64_t>(x), static_cast<std::int64_t>(product)};
  }
  acc.residue = mod_floor(acc.residue, acc.modulus);
  return acc;
}

bool crt_merge(const Congruence& x, const Congruence& y, Congruence& out) {
  const std::int64_t g = std::gcd(x.modulus, y.modulus);
  const std::int64_t rx = mod_floor(x.residue, x.modulus);
  const std::int64_t ry = mod_floor(y.residue, y.modulus);
  if ((ry - rx) % g != 0) return false;
  const std::int64_t mx = x.modulus / g, my = y.modulus / g;
  const __int128 lcm = static_cast<__int128>(x.modulus) * my;
  if (lcm > INT64_MAX) throw InvalidArgument("crt_merge: lcm overflows int64");
  // rx + x.modulus * t = ry mod y.modulus  <=>  mx * t = (ry - rx)/g mod my
  const std::int64_t inv = mod_inverse(mod_floor(mx, my), my);
  const __int128 t = static_cast<__int128>(mod_floor((ry - rx) / g, my)) * inv % my;
  __int128 r = rx + static_cast<__int128>(x.modulus) * t;
  r %= lcm;
  if (r < 0) r += lcm;
  out = {static_cast<std::int64_t>(r), static_cast<std::int64_t>(lcm)};
  return true;
}

DInftySplit dinfty_split(std::uint64_t n, std::uint64_t d) {
  if (n == 0 || d == 0) throw InvalidArgument("dinfty_split: arguments must be positive");
  DInftySplit s{1, n};
  for (std::uint64_t g = std::gcd(s.n_prime, d); g > 1; g = std::gcd(s.n_prime, d)) {
    s.n_prime /= g;
    s.d1 *= g;
  }
  return s;
}

Factorization factor(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("factor: n must be positive");
  Factorization f;
  auto strip = [&](std::uint64_t p) {
    std::uint32_t e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    if (e) f.push(p, e);
  };
  strip(2);
  strip(3);
  for (std::uint64_t p = 5; p * p <= n; p += 6) {
    strip(p);
    strip(p + 2);
  }
  if (n > 1) f.push(n, 1);
  return f;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  unsigned __int128 result = 1;
  for (std::uint64_t i = 1; i <= r; ++i) result = result * (n - r + i) / i;
  return static_cast<std::uint64_t>(result);
}

std::uint64_t tau_k(const Factorization& f, unsigned k) {
  if (k == 0) throw InvalidArgument("tau_k: k must be >= 1");
  std::uint64_t t = 1;
  for (const auto& [p, e] : f.terms()) t *= binomial(e + k - 1, k - 1);
  return t;
}

std::uint64_t tau_k(std::uint64_t n, unsigned k) {
  if (k == 0) throw InvalidArgument("tau_k: k must be >= 1");
  return tau_k(factor(n), k);
}

std::uint64_t euler_phi(std::uint64_t n) {
  std::uint64_t phi = n;
  for (const auto& [p, e] : factor(n).terms()) phi = phi / p * (p - 1);
  return phi;
}

int moebius(std::uint64_t n) {
  const auto f = factor(n);
  for (const auto& [p, e] : f.terms())
    if (e > 1) return 0;
  return f.size() % 2 ? -1 : 1;
}

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  const auto f = factor(n);
  return f.size() == 1 && f[0].e == 1;
}

std::vector<std::uint64_t> primes_up_to(std::uint64_t limit) {
  std::vector<std::uint64_t> primes;
  if (limit < 2) return primes;
  std::vector<std::uint8_t> composite(limit + 1, 0);
  for (std::uint64_t i = 2; i <= limit; ++i) {
    if (composite[i]) continue;
    primes.push_back(i);
    for (std::uint64_t j = i * i; j <= limit; j += i) composite[j] = 1;
  }
  return primes;
}

namespace {

std::uint64_t isqrt(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

constexpr std::uint64_t kSegment = 1 << 15;

}  // namespace

std::vector<std::uint8_t> prime_flags(std::uint64_t lo, std::uint64_t hi) {
  if (lo > hi) throw InvalidArgument("prime_flags: empty range");
  std::vector<std::uint8_t> flags(hi - lo + 1, 1);
  for (std::uint64_t n = lo; n <= std::min<std::uint64_t>(hi, 1); ++n) flags[n - lo] = 0;
  for (std::uint64_t p : primes_up_to(isqrt(hi))) {
    std::uint64_t start = std::max(p * p, (lo + p - 1) / p * p);
    for (std::uint64_t j = start; j <= hi; j += p) flags[j - lo] = 0;
  }
  return flags;
}

std::vector<std::pair<std::uint64_t, int>> squarefree_divisors(const Factorization& f) {
  std::vector<std::pair<std::uint64_t, int>> divs{{1, 1}};
  divs.reserve(std::size_t{1} << f.size());
  for (const auto& [p, e] : f.terms()) {
    const std::size_t count = divs.size();
    for (std::size_t i = 0; i < count; ++i) divs.push_back({divs[i].first * p, -divs[i].second});
  }
  return divs;
}

void for_each_factorization(std::uint64_t lo, std::uint64_t hi, const FactorizationVisitor& visit) {
  if (lo < 1 || lo > hi) throw InvalidArgument("for_each_factorization: need 1 <= lo <= hi");
  const auto primes = primes_up_to(isqrt(hi));
  const std::uint64_t segments = (hi - lo) / kSegment + 1;

#pragma omp parallel
  {
    std::vector<std::uint64_t> rest(kSegment);
    std::vector<Factorization> facts(kSegment);
#pragma omp for schedule(dynamic, 1)
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(segments); ++s) {
      const std::uint64_t seg_lo = lo + static_cast<std::uint64_t>(s) * kSegment;
      const std::uint64_t seg_hi = std::min(hi, seg_lo + kSegment - 1);
      const std::size_t len = seg_hi - seg_lo + 1;
      for (std::size_t i = 0; i < len; ++i) {
        rest[i] = seg_lo + i;
        facts[i].clear();
      }
      for (std::uint64_t p : primes) {
        if (p * p > seg_hi) break;
        for (std::uint64_t j = (seg_lo + p - 1) / p * p; j <= seg_hi; j += p) {
          const std::size_t i = j - seg_lo;
          std::uint32_t e = 0;
          do {
            rest[i] /= p;
            ++e;
          } while (rest[i] % p == 0);
          facts[i].push(p, e);
        }
      }
      for (std::size_t i = 0; i < len; ++i) {
        if (rest[i] > 1) facts[i].push(rest[i], 1);
        visit(seg_lo + i, facts[i]);
      }
    }
  }
}

SieveTable SieveTable::build(std::uint64_t lo, std::uint64_t hi, std::size_t max_entries) {
  if (lo < 1 || lo > hi) throw SizingError("build_sieve: need 1 <= lo <= hi");
  if (hi - lo + 1 > max_entries)
    throw SizingError("build_sieve: range of " + std::to_string(hi - lo + 1) +
                      " entries exceeds cap of " + std::to_string(max_entries));
  SieveTable t;
  t.lo_ = lo;
  t.hi_ = hi;
  const std::size_t len = hi - lo + 1;
  t.spf_.assign(len, 1);
  t.phi_.assign(len, 1);
  t.mu_.assign(len, 1);
  t.big_omega_.assign(len, 0);
  t.small_omega_.assign(len, 0);
  for_each_factorization(lo, hi, [&](std::uint64_t n, const Factorization& f) {
    const std::size_t i = n - lo;
    std::uint64_t phi = 1;
    int mu = 1;
    unsigned big = 0;
    for (const auto& [p, e] : f.terms()) {
      std::uint64_t pk = 1;
      for (std::uint32_t j = 1; j < e; ++j) pk *= p;
      phi *= pk * (p - 1);
      mu = e > 1 ? 0 : -mu;
      big += e;
    }
    t.spf_[i] = f.empty() ? 1 : f[0].p;
    t.phi_[i] = phi;
    t.mu_[i] = static_cast<std::int8_t>(mu);
    t.big_omega_[i] = static_cast<std::uint8_t>(big);
    t.small_omega_[i] = static_cast<std::uint8_t>(f.size());
  });
  return t;
}

void SieveTable::check_subrange(std::uint64_t from, std::uint64_t to) const {
  if (from > to || !covers(from, to))
    throw InvalidArgument("sieve table [" + std::to_string(lo_) + ", " + std::to_string(hi_) +
                          "] does not cover [" + std::to_string(from) + ", " + std::to_string(to) +
                          "]");
}

std::vector<std::uint64_t> SieveTable::tau_k_values(unsigned k, std::uint64_t from,
                                                    std::uint64_t to) const {
  if (k == 0) throw InvalidArgument("tau_k: k must be >= 1");
  check_subrange(from, to);
  std::vector<std::uint64_t> out(to - from + 1);
  for_each_factorization(from, to, [&](std::uint64_t n, const Factorization& f) {
    out[n - from] = tau_k(f, k);
  });
  return out;
}

std::vector<Complex> SieveTable::multiplicative_values(
    const std::function<Complex(std::uint64_t, std::uint32_t)>& on_prime_power, std::uint64_t from,
    std::uint64_t to) const {
  check_subrange(from, to);
  std::vector<Complex> out(to - from + 1);
  for_each_factorization(from, to, [&](std::uint64_t n, const Factorization& f) {
    Complex v = 1.0;
    for (const auto& [p, e] : f.terms()) v *= on_prime_power(p, e);
    out[n - from] = v;
  });
  return out;
}

PrimeCharacterTable PrimeCharacterTable::build(std::uint64_t p, std::uint64_t cap) {
  if (p > cap)
    throw InvalidArgument("characters_mod_prime: p = " + std::to_string(p) + " exceeds cap " +
                          std::to_string(cap));
  if (!displab::is_prime(p))
    throw InvalidArgument("characters_mod_prime: " + std::to_string(p) + " is not prime");
  PrimeCharacterTable t;
  t.p_ = p;
  const auto order_factors = factor(p - 1);
  for (std::uint64_t g = 1; g < p; ++g) {
    bool primitive = true;
    for (const auto& [r, e] : order_factors.terms())
      if (pow_mod(g, (p - 1) / r, p) == 1) primitive = false;
    if (primitive) {
      t.g_ = g;
      break;
    }
  }
  t.dlog_.assign(p, 0);
  std::uint64_t x = 1;
  for (std::uint64_t j = 0; j + 1 < p; ++j) {
    t.dlog_[x] = static_cast<std::uint32_t>(j);
    x = x * t.g_ % p;
  }
  return t;
}

Complex PrimeCharacterTable::chi(std::uint64_t j, std::int64_t n) const {
  const auto r = static_cast<std::uint64_t>(mod_floor(n, static_cast<std::int64_t>(p_)));
  if (r == 0) return 0.0;
  const std::uint64_t phase = mul_mod(j % (p_ - 1), dlog_[r], p_ - 1);
  return e_frac(static_cast<std::int64_t>(phase), static_cast<std::int64_t>(p_ - 1));
}

}  // namespace displab
