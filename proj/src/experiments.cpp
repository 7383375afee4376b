#include "displab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "displab/arith.hpp"
#include "displab/discrepancy.hpp"
#include "displab/dispersion.hpp"
#include "displab/errors.hpp"
#include "displab/expsums.hpp"
#include "displab/format.hpp"
#include "displab/sequences.hpp"

namespace displab {

namespace {

const std::set<std::string> kCommonKeys = {"schema", "seed", "threads", "plot", "override_budget"};

std::set<std::string> sequence_keys(const std::string& prefix) {
  return {prefix + "kind", prefix + "k", prefix + "z", prefix + "twist", prefix + "table"};
}

struct Context {
  std::string command;
  Config cfg;
  std::string hash;
  std::uint64_t seed = 0;
  bool oracle = false;
  bool override_budget = false;
  std::vector<OutputFile> files;
  std::vector<std::pair<std::string, std::string>> summary;
  bool ok = true;

  void note(const std::string& key, const std::string& value) { summary.emplace_back(key, value); }
  void note(const std::string& key, double value) { note(key, fmt(value)); }
  void note(const std::string& key, std::int64_t value) { note(key, fmt(value)); }

  void desk_budget(const std::string& what, double size, double cap) const {
    if (size > cap && !override_budget) throw BudgetExceeded(command + ": " + what, size, cap);
  }
};

class CsvWriter {
 public:
  CsvWriter(const std::string& hash, const std::string& header) : hash_(hash) {
    text_ = "config_hash," + header + "\n";
  }
  template <class... T>
  void row(const T&... cells) {
    text_ += hash_;
    ((text_ += "," + cell(cells)), ...);
    text_ += "\n";
  }
  void raw_row(const std::string& rest) { text_ += hash_ + "," + rest + "\n"; }
  const std::string& text() const { return text_; }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(std::int64_t v) { return fmt(v); }
  static std::string cell(int v) { return fmt(static_cast<std::int64_t>(v)); }
  static std::string cell(std::uint64_t v) { return std::to_string(v); }
  static std::string cell(unsigned v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }

  std::string hash_;
  std::string text_;
};

std::string plot_script(const std::string& csv, const std::string& x, const std::string& y,
                        bool log_x, bool log_y) {
  std::string s;
  s += "import csv\nimport os\nimport matplotlib\nmatplotlib.use(\"Agg\")\n";
  s += "import matplotlib.pyplot as plt\n\n";
  s += "here = os.path.dirname(os.path.abspath(__file__))\n";
  s += "with open(os.path.join(here, \"" + csv + "\")) as f:\n";
  s += "    rows = list(csv.DictReader(f))\n";
  s += "xs = [float(r[\"" + x + "\"]) for r in rows if r[\"" + y + "\"] != \"\"]\n";
  s += "ys = [float(r[\"" + y + "\"]) for r in rows if r[\"" + y + "\"] != \"\"]\n";
  s += "plt.plot(xs, ys, \"o-\", ms=3)\n";
  if (log_x) s += "plt.xscale(\"log\")\n";
  if (log_y) s += "plt.yscale(\"log\")\n";
  s += "plt.xlabel(\"" + x + "\")\nplt.ylabel(\"" + y + "\")\n";
  s += "plt.savefig(os.path.join(here, \"" + csv.substr(0, csv.rfind('.')) + ".png\"), dpi=120)\n";
  return s;
}

void maybe_plot(Context& ctx, const std::string& x, const std::string& y, bool log_x,
                bool log_y = false) {
  if (!ctx.cfg.get_bool("plot", false)) return;
  const std::string csv = ctx.files.front().name;
  ctx.files.push_back({ctx.command + "_plot.py", plot_script(csv, x, y, log_x, log_y)});
}

SequenceSpec sequence_spec(const Config& cfg, const std::string& prefix, std::int64_t n_lo,
                           std::uint64_t seed, const std::string& default_kind) {
  SequenceSpec spec;
  spec.kind = sequence_kind_from_string(cfg.get_string(prefix + "kind", default_kind));
  spec.n_lo = n_lo;
  spec.k = static_cast<unsigned>(cfg.get_int(prefix + "k", 2));
  spec.z = cfg.get_int(prefix + "z", 16);
  spec.twist_t = cfg.get_double(prefix + "twist", 0.0);
  for (double v : cfg.get_doubles(prefix + "table", {})) spec.prime_table.push_back(v);
  spec.seed = seed;
  return spec;
}

std::vector<Complex> random_unimodular(std::uint64_t seed, std::size_t n) {
  std::vector<Complex> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::polar(1.0, kTwoPi * keyed_uniform(seed, i));
  return v;
}

// Integers t in [lo, hi] with t = r mod m.
std::int64_t count_in_class(std::int64_t lo, std::int64_t hi, std::int64_t r, std::int64_t m) {
  if (hi < lo) return 0;
  auto fdiv = [](std::int64_t p, std::int64_t q) {
    std::int64_t d = p / q;
    return (p % q != 0 && ((p < 0) != (q < 0))) ? d - 1 : d;
  };
  return fdiv(hi - r, m) - fdiv(lo - 1 - r, m);
}

// Solutions t mod m/g of u t = v (mod m); false when there are none.
bool solve_linear(std::int64_t u, std::int64_t v, std::int64_t m, Congruence& out) {
  const std::int64_t g = std::gcd(mod_floor(u, m), m);
  const std::int64_t gg = g == 0 ? m : g;
  if (mod_floor(v, gg) != 0) return false;
  const std::int64_t mm = m / gg;
  out.modulus = mm;
  out.residue = mm == 1 ? 0
                        : static_cast<std::int64_t>(
                              mul_mod(static_cast<std::uint64_t>(mod_floor(v / gg, mm)),
                                      static_cast<std::uint64_t>(mod_inverse(mod_floor(u / gg, mm), mm)),
                                      static_cast<std::uint64_t>(mm)));
  return true;
}

std::vector<double> theta_grid(const Config& cfg) {
  const double lo = cfg.get_double("theta_min", 0.3), hi = cfg.get_double("theta_max", 0.51);
  const auto steps = cfg.get_int("theta_steps", 8);
  if (!(lo > 0 && hi >= lo && hi < 1) || steps < 1)
    throw ConfigError("theta grid needs 0 < theta_min <= theta_max < 1 and theta_steps >= 1");
  std::vector<double> out;
  for (std::int64_t i = 0; i < steps; ++i)
    out.push_back(steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (steps - 1));
  return out;
}

void check_residue(std::int64_t a, std::int64_t x) {
  if (a == 0 || 3 * std::abs(a) > x) throw ConfigError("a must satisfy 1 <= |a| <= x/3");
}

// ---------------------------------------------------------------------------

void cmd_delta_scan(Context& ctx) {
  const Config& cfg = ctx.cfg;
  auto keys = kCommonKeys;
  for (const char* k : {"x", "a", "mode", "theta_min", "theta_max", "theta_steps", "window", "N"})
    keys.insert(k);
  for (const char* p : {"", "alpha_", "beta_"})
    for (const auto& k : sequence_keys(p)) keys.insert(k);
  cfg.require_known(keys);

  const std::int64_t x = cfg.get_int("x", 1'000'000);
  const std::int64_t a = cfg.get_int("a", 1);
  const std::string mode = cfg.get_string("mode", "single");
  check_residue(a, x);
  const EvalPath path = ctx.oracle ? EvalPath::oracle : EvalPath::fast;
  const double logx = std::log(static_cast<double>(x));

  CsvWriter csv(ctx.hash, "x,mode,kind,a,theta,Q,moduli,Delta,Delta_over_x,Delta_logx_over_x");
  std::vector<double> trend;
  std::set<std::int64_t> seen;
  if (mode == "single") {
    ctx.desk_budget("x", static_cast<double>(x), kDeskBudgetSingle);
    const auto spec = sequence_spec(cfg, "", x, ctx.seed, "tau_k");
    const auto beta = generate(spec);
    for (double theta : theta_grid(cfg)) {
      const auto Q = static_cast<std::int64_t>(std::llround(std::pow(static_cast<double>(x), theta)));
      if (!seen.insert(Q).second) continue;
      const auto rep = Delta_single(beta, Q, a, path);
      const double t = rep.total * logx / static_cast<double>(x);
      trend.push_back(t);
      csv.row(x, mode, to_string(spec.kind), a, theta, Q, static_cast<std::int64_t>(rep.moduli.size()),
              rep.total, rep.total / static_cast<double>(x), t);
    }
  } else if (mode == "convolution") {
    const std::int64_t N = cfg.get_int("N", 20);
    if (N < 1 || N > x) throw ConfigError("delta_scan: need 1 <= N <= x");
    const std::int64_t M = x / N;
    ctx.desk_budget("M N", static_cast<double>(M) * static_cast<double>(N), kDeskBudgetConvolution);
    const auto aspec = sequence_spec(cfg, "alpha_", M, keyed_random(ctx.seed, 1), "moebius");
    const auto bspec = sequence_spec(cfg, "beta_", N, keyed_random(ctx.seed, 2), "tau_k");
    const auto alpha = generate(aspec), beta = generate(bspec);
    Window window;
    window.mode = window_mode_from_string(cfg.get_string("window", "none"));
    window.x = M * N;
    for (double theta : theta_grid(cfg)) {
      const auto Q = static_cast<std::int64_t>(std::llround(std::pow(static_cast<double>(x), theta)));
      if (!seen.insert(Q).second) continue;
      const auto rep = Delta(alpha, beta, Q, a, window, path);
      const double t = rep.total * logx / static_cast<double>(x);
      trend.push_back(t);
      csv.row(x, mode, to_string(aspec.kind) + "*" + to_string(bspec.kind), a, theta, Q,
              static_cast<std::int64_t>(rep.moduli.size()), rep.total,
              rep.total / static_cast<double>(x), t);
    }
  } else {
    throw ConfigError("delta_scan: mode must be single or convolution");
  }
  bool increasing = true;
  for (std::size_t i = 1; i < trend.size(); ++i) increasing = increasing && trend[i] > trend[i - 1];
  ctx.files.push_back({"delta_scan.csv", csv.text()});
  ctx.note("points", static_cast<std::int64_t>(trend.size()));
  ctx.note("increasing_in_Q", increasing ? "true" : "false");
  maybe_plot(ctx, "Q", "Delta_logx_over_x", true);
}

void cmd_almost_prime(Context& ctx) {
  const Config& cfg = ctx.cfg;
  auto keys = kCommonKeys;
  for (const char* k : {"x", "k", "theta", "a"}) keys.insert(k);
  cfg.require_known(keys);
  const auto xs = cfg.get_ints("x", {1'000'000});
  const auto k = static_cast<unsigned>(cfg.get_int("k", 2));
  const double theta = cfg.get_double("theta", 0.45);
  const std::int64_t a = cfg.get_int("a", 1);
  if (k < 1) throw ConfigError("almost_prime: k must be >= 1");
  if (!(theta > 0 && theta < 1)) throw ConfigError("almost_prime: theta must be in (0, 1)");
  const EvalPath path = ctx.oracle ? EvalPath::oracle : EvalPath::fast;

  CsvWriter csv(ctx.hash, "x,k,Q,a,q,E_abs,normalized_total");
  std::vector<double> totals;
  for (std::int64_t x : xs) {
    check_residue(a, x);
    if (x < 16) throw ConfigError("almost_prime: x must be >= 16");
    ctx.desk_budget("x", static_cast<double>(x), kDeskBudgetSingle);
    SequenceSpec spec;
    spec.kind = SequenceKind::omega_eq;
    spec.n_lo = x;
    spec.k = k;
    const auto beta = generate(spec);
    const auto Q = static_cast<std::int64_t>(std::llround(std::pow(static_cast<double>(x), theta)));
    const auto rep = Delta_single(beta, Q, a, path);
    const double lx = std::log(static_cast<double>(x));
    const double norm = rep.total * lx / (static_cast<double>(x) * std::pow(std::log(lx), k - 1.0));
    totals.push_back(norm);
    for (std::size_t i = 0; i < rep.moduli.size(); ++i)
      csv.row(x, k, Q, a, rep.moduli[i], rep.per_q[i], norm);
    ctx.note("normalized_total_x" + fmt(x), norm);
  }
  bool non_increasing = true;
  for (std::size_t i = 1; i < totals.size(); ++i)
    non_increasing = non_increasing && totals[i] <= totals[i - 1];
  ctx.note("non_increasing_in_x", non_increasing ? "true" : "false");
  ctx.files.push_back({"almost_prime.csv", csv.text()});
  maybe_plot(ctx, "q", "E_abs", false);
}

void cmd_brun_titchmarsh(Context& ctx) {
  const Config& cfg = ctx.cfg;
  auto keys = kCommonKeys;
  for (const char* k : {"x", "theta", "a", "z", "bins", "bin_max"}) keys.insert(k);
  cfg.require_known(keys);
  const std::int64_t x = cfg.get_int("x", 1'000'000);
  const double theta = cfg.get_double("theta", 0.55);
  const std::int64_t a = cfg.get_int("a", 1);
  const std::int64_t z = cfg.get_int("z", 100);
  const std::int64_t bins = cfg.get_int("bins", 40);
  const double bin_max = cfg.get_double("bin_max", 6.0);
  if (!(theta > 0.5 && theta < 1)) throw ConfigError("brun_titchmarsh: theta must be in (1/2, 1)");
  if (bins < 1 || !(bin_max > 0)) throw ConfigError("brun_titchmarsh: bins >= 1, bin_max > 0");
  if (z < 4) throw ConfigError("brun_titchmarsh: z must be >= 4");
  check_residue(a, x);
  ctx.desk_budget("x", static_cast<double>(x), kDeskBudgetSingle);

  // primes and sieve majorant on (x, 2x]
  const auto lo = static_cast<std::uint64_t>(x + 1), hi = static_cast<std::uint64_t>(2 * x);
  const std::size_t len = hi - lo + 1;
  std::vector<std::uint8_t> prime(len);
  std::vector<double> major(len);
  if (ctx.oracle) {
#pragma omp parallel for schedule(dynamic, 4096)
    for (std::size_t i = 0; i < len; ++i) {
      prime[i] = is_prime(lo + i) ? 1 : 0;
      major[i] = sieve_weight_divisor_sum(static_cast<std::int64_t>(lo + i), z);
    }
  } else {
    prime = prime_flags(lo, hi);
    for_each_factorization(lo, hi, [&](std::uint64_t n, const Factorization& f) {
      major[n - lo] = sieve_weight_divisor_sum(f, z);
    });
  }
  std::int64_t majorant_violations = 0;
  const double root_z = std::sqrt(static_cast<double>(z));
  for (std::size_t i = 0; i < len; ++i)
    if (prime[i] && static_cast<double>(lo + i) > root_z && std::abs(major[i] - 1.0) > 1e-12)
      ++majorant_violations;

  const auto Q = static_cast<std::int64_t>(std::llround(std::pow(static_cast<double>(x), theta)));
  std::vector<std::int64_t> qs;
  for (std::int64_t q = Q + 1; q <= 2 * Q; ++q)
    if (std::gcd(q, a) == 1) qs.push_back(q);
  std::vector<std::int64_t> pi(qs.size());
  std::vector<double> ratio(qs.size()), mratio(qs.size());
  const double lx = std::log(static_cast<double>(x));
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t j = 0; j < qs.size(); ++j) {
    const std::int64_t q = qs[j];
    std::int64_t count = 0;
    CompensatedSum<double> m;
    const std::int64_t start = static_cast<std::int64_t>(lo) + mod_floor(a - static_cast<std::int64_t>(lo), q);
    for (std::int64_t n = start; n <= static_cast<std::int64_t>(hi); n += q) {
      count += prime[n - lo];
      m += major[n - lo];
    }
    const double scale = static_cast<double>(euler_phi(static_cast<std::uint64_t>(q))) * lx / static_cast<double>(x);
    pi[j] = count;
    ratio[j] = static_cast<double>(count) * scale;
    mratio[j] = m.value() * scale;
  }

  CsvWriter csv(ctx.hash, "x,theta,a,z,q,pi,ratio,majorant_ratio");
  const std::vector<double> thresholds = {1.0, 2.0, 3.0, 4.0, 4.0 - 2.0 / 53.0};
  std::vector<std::int64_t> exceed(thresholds.size());
  std::vector<std::int64_t> hist(static_cast<std::size_t>(bins) + 1);
  std::int64_t below_majorant = 0;
  CompensatedSum<double> mean;
  for (std::size_t j = 0; j < qs.size(); ++j) {
    csv.row(x, theta, a, z, qs[j], pi[j], ratio[j], mratio[j]);
    for (std::size_t t = 0; t < thresholds.size(); ++t)
      if (ratio[j] > thresholds[t]) ++exceed[t];
    const auto b = static_cast<std::int64_t>(std::floor(ratio[j] / bin_max * static_cast<double>(bins)));
    ++hist[static_cast<std::size_t>(std::clamp<std::int64_t>(b, 0, bins))];
    if (mratio[j] + 1e-9 < ratio[j]) ++below_majorant;
    mean += ratio[j];
  }
  CsvWriter hcsv(ctx.hash, "bin_lo,bin_hi,count");
  for (std::int64_t b = 0; b <= bins; ++b) {
    const double blo = bin_max * static_cast<double>(b) / static_cast<double>(bins);
    hcsv.row(blo, b == bins ? std::string("inf") : fmt(bin_max * (b + 1.0) / static_cast<double>(bins)),
             hist[static_cast<std::size_t>(b)]);
  }
  CsvWriter ecsv(ctx.hash, "threshold,exceed_count,exceed_fraction");
  for (std::size_t t = 0; t < thresholds.size(); ++t)
    ecsv.row(thresholds[t], exceed[t],
             qs.empty() ? 0.0 : static_cast<double>(exceed[t]) / static_cast<double>(qs.size()));

  ctx.files.push_back({"brun_titchmarsh.csv", csv.text()});
  ctx.files.push_back({"brun_titchmarsh_hist.csv", hcsv.text()});
  ctx.files.push_back({"brun_titchmarsh_exceed.csv", ecsv.text()});
  ctx.note("moduli", static_cast<std::int64_t>(qs.size()));
  ctx.note("mean_ratio", qs.empty() ? 0.0 : mean.value() / static_cast<double>(qs.size()));
  ctx.note("fraction_above_4", qs.empty() ? 0.0 : static_cast<double>(exceed[3]) / static_cast<double>(qs.size()));
  ctx.note("majorant_prime_violations", majorant_violations);
  ctx.note("majorant_below_count", below_majorant);
  ctx.ok = majorant_violations == 0 && below_majorant == 0;
  maybe_plot(ctx, "q", "ratio", false);
}

void cmd_divisor_switch(Context& ctx) {
  const Config& cfg = ctx.cfg;
  auto keys = kCommonKeys;
  for (const char* k : {"x", "z", "trials", "lambda", "q", "a", "q_max", "a_max"}) keys.insert(k);
  cfg.require_known(keys);
  const std::int64_t x = cfg.get_int("x", 10'000);
  const std::int64_t z = cfg.get_int("z", 50);
  const std::string lambda_kind = cfg.get_string("lambda", "random");
  if (x < 1 || z < 1) throw ConfigError("divisor_switch: x, z must be >= 1");
  if (lambda_kind != "one" && lambda_kind != "random")
    throw ConfigError("divisor_switch: lambda must be one or random");

  struct Trial {
    std::int64_t q, a;
    std::uint64_t seed;
  };
  std::vector<Trial> trials;
  if (cfg.has("q") || cfg.has("a")) {
    const std::int64_t q = cfg.get_int("q", 101), a = cfg.get_int("a", 1);
    if (q < 1 || a == 0 || std::gcd(q, a) != 1)
      throw ConfigError("divisor_switch: need q >= 1, a != 0, gcd(q, a) = 1");
    trials.push_back({q, a, keyed_random(ctx.seed, 0)});
  } else {
    const std::int64_t count = cfg.get_int("trials", 50);
    const std::int64_t q_max = cfg.get_int("q_max", 200), a_max = cfg.get_int("a_max", x / 3);
    if (q_max < 2 || a_max < 1) throw ConfigError("divisor_switch: q_max >= 2, a_max >= 1");
    for (std::int64_t t = 0; t < count; ++t) {
      for (std::uint64_t draw = 0;; ++draw) {
        const std::uint64_t key = keyed_random(ctx.seed, static_cast<std::uint64_t>(t) * 1000 + draw);
        const auto q = 2 + static_cast<std::int64_t>(keyed_random(key, 1) % static_cast<std::uint64_t>(q_max - 1));
        const auto a = 1 + static_cast<std::int64_t>(keyed_random(key, 2) % static_cast<std::uint64_t>(a_max));
        if (std::gcd(q, a) == 1) {
          trials.push_back({q, a, keyed_random(key, 3)});
          break;
        }
      }
    }
  }

  CsvWriter csv(ctx.hash,
                "trial,x,z,q,a,lambda,progression_side,switched_side,split_side,pair_mismatch,"
                "split_mismatch,boundary_defect");
  std::int64_t worst = 0;
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const auto [q, a, lseed] = trials[t];
    std::vector<std::int64_t> lambda(static_cast<std::size_t>(z) + 1);
    for (std::int64_t d = 1; d <= z; ++d) {
      if (lambda_kind == "one") {
        lambda[d] = 1;
      } else {
        const auto bound = static_cast<std::int64_t>(tau_k(static_cast<std::uint64_t>(d), 2));
        lambda[d] = static_cast<std::int64_t>(keyed_random(lseed, d) % static_cast<std::uint64_t>(2 * bound + 1)) - bound;
      }
    }
    // b with lo < d b <= hi, d b = target (mod q)
    auto count_b = [&](std::int64_t d, std::int64_t lo, std::int64_t hi, std::int64_t target) {
      if (ctx.oracle) {
        std::int64_t c = 0;
        for (std::int64_t b = lo / d + 1; b * d <= hi; ++b) c += mod_floor(d * b - target, q) == 0;
        return c;
      }
      Congruence sol;
      if (!solve_linear(d, target, q, sol)) return std::int64_t{0};
      return count_in_class(lo / d + 1, hi / d, sol.residue, sol.modulus);
    };
    // r with x < q r + a <= 2x and d | q r + a
    auto count_r = [&](std::int64_t d) {
      const std::int64_t rlo = (x + 1 - a) >= 0 ? (x + 1 - a + q - 1) / q : -((a - x - 1) / q);
      const std::int64_t rhi = (2 * x - a) >= 0 ? (2 * x - a) / q : -((a - 2 * x + q - 1) / q);
      if (ctx.oracle) {
        std::int64_t c = 0;
        for (std::int64_t r = rlo; r <= rhi; ++r) c += mod_floor(q * r + a, d) == 0;
        return c;
      }
      Congruence sol;
      if (!solve_linear(q, -a, d, sol)) return std::int64_t{0};
      return count_in_class(rlo, rhi, sol.residue, sol.modulus);
    };
    // r >= 1 with x < q r <= 2x and q r = -a (mod d)
    auto count_r_box = [&](std::int64_t d) {
      Congruence sol;
      if (!solve_linear(q, -a, d, sol)) return std::int64_t{0};
      return count_in_class(std::max<std::int64_t>(1, x / q + 1), 2 * x / q, sol.residue, sol.modulus);
    };

    std::int64_t prog = 0, switched = 0, pair_mismatch = 0, defect = 0;
    for (std::int64_t d = 1; d <= z; ++d) {
      const std::int64_t cb = count_b(d, x, 2 * x, a), cr = count_r(d);
      prog += lambda[d] * cb;
      switched += lambda[d] * cr;
      pair_mismatch = std::max(pair_mismatch, std::abs(cb - cr));
      if (std::gcd(d, a) == 1) defect += lambda[d] * (count_r_box(d) - cr);
    }
    // split by Delta = (a, d)
    std::int64_t split = 0;
    const std::int64_t abs_a = std::abs(a);
    for (std::int64_t D = 1; D <= std::min(abs_a, z); ++D) {
      if (abs_a % D != 0) continue;
      const std::int64_t aD = a / D;
      for (std::int64_t dp = 1; dp * D <= z; ++dp) {
        if (std::gcd(dp, aD) != 1) continue;
        // D dp b in (x, 2x]  <=>  dp b in (x/D, 2x/D]
        split += lambda[dp * D] * count_b(dp, x / D, (2 * x) / D, aD);
      }
    }
    const std::int64_t split_mismatch = std::abs(split - prog);
    worst = std::max({worst, pair_mismatch, split_mismatch});
    csv.row(static_cast<std::int64_t>(t), x, z, q, a, lambda_kind, prog, switched, split, pair_mismatch,
            split_mismatch, std::abs(defect));
  }
  ctx.files.push_back({"divisor_switch.csv", csv.text()});
  maybe_plot(ctx, "trial", "pair_mismatch", false);
  ctx.note("trials", static_cast<std::int64_t>(trials.size()));
  ctx.note("max_mismatch", worst);
  ctx.ok = worst == 0;
}

void cmd_charvar(Context& ctx) {
  const Config& cfg = ctx.cfg;
  auto keys = kCommonKeys;
  for (const char* k : {"N", "delta_max", "deltas", "trials"}) keys.insert(k);
  for (const auto& k : sequence_keys("beta_")) keys.insert(k);
  cfg.require_known(keys);
  const std::int64_t N = cfg.get_int("N", 1000);
  const std::int64_t trials = cfg.get_int("trials", 10);
  if (N < 1 || trials < 1) throw ConfigError("charvar: N, trials must be >= 1");
  std::vector<std::int64_t> deltas = cfg.get_ints("deltas", {});
  if (deltas.empty())
    for (auto p : primes_up_to(static_cast<std::uint64_t>(cfg.get_int("delta_max", 101))))
      deltas.push_back(static_cast<std::int64_t>(p));
  for (auto d : deltas)
    if (d < 2 || !is_prime(static_cast<std::uint64_t>(d)))
      throw InvalidArgument("charvar: delta = " + std::to_string(d) + " is not prime");

  std::vector<ArithSequence> betas;
  for (std::int64_t t = 0; t < trials; ++t)
    betas.push_back(generate(sequence_spec(cfg, "beta_", N, keyed_random(ctx.seed, t), "random_unimodular")));

  struct Cell {
    double lhs = 0, rhs = 0, rel = 0;
  };
  std::vector<Cell> cells(deltas.size() * betas.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t idx = 0; idx < cells.size(); ++idx) {
    const std::int64_t delta = deltas[idx / betas.size()];
    const auto& beta = betas[idx % betas.size()];
    std::vector<Complex> bucket(static_cast<std::size_t>(delta));
    for (std::size_t i = 0; i < beta.size(); ++i)
      bucket[(beta.first() + static_cast<std::int64_t>(i)) % delta] += beta[i];
    CompensatedSum<double> lhs;
    if (ctx.oracle) {
      for (std::int64_t dp = 1; dp < delta; ++dp) lhs += std::norm(E_star(beta, delta, dp, 1).value);
    } else {
      Complex S = 0.0;
      for (std::int64_t r = 1; r < delta; ++r) S += bucket[r];
      for (std::int64_t r = 1; r < delta; ++r) lhs += std::norm(bucket[r] - S / static_cast<double>(delta - 1));
    }
    const auto chars = PrimeCharacterTable::build(static_cast<std::uint64_t>(delta));
    CompensatedSum<double> rhs;
    for (std::uint64_t j = 1; j < chars.count(); ++j) {
      CompensatedSum<Complex> s;
      for (std::int64_t r = 1; r < delta; ++r) s += bucket[r] * chars.chi(j, r);
      rhs += std::norm(s.value());
    }
    Cell c{lhs.value(), rhs.value() / static_cast<double>(delta - 1), 0};
    const double scale = std::max(std::abs(c.lhs), std::abs(c.rhs));
    c.rel = scale > 0 ? std::abs(c.lhs - c.rhs) / scale : 0.0;
    cells[idx] = c;
  }
  CsvWriter csv(ctx.hash, "delta,trial,N,lhs,rhs,rel_diff");
  double worst = 0;
  for (std::size_t idx = 0; idx < cells.size(); ++idx) {
    csv.row(deltas[idx / betas.size()], static_cast<std::int64_t>(idx % betas.size()), N, cells[idx].lhs,
            cells[idx].rhs, cells[idx].rel);
    worst = std::max(worst, cells[idx].rel);
  }
  ctx.files.push_back({"charvar.csv", csv.text()});
  maybe_plot(ctx, "delta", "rel_diff", false, true);
  ctx.note("max_rel_diff", worst);
  ctx.ok = worst <= 1e-9;
}

void cmd_dispersion_decompose(Context& ctx) {
  const Config& cfg = ctx.cfg;
  auto keys = kCommonKeys;
  for (const char* k : {"M", "N", "Q", "a", "trials", "signs", "D", "H", "transformed", "tuples",
                        "steepness", "work_budget"})
    keys.insert(k);
  for (const char* p : {"alpha_", "beta_"})
    for (const auto& k : sequence_keys(p)) keys.insert(k);
  cfg.require_known(keys);
  const std::int64_t M = cfg.get_int("M", 2000), N = cfg.get_int("N", 50), Q = cfg.get_int("Q", 30);
  const std::int64_t a = cfg.get_int("a", 1);
  const std::int64_t trials = cfg.get_int("trials", 1);
  const std::string signs = cfg.get_string("signs", "discrepancy");
  if (M < 1 || N < 1 || Q < 1 || trials < 1) throw ConfigError("dispersion_decompose: M, N, Q, trials >= 1");
  if (a == 0) throw ConfigError("dispersion_decompose: a must be nonzero");
  if (signs != "discrepancy" && signs != "prime")
    throw ConfigError("dispersion_decompose: signs must be discrepancy or prime");
  ctx.desk_budget("M N", static_cast<double>(M) * static_cast<double>(N), kDeskBudgetConvolution);
  DispersionOptions dopts;
  dopts.D = cfg.get_int("D", 2);
  dopts.H = cfg.get_double("H", -1);
  dopts.transformed = cfg.get_bool("transformed", true);
  dopts.tuples = cfg.get_bool("tuples", true);
  dopts.budget = cfg.get_double("work_budget", 5e8);
  const auto cutoff = make_cutoff(cfg.get_double("steepness", 1.0));
  const bool prime_only = signs == "prime";

  CsvWriter csv(ctx.hash, "trial," + dispersion_csv_header() +
                              ",alpha_l2,Delta_abs,cauchy_rhs,cauchy_holds,sign_residual,T_prime_reduction");
  std::string json = "[\n";
  bool all_hold = true;
  for (std::int64_t t = 0; t < trials; ++t) {
    const auto alpha = generate(sequence_spec(cfg, "alpha_", M, keyed_random(ctx.seed, 2 * t), "random_unimodular"));
    const auto beta = generate(sequence_spec(cfg, "beta_", N, keyed_random(ctx.seed, 2 * t + 1), "random_unimodular"));
    const auto c = signs_from_discrepancy(alpha, beta, Q, a, prime_only);
    const auto rep = Delta(alpha, beta, Q, a, Window::none(), ctx.oracle ? EvalPath::oracle : EvalPath::fast);
    CompensatedSum<Complex> signed_sum;
    CompensatedSum<double> abs_sum;
    for (std::size_t i = 0; i < rep.moduli.size(); ++i) {
      const Complex cq = c[rep.moduli[i] - Q - 1];
      if (cq == Complex{}) continue;
      signed_sum += cq * rep.values[i];
      abs_sum += rep.per_q[i];
    }
    const auto parts = compute_UVW(c, beta, M, Q, a, cutoff, dopts);
    const double lhs = std::abs(signed_sum.value());
    const double rhs = alpha.l2_norm() * std::sqrt(std::max(0.0, parts.dispersion));
    const bool holds = lhs <= rhs * (1 + 1e-6) + 1e-9;
    all_hold = all_hold && holds;
    std::string t_prime;
    if (prime_only) {
      CompensatedSum<double> acc;
      for (std::int64_t q = Q + 1; q <= 2 * Q; ++q) {
        if (c[q - Q - 1] == Complex{}) continue;
        CompensatedSum<double> inner;
        for (std::int64_t r = 1; r < q; ++r) inner += std::norm(E_star(beta, q, r, 1).value);
        acc += inner.value() / static_cast<double>(q);
      }
      t_prime = fmt(cutoff.hat0() * static_cast<double>(M) * acc.value());
    }
    csv.raw_row(fmt(t) + "," + to_csv_row(parts) + "," + fmt(alpha.l2_norm()) + "," + fmt(lhs) + "," +
                fmt(rhs) + "," + (holds ? "1" : "0") + "," + fmt(std::abs(signed_sum.value() - abs_sum.value())) +
                "," + t_prime);
    json += (t ? ",\n" : "") + to_json(parts);
  }
  json += "\n]\n";
  ctx.files.push_back({"dispersion_decompose.csv", csv.text()});
  ctx.files.push_back({"dispersion_decompose.json", json});
  ctx.note("trials", trials);
  ctx.note("cauchy_holds", all_hold ? "true" : "false");
  ctx.ok = all_hold;
  maybe_plot(ctx, "trial", "residual_disp", false);
}

void cmd_shiu_check(Context& ctx) {
  const Config& cfg = ctx.cfg;
  auto keys = kCommonKeys;
  for (const char* k : {"x", "y", "k", "ell", "trials", "epsilon", "q"}) keys.insert(k);
  cfg.require_known(keys);
  const auto xs = cfg.get_ints("x", {1'000'000});
  const auto k = static_cast<unsigned>(cfg.get_int("k", 2));
  const std::int64_t ell = cfg.get_int("ell", 1);
  const std::int64_t trials = cfg.get_int("trials", 50);
  const double eps = cfg.get_double("epsilon", 0.2);
  if (k < 1 || ell < 1 || trials < 0) throw ConfigError("shiu_check: k, ell >= 1");
  const auto fixed_q = cfg.get_ints("q", {});

  CsvWriter csv(ctx.hash, "x,y,k,ell,q,a,lhs,ratio_lemma,ratio_shiu");
  double worst = 0;
  for (std::int64_t x : xs) {
    const std::int64_t y = cfg.get_int("y", x / 2);
    if (!(y >= 2 && y < x && static_cast<double>(y) > std::pow(static_cast<double>(x), eps)))
      throw ConfigError("shiu_check: need x^epsilon < y < x");
    ctx.desk_budget("y", static_cast<double>(y), kDeskBudgetSingle);
    const auto q_max = static_cast<std::int64_t>(static_cast<double>(y) * std::pow(static_cast<double>(x), -eps));
    const auto lo = static_cast<std::uint64_t>(x - y + 1), hi = static_cast<std::uint64_t>(x);
    std::vector<double> g(hi - lo + 1);
    if (ctx.oracle) {
      for (std::uint64_t n = lo; n <= hi; ++n)
        g[n - lo] = std::pow(static_cast<double>(tau_k(n, k)), static_cast<double>(ell));
    } else {
      const auto table = SieveTable::build(lo, hi);
      const auto t = table.tau_k_values(k, lo, hi);
      for (std::size_t i = 0; i < t.size(); ++i) g[i] = std::pow(static_cast<double>(t[i]), static_cast<double>(ell));
    }
    const double gp = std::pow(static_cast<double>(k), static_cast<double>(ell));
    double shiu = 1;
    for (auto p : primes_up_to(static_cast<std::uint64_t>(x))) shiu *= 1 + (gp - 1) / static_cast<double>(p);
    const double logpow = std::pow(std::log(static_cast<double>(x)), gp - 1);

    std::vector<std::pair<std::int64_t, std::int64_t>> pairs = {{1, 0}};
    for (auto q : fixed_q) {
      if (q < 1 || q > q_max) throw ConfigError("shiu_check: q must be in [1, y x^-epsilon]");
      pairs.push_back({q, 1});
    }
    for (std::int64_t t = 0; t < trials && q_max >= 2; ++t) {
      for (std::uint64_t draw = 0;; ++draw) {
        const auto key = keyed_random(ctx.seed ^ static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(t) * 1000 + draw);
        const auto q = 2 + static_cast<std::int64_t>(keyed_random(key, 1) % static_cast<std::uint64_t>(q_max - 1));
        const auto a = static_cast<std::int64_t>(keyed_random(key, 2) % static_cast<std::uint64_t>(q));
        if (std::gcd(a, q) == 1) {
          pairs.push_back({q, a});
          break;
        }
      }
    }
    for (const auto& [q, a] : pairs) {
      CompensatedSum<double> s;
      const std::int64_t start = static_cast<std::int64_t>(lo) + mod_floor(a - static_cast<std::int64_t>(lo), q);
      for (std::int64_t n = start; n <= static_cast<std::int64_t>(hi); n += q) s += g[n - lo];
      const double phi = static_cast<double>(euler_phi(static_cast<std::uint64_t>(q)));
      const double r_lemma = s.value() * phi / (static_cast<double>(y) * logpow);
      const double r_shiu = s.value() * phi / (static_cast<double>(y) * shiu);
      worst = std::max(worst, r_lemma);
      csv.row(x, y, k, ell, q, a, s.value(), r_lemma, r_shiu);
    }
  }
  ctx.files.push_back({"shiu_check.csv", csv.text()});
  ctx.note("max_ratio_lemma", worst);
  maybe_plot(ctx, "q", "ratio_lemma", true);
}

void cmd_poisson(Context& ctx) {
  const Config& cfg = ctx.cfg;
  auto keys = kCommonKeys;
  for (const char* k : {"M", "q_max", "H", "steepness"}) keys.insert(k);
  cfg.require_known(keys);
  const auto Ms = cfg.get_ints("M", {10'000, 20'000});
  const std::int64_t q_max = cfg.get_int("q_max", 100);
  const std::int64_t H_fixed = cfg.get_int("H", -1);
  if (q_max < 1) throw ConfigError("poisson: q_max >= 1");
  const auto cutoff = make_cutoff(cfg.get_double("steepness", 1.0));

  CsvWriter csv(ctx.hash, "M,q,a,H,exact,approx,residual,residual_times_M");
  std::vector<double> worst;
  for (std::int64_t M : Ms) {
    if (M < 1) throw ConfigError("poisson: M >= 1");
    ctx.desk_budget("M q_max", static_cast<double>(M) * static_cast<double>(q_max), kDeskBudgetSingle);
    const auto samples = sample_cutoff(cutoff, M);
    double w = 0;
    for (std::int64_t q = 1; q <= q_max; ++q) {
      const std::int64_t H = H_fixed >= 0 ? H_fixed : poisson_threshold_H(M, q);
      if (H < poisson_threshold_H(M, q)) throw ConfigError("poisson: H below the threshold");
      const double scale = static_cast<double>(M) / static_cast<double>(q);
      std::vector<Complex> hats;
      for (std::int64_t h = 1; h <= H && static_cast<double>(h) * scale <= cutoff.hat_cutoff(); ++h)
        hats.push_back(cutoff.hat(static_cast<double>(h) * scale));
      for (std::int64_t a = 0; a < q; ++a) {
        PoissonResult r;
        if (ctx.oracle) {
          r = poisson_progression(cutoff, M, q, a, H);
        } else {
          r.H = H;
          r.exact = samples.progression_sum(a, q);
          CompensatedSum<double> tail;
          for (std::size_t i = 0; i < hats.size(); ++i)
            tail += 2.0 * (e_frac(static_cast<__int128>(a) * static_cast<std::int64_t>(i + 1), q) * hats[i]).real();
          r.approx = cutoff.hat0() * scale + scale * tail.value();
          r.residual = std::abs(r.exact - r.approx);
        }
        w = std::max(w, r.residual);
        csv.row(M, q, a, r.H, r.exact, r.approx, r.residual, r.residual * static_cast<double>(M));
      }
    }
    worst.push_back(w);
    ctx.note("max_residual_M" + fmt(M), w);
  }
  ctx.files.push_back({"poisson.csv", csv.text()});
  maybe_plot(ctx, "q", "residual", false, true);
}

void cmd_trilinear(Context& ctx) {
  const Config& cfg = ctx.cfg;
  auto keys = kCommonKeys;
  for (const char* k : {"A", "M", "N", "theta", "seeds", "epsilon", "constant"}) keys.insert(k);
  cfg.require_known(keys);
  const std::int64_t A = cfg.get_int("A", 100), M = cfg.get_int("M", 100), N = cfg.get_int("N", 100);
  const std::int64_t theta = cfg.get_int("theta", 1);
  const std::int64_t seeds = cfg.get_int("seeds", 20);
  if (A < 1 || M < 1 || N < 1 || seeds < 1 || theta == 0) throw ConfigError("trilinear: A, M, N, seeds >= 1, theta != 0");
  ctx.desk_budget("A M N", static_cast<double>(A) * M * N, kDeskBudgetSingle);
  BoundParams bp{cfg.get_double("epsilon", 0.05), cfg.get_double("constant", 1.0)};

  CsvWriter csv(ctx.hash, "seed,A,M,N,theta,sum_re,sum_im,sum_abs,trivial_bound,bilinear_bound,ratio_trivial,ratio_bound");
  std::vector<double> ratios;
  for (std::int64_t s = 0; s < seeds; ++s) {
    TrilinearConfig tc;
    tc.theta = theta;
    tc.a_range = IntRange::dyadic(A);
    tc.m_range = IntRange::dyadic(M);
    tc.n_range = IntRange::dyadic(N);
    const auto key = keyed_random(ctx.seed, static_cast<std::uint64_t>(s));
    tc.nu = random_unimodular(keyed_random(key, 1), static_cast<std::size_t>(A));
    tc.alpha = random_unimodular(keyed_random(key, 2), static_cast<std::size_t>(M));
    tc.beta = random_unimodular(keyed_random(key, 3), static_cast<std::size_t>(N));
    auto rep = trilinear_sum(tc, bp);
    if (ctx.oracle) {
      CompensatedSum<Complex> naive;
      for (std::int64_t i = 0; i < A; ++i)
        for (std::int64_t j = 0; j < M; ++j)
          for (std::int64_t l = 0; l < N; ++l) {
            const std::int64_t a = A + 1 + i, m = M + 1 + j, n = N + 1 + l;
            if (std::gcd(m, n) != 1) continue;
            const __int128 num = static_cast<__int128>(theta) * a * (n == 1 ? 0 : mod_inverse(m, n));
            naive += tc.nu[i] * tc.alpha[j] * tc.beta[l] * e_frac(num, n);
          }
      rep.sum_value = naive.value();
      rep.ratio_trivial = std::abs(rep.sum_value) / rep.trivial_bound;
      rep.ratio_bound = rep.bilinear_bound > 0 ? std::abs(rep.sum_value) / rep.bilinear_bound : 0.0;
    }
    ratios.push_back(rep.ratio_trivial);
    csv.row(s, A, M, N, theta, rep.sum_value.real(), rep.sum_value.imag(), std::abs(rep.sum_value),
            rep.trivial_bound, rep.bilinear_bound, rep.ratio_trivial, rep.ratio_bound);
  }
  auto sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  ctx.files.push_back({"trilinear.csv", csv.text()});
  ctx.note("median_ratio_trivial", median);
  maybe_plot(ctx, "seed", "ratio_trivial", false);
}

using Command = std::function<void(Context&)>;

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table = {
      {"almost_prime", cmd_almost_prime},
      {"brun_titchmarsh", cmd_brun_titchmarsh},
      {"charvar", cmd_charvar},
      {"delta_scan", cmd_delta_scan},
      {"dispersion_decompose", cmd_dispersion_decompose},
      {"divisor_switch", cmd_divisor_switch},
      {"poisson", cmd_poisson},
      {"shiu_check", cmd_shiu_check},
      {"trilinear", cmd_trilinear},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, cmd] : commands()) v.push_back(name);
    return v;
  }();
  return names;
}

ExperimentResult run_experiment(const std::string& command, const Config& config,
                                const RunOptions& opts) {
  const auto it = commands().find(command);
  if (it == commands().end()) throw ConfigError("unknown command '" + command + "'");
  Context ctx;
  ctx.command = command;
  ctx.cfg = config;
  if (opts.seed) ctx.cfg.set("seed", std::to_string(*opts.seed));
  ctx.seed = ctx.cfg.get_uint("seed", 0);
  ctx.oracle = opts.oracle;
  ctx.override_budget = opts.override_budget || ctx.cfg.get_bool("override_budget", false);
  ctx.hash = hex64(fnv1a64("command=" + command + "\n" + ctx.cfg.canonical()));

  it->second(ctx);

  ExperimentResult res;
  res.command = command;
  res.config_hash = ctx.hash;
  res.files = std::move(ctx.files);
  res.ok = ctx.ok;
  res.summary = "command = " + command + "\nconfig_hash = " + ctx.hash + "\npath = " +
                (ctx.oracle ? "oracle" : "fast") + "\n";
  for (const auto& [k, v] : ctx.summary) res.summary += k + " = " + v + "\n";
  res.summary += std::string("ok = ") + (ctx.ok ? "true" : "false") + "\n";
  return res;
}

}  // namespace displab
