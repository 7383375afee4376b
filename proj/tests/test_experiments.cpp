#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "displab/config.hpp"
#include "displab/errors.hpp"
#include "displab/experiments.hpp"

using namespace displab;

namespace {

ExperimentResult run(const std::string& cmd, const std::string& text, bool oracle = false) {
  RunOptions o;
  o.oracle = oracle;
  return run_experiment(cmd, Config::parse("schema = 1\n" + text), o);
}

std::string summary_value(const ExperimentResult& r, const std::string& key) {
  std::istringstream in(r.summary);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos && line.substr(0, eq) == key) return line.substr(eq + 3);
  }
  return "";
}

std::vector<std::vector<std::string>> cells(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) row.push_back(c);
    out.push_back(row);
  }
  return out;
}

// Numeric cells within rel, everything else exactly.
void require_same_table(const std::string& a, const std::string& b, double rel) {
  const auto ta = cells(a), tb = cells(b);
  REQUIRE(ta.size() == tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    REQUIRE(ta[i].size() == tb[i].size());
    for (std::size_t j = 0; j < ta[i].size(); ++j) {
      if (ta[i][j] == tb[i][j]) continue;
      char* end1 = nullptr;
      char* end2 = nullptr;
      const double x = std::strtod(ta[i][j].c_str(), &end1), y = std::strtod(tb[i][j].c_str(), &end2);
      INFO("row " << i << " col " << j << ": " << ta[i][j] << " vs " << tb[i][j]);
      REQUIRE(*end1 == '\0');
      REQUIRE(*end2 == '\0');
      REQUIRE(std::abs(x - y) <= rel * std::max({1.0, std::abs(x), std::abs(y)}));
    }
  }
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = Config::parse("# comment\nschema = 1\nx = 1e6\nlist = 1, 2,3\nname = tau_k  # trailing\nflag = true\n");
  CHECK(c.get_int("x", 0) == 1'000'000);
  CHECK(c.get_ints("list", {}) == std::vector<std::int64_t>{1, 2, 3});
  CHECK(c.get_string("name", "") == "tau_k");
  CHECK(c.get_bool("flag", false));
  CHECK(c.get_int("missing", 7) == 7);
  CHECK(Config::parse("schema = 1\nx = 10^6\n").get_int("x", 0) == 1'000'000);
  CHECK_THROWS_AS(Config::parse("x = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("schema = 2\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("schema = 1\nx = 1\nx = 2\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("schema = 1\nnot a pair\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("schema = 1\nx = abc\n").get_int("x", 0), ConfigError);
  CHECK_THROWS_AS(Config::parse("schema = 1\nx = 1.5\n").get_int("x", 0), ConfigError);
  CHECK_THROWS_AS(Config::load("/nonexistent/displab.cfg"), ConfigError);
}

TEST_CASE("config hash ignores ordering and threads") {
  const auto a = Config::parse("schema = 1\nx = 5\ny = 6\n");
  const auto b = Config::parse("schema = 1\ny = 6\nthreads = 8\nx = 5\n");
  CHECK(a.hash_hex() == b.hash_hex());
  CHECK(a.hash_hex().size() == 16);
  const auto c = Config::parse("schema = 1\nx = 5\ny = 7\n");
  CHECK(a.hash_hex() != c.hash_hex());
}

TEST_CASE("unknown commands and keys are rejected") {
  CHECK_THROWS_AS(run("nope", ""), ConfigError);
  CHECK_THROWS_AS(run("charvar", "bogus = 1\n"), ConfigError);
  CHECK(experiment_names().size() >= 8);
}

TEST_CASE("rows echo the config hash") {
  const auto r = run("charvar", "N = 30\ndelta_max = 11\ntrials = 2\n");
  const auto t = cells(r.files.at(0).content);
  REQUIRE(t.size() > 1);
  CHECK(t[0][0] == "config_hash");
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i][0] == r.config_hash);
}

TEST_CASE("charvar") {
  const auto r = run("charvar", "N = 200\ndelta_max = 101\ntrials = 5\n");
  CHECK(r.ok);
  CHECK(std::stod(summary_value(r, "max_rel_diff")) <= 1e-9);
  CHECK_THROWS_AS(run("charvar", "deltas = 4\n"), InvalidArgument);
  const auto o = run("charvar", "N = 200\ndelta_max = 31\ntrials = 3\n", true);
  CHECK(o.ok);
}

TEST_CASE("charvar hand example") {
  // beta = 1 on (2, 4], delta = 3: both sides 1/2
  const auto r = run("charvar", "N = 2\ndeltas = 3\ntrials = 1\nbeta_kind = constant_one\n");
  CHECK(r.ok);
  const auto t = cells(r.files.at(0).content);
  REQUIRE(t.size() == 2);
  std::size_t lhs = 0, rhs = 0;
  for (std::size_t j = 0; j < t[0].size(); ++j) {
    if (t[0][j] == "lhs") lhs = j;
    if (t[0][j] == "rhs") rhs = j;
  }
  REQUIRE(lhs > 0);
  REQUIRE(rhs > 0);
  CHECK(std::stod(t[1][lhs]) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::stod(t[1][rhs]) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("divisor switching has zero mismatch") {
  const auto fixed = run("divisor_switch", "x = 10000\nz = 50\nlambda = one\nq = 101\na = 7\n");
  CHECK(fixed.ok);
  CHECK(summary_value(fixed, "max_mismatch") == "0");
  const auto rnd = run("divisor_switch", "x = 10000\nz = 50\ntrials = 10\n");
  CHECK(rnd.ok);
  const auto big_a = run("divisor_switch", "x = 1000\nz = 20\nlambda = one\nq = 31\na = 5000\n");
  CHECK(big_a.ok);
  const auto orc = run("divisor_switch", "x = 3000\nz = 30\ntrials = 5\n", true);
  CHECK(orc.ok);
  require_same_table(run("divisor_switch", "x = 3000\nz = 30\ntrials = 5\n").files[0].content, orc.files[0].content,
                     1e-9);
}

TEST_CASE("delta_scan fast equals oracle") {
  const std::string cfg = "x = 3000\ntheta_steps = 3\n";
  require_same_table(run("delta_scan", cfg).files[0].content, run("delta_scan", cfg, true).files[0].content, 1e-9);
  const std::string conv = "x = 4000\nmode = convolution\nN = 20\ntheta_steps = 3\n";
  require_same_table(run("delta_scan", conv).files[0].content, run("delta_scan", conv, true).files[0].content, 1e-9);
  const auto one = run("delta_scan", "x = 100000\nkind = constant_one\ntheta_steps = 3\n");
  const auto t = cells(one.files[0].content);
  std::size_t col = 0;
  for (std::size_t j = 0; j < t[0].size(); ++j)
    if (t[0][j] == "Delta_over_x") col = j;
  REQUIRE(col > 0);
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(std::stod(t[i][col]) < 0.05);
  CHECK_THROWS_AS(run("delta_scan", "x = 100\na = 50\n"), ConfigError);
  CHECK_THROWS_AS(run("delta_scan", "x = 100000000\nmode = convolution\n"), BudgetExceeded);
}

TEST_CASE("almost_prime fast equals oracle") {
  const std::string cfg = "x = 5000, 10000\n";
  require_same_table(run("almost_prime", cfg).files[0].content, run("almost_prime", cfg, true).files[0].content, 1e-9);
}

TEST_CASE("brun_titchmarsh") {
  const std::string cfg = "x = 20000\nz = 100\n";
  const auto r = run("brun_titchmarsh", cfg);
  CHECK(r.ok);
  CHECK(r.files.size() == 3);
  CHECK(summary_value(r, "majorant_prime_violations") == "0");
  const double mean = std::stod(summary_value(r, "mean_ratio"));
  CHECK(mean > 0.5);
  CHECK(mean < 2.0);
  require_same_table(r.files[0].content, run("brun_titchmarsh", cfg, true).files[0].content, 1e-9);
  CHECK_THROWS_AS(run("brun_titchmarsh", "x = 20000\ntheta = 0.4\n"), ConfigError);
}

TEST_CASE("dispersion_decompose") {
  const std::string cfg = "M = 300\nN = 10\nQ = 8\ntrials = 2\n";
  const auto r = run("dispersion_decompose", cfg);
  CHECK(r.ok);
  CHECK(summary_value(r, "cauchy_holds") == "true");
  CHECK(r.files.size() == 2);
  CHECK(r.files[1].content.front() == '[');
  const auto p = run("dispersion_decompose", cfg + "signs = prime\n");
  CHECK(p.ok);
}

TEST_CASE("shiu_check") {
  const auto r = run("shiu_check", "x = 20000\ntrials = 10\n");
  CHECK(std::stod(summary_value(r, "max_ratio_lemma")) <= 20);
  const auto one = run("shiu_check", "x = 20000\nq = 1\n");
  CHECK(one.files[0].content.size() > 0);
  require_same_table(r.files[0].content, run("shiu_check", "x = 20000\ntrials = 10\n", true).files[0].content, 1e-9);
}

TEST_CASE("poisson and trilinear commands") {
  const auto p = run("poisson", "M = 2000\nq_max = 12\n");
  CHECK(std::stod(summary_value(p, "max_residual_M2000")) <= 10.0 / 2000);
  const std::string tri = "A = 20\nM = 20\nN = 20\nseeds = 3\n";
  require_same_table(run("trilinear", tri).files[0].content, run("trilinear", tri, true).files[0].content, 1e-9);
}

TEST_CASE("determinism: byte-identical output") {
  for (const auto& [cmd, cfg] : std::vector<std::pair<std::string, std::string>>{
           {"delta_scan", "x = 5000\ntheta_steps = 3\nkind = random_unimodular\nseed = 9\n"},
           {"divisor_switch", "x = 3000\nz = 30\ntrials = 5\nseed = 4\n"},
           {"charvar", "N = 100\ndelta_max = 23\ntrials = 3\nseed = 2\n"},
           {"dispersion_decompose", "M = 200\nN = 8\nQ = 6\nseed = 1\n"},
           {"trilinear", "A = 15\nM = 15\nN = 15\nseeds = 2\n"}}) {
    const auto a = run(cmd, cfg), b = run(cmd, cfg);
    REQUIRE(a.files.size() == b.files.size());
    for (std::size_t i = 0; i < a.files.size(); ++i) REQUIRE(a.files[i].content == b.files[i].content);
  }
  // a different seed changes the random rows
  CHECK(run("charvar", "N = 100\ndelta_max = 23\ntrials = 3\nseed = 2\n").files[0].content !=
        run("charvar", "N = 100\ndelta_max = 23\ntrials = 3\nseed = 3\n").files[0].content);
}

TEST_CASE("plot script references the csv") {
  const auto r = run("charvar", "N = 30\ndelta_max = 7\ntrials = 1\nplot = true\n");
  REQUIRE(r.files.size() >= 2);
  const auto& script = r.files.back();
  CHECK(script.name == "charvar_plot.py");
  CHECK(script.content.find(r.files[0].name) != std::string::npos);
}
