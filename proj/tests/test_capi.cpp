#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>

#include "displab/displab.h"

TEST_CASE("status strings and version") {
  CHECK(std::string(displab_status_string(DISPLAB_OK)) == "ok");
  CHECK(std::strlen(displab_status_string(DISPLAB_BUDGET_EXCEEDED)) > 0);
  CHECK(std::strlen(displab_version()) > 0);
}

TEST_CASE("primitives through the C boundary") {
  std::uint64_t t = 0;
  CHECK(displab_tau_k(6, 2, &t) == DISPLAB_OK);
  CHECK(t == 4);
  CHECK(displab_tau_k(6, 0, &t) == DISPLAB_INVALID_ARGUMENT);
  CHECK(std::strlen(displab_last_error()) > 0);

  std::int64_t inv = 0;
  CHECK(displab_mod_inverse(3, 7, &inv) == DISPLAB_OK);
  CHECK(inv == 5);
  CHECK(displab_mod_inverse(2, 4, &inv) == DISPLAB_NOT_INVERTIBLE);
  CHECK(displab_mod_inverse(3, 7, nullptr) == DISPLAB_INVALID_ARGUMENT);

  double re = 0, im = 0;
  CHECK(displab_kloosterman(1, 1, 5, &re, &im) == DISPLAB_OK);
  CHECK(re == doctest::Approx(0.381966).epsilon(1e-5));
  CHECK(std::abs(im) < 1e-12);
}

TEST_CASE("sieve handle") {
  displab_sieve* s = nullptr;
  CHECK(displab_sieve_build(0, 10, &s) == DISPLAB_SIZING);
  CHECK(s == nullptr);
  REQUIRE(displab_sieve_build(1, 100, &s) == DISPLAB_OK);
  std::uint64_t v = 0;
  int mu = 0;
  CHECK(displab_sieve_phi(s, 9, &v) == DISPLAB_OK);
  CHECK(v == 6);
  CHECK(displab_sieve_mu(s, 30, &mu) == DISPLAB_OK);
  CHECK(mu == -1);
  CHECK(displab_sieve_spf(s, 91, &v) == DISPLAB_OK);
  CHECK(v == 7);
  unsigned om = 0;
  CHECK(displab_sieve_big_omega(s, 8, &om) == DISPLAB_OK);
  CHECK(om == 3);
  CHECK(displab_sieve_phi(s, 1000, &v) == DISPLAB_INVALID_ARGUMENT);
  CHECK(displab_sieve_phi(nullptr, 5, &v) == DISPLAB_INVALID_ARGUMENT);
  displab_sieve_free(s);
  displab_sieve_free(nullptr);
}

TEST_CASE("config and run") {
  displab_config* c = nullptr;
  CHECK(displab_config_parse("x = 1\n", &c) == DISPLAB_CONFIG);
  CHECK(std::string(displab_last_error()).find("schema") != std::string::npos);
  REQUIRE(displab_config_parse("schema = 1\nN = 40\ndelta_max = 13\ntrials = 2\n", &c) == DISPLAB_OK);
  char hash[17];
  CHECK(displab_config_hash(c, hash, 4) == DISPLAB_INVALID_ARGUMENT);
  REQUIRE(displab_config_hash(c, hash, sizeof hash) == DISPLAB_OK);
  CHECK(std::strlen(hash) == 16);

  bool found = false;
  for (std::size_t i = 0; i < displab_command_count(); ++i) found = found || std::string(displab_command_name(i)) == "charvar";
  CHECK(found);
  CHECK(displab_command_name(displab_command_count()) == nullptr);

  displab_report* r = nullptr;
  displab_run_options opts{};
  CHECK(displab_run("nope", c, &opts, &r) == DISPLAB_CONFIG);
  REQUIRE(displab_run("charvar", c, &opts, &r) == DISPLAB_OK);
  CHECK(displab_report_ok(r) == 1);
  CHECK(std::strlen(displab_report_config_hash(r)) == 16);  // hashed together with the command name
  REQUIRE(displab_report_file_count(r) >= 1);
  CHECK(std::string(displab_report_file_name(r, 0)).find(".csv") != std::string::npos);
  CHECK(std::string(displab_report_file_content(r, 0)).rfind("config_hash", 0) == 0);
  CHECK(displab_report_file_name(r, 99) == nullptr);
  CHECK(std::string(displab_report_summary(r)).find("ok = true") != std::string::npos);
  displab_report_free(r);

  CHECK(displab_config_set(c, "delta_max", "12") == DISPLAB_OK);
  CHECK(displab_config_set(c, "deltas", "4") == DISPLAB_OK);
  CHECK(displab_run("charvar", c, &opts, &r) == DISPLAB_INVALID_ARGUMENT);

  displab_config* big = nullptr;
  REQUIRE(displab_config_parse("schema = 1\nx = 100000000\nmode = convolution\n", &big) == DISPLAB_OK);
  CHECK(displab_run("delta_scan", big, &opts, &r) == DISPLAB_BUDGET_EXCEEDED);
  displab_config_free(big);
  displab_config_free(c);

  CHECK(displab_config_load("/nonexistent/file.cfg", &c) == DISPLAB_CONFIG);
}
