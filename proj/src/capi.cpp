#include "displab/displab.h"

#include <omp.h>

#include <new>
#include <string>

#include "displab/arith.hpp"
#include "displab/config.hpp"
#include "displab/errors.hpp"
#include "displab/experiments.hpp"
#include "displab/expsums.hpp"

struct displab_config {
  displab::Config cfg;
};

struct displab_report {
  displab::ExperimentResult result;
};

struct displab_sieve {
  displab::SieveTable table;
};

namespace {

thread_local std::string g_last_error;
bool g_threads_explicit = false;

template <class F>
displab_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return DISPLAB_OK;
  } catch (const displab::NotInvertible& e) {
    g_last_error = e.what();
    return DISPLAB_NOT_INVERTIBLE;
  } catch (const displab::SizingError& e) {
    g_last_error = e.what();
    return DISPLAB_SIZING;
  } catch (const displab::BudgetExceeded& e) {
    g_last_error = e.what();
    return DISPLAB_BUDGET_EXCEEDED;
  } catch (const displab::ConvergenceError& e) {
    g_last_error = e.what();
    return DISPLAB_CONVERGENCE;
  } catch (const displab::ConfigError& e) {
    g_last_error = e.what();
    return DISPLAB_CONFIG;
  } catch (const displab::InvalidArgument& e) {
    g_last_error = e.what();
    return DISPLAB_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DISPLAB_SIZING;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DISPLAB_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return DISPLAB_INTERNAL;
  }
}

displab_status null_arg(const char* what) {
  g_last_error = std::string(what) + " is null";
  return DISPLAB_INVALID_ARGUMENT;
}

template <class F>
displab_status sieve_query(const displab_sieve* sieve, uint64_t n, F&& f) {
  if (!sieve) return null_arg("sieve");
  if (!sieve->table.contains(n)) {
    g_last_error = "sieve: n = " + std::to_string(n) + " outside the table";
    return DISPLAB_INVALID_ARGUMENT;
  }
  return guarded([&] { f(sieve->table); });
}

}  // namespace

extern "C" {

const char* displab_last_error(void) { return g_last_error.c_str(); }

const char* displab_status_string(displab_status status) {
  switch (status) {
    case DISPLAB_OK: return "ok";
    case DISPLAB_INVALID_ARGUMENT: return "invalid argument";
    case DISPLAB_NOT_INVERTIBLE: return "not invertible";
    case DISPLAB_SIZING: return "sizing error";
    case DISPLAB_BUDGET_EXCEEDED: return "budget exceeded";
    case DISPLAB_CONVERGENCE: return "convergence error";
    case DISPLAB_CONFIG: return "config error";
    case DISPLAB_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* displab_version(void) { return "0.1.0"; }

void displab_set_threads(int threads) {
  if (threads > 0) {
    omp_set_num_threads(threads);
    g_threads_explicit = true;
  }
}

displab_status displab_config_new(displab_config** out) {
  if (!out) return null_arg("out");
  return guarded([&] { *out = new displab_config{}; });
}

displab_status displab_config_parse(const char* text, displab_config** out) {
  if (!text) return null_arg("text");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new displab_config{displab::Config::parse(text)}; });
}

displab_status displab_config_load(const char* path, displab_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new displab_config{displab::Config::load(path)}; });
}

displab_status displab_config_set(displab_config* config, const char* key, const char* value) {
  if (!config) return null_arg("config");
  if (!key || !value) return null_arg("key/value");
  return guarded([&] { config->cfg.set(key, value); });
}

displab_status displab_config_hash(const displab_config* config, char* buf, size_t buf_len) {
  if (!config) return null_arg("config");
  if (!buf || buf_len < 17) {
    g_last_error = "hash buffer needs 17 bytes";
    return DISPLAB_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const auto h = config->cfg.hash_hex();
    h.copy(buf, 16);
    buf[16] = '\0';
  });
}

void displab_config_free(displab_config* config) { delete config; }

size_t displab_command_count(void) { return displab::experiment_names().size(); }

const char* displab_command_name(size_t index) {
  const auto& names = displab::experiment_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

displab_status displab_run(const char* command, const displab_config* config,
                           const displab_run_options* options, displab_report** out) {
  if (!command) return null_arg("command");
  if (!config) return null_arg("config");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    displab::RunOptions opts;
    if (options) {
      opts.oracle = options->oracle != 0;
      opts.override_budget = options->override_budget != 0;
      if (options->has_seed) opts.seed = options->seed;
    }
    // the config's worker count applies unless the caller set one
    if (!g_threads_explicit && config->cfg.has("threads")) {
      const auto t = config->cfg.get_int("threads", 0);
      if (t > 0) omp_set_num_threads(static_cast<int>(t));
    }
    auto result = displab::run_experiment(command, config->cfg, opts);
    *out = new displab_report{std::move(result)};
  });
}

const char* displab_report_summary(const displab_report* report) {
  return report ? report->result.summary.c_str() : nullptr;
}

const char* displab_report_config_hash(const displab_report* report) {
  return report ? report->result.config_hash.c_str() : nullptr;
}

int displab_report_ok(const displab_report* report) { return report && report->result.ok ? 1 : 0; }

size_t displab_report_file_count(const displab_report* report) {
  return report ? report->result.files.size() : 0;
}

const char* displab_report_file_name(const displab_report* report, size_t index) {
  if (!report || index >= report->result.files.size()) return nullptr;
  return report->result.files[index].name.c_str();
}

const char* displab_report_file_content(const displab_report* report, size_t index) {
  if (!report || index >= report->result.files.size()) return nullptr;
  return report->result.files[index].content.c_str();
}

void displab_report_free(displab_report* report) { delete report; }

displab_status displab_tau_k(uint64_t n, unsigned k, uint64_t* out) {
  if (!out) return null_arg("out");
  if (n == 0 || k == 0) {
    g_last_error = "tau_k: n and k must be >= 1";
    return DISPLAB_INVALID_ARGUMENT;
  }
  return guarded([&] { *out = displab::tau_k(n, k); });
}

displab_status displab_mod_inverse(int64_t a, int64_t m, int64_t* out) {
  if (!out) return null_arg("out");
  return guarded([&] { *out = displab::mod_inverse(a, m); });
}

displab_status displab_kloosterman(int64_t a, int64_t b, int64_t c, double* re, double* im) {
  if (!re || !im) return null_arg("re/im");
  return guarded([&] {
    const auto s = displab::complete_kloosterman(a, b, c);
    *re = s.real();
    *im = s.imag();
  });
}

displab_status displab_sieve_build(uint64_t lo, uint64_t hi, displab_sieve** out) {
  if (!out) return null_arg("out");
  return guarded([&] { *out = new displab_sieve{displab::SieveTable::build(lo, hi)}; });
}


displab_status displab_sieve_phi(const displab_sieve* sieve, uint64_t n, uint64_t* out) {
  if (!out) return null_arg("out");
  return sieve_query(sieve, n, [&](const displab::SieveTable& t) { *out = t.phi(n); });
}

displab_status displab_sieve_mu(const displab_sieve* sieve, uint64_t n, int* out) {
  if (!out) return null_arg("out");
  return sieve_query(sieve, n, [&](const displab::SieveTable& t) { *out = t.mu(n); });
}

displab_status displab_sieve_spf(const displab_sieve* sieve, uint64_t n, uint64_t* out) {
  if (!out) return null_arg("out");
  return sieve_query(sieve, n, [&](const displab::SieveTable& t) { *out = t.spf(n); });
}

displab_status displab_sieve_big_omega(const displab_sieve* sieve, uint64_t n, unsigned* out) {
  if (!out) return null_arg("out");
  return sieve_query(sieve, n, [&](const displab::SieveTable& t) { *out = t.big_omega(n); });
}

void displab_sieve_free(displab_sieve* sieve) { delete sieve; }

}  // extern "C"
