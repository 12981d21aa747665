#include "elastlab.h"

#include <cmath>
#include <string>

#include "elastlab/config.hpp"
#include "elastlab/kernels.hpp"
#include "elastlab/suites.hpp"

struct elastlab_session {
  elastlab::Config cfg;
  std::string summary;
  std::string error;
};

extern "C" {

elastlab_session* elastlab_open(void) {
  try {
    return new elastlab_session;
  } catch (...) {
    return nullptr;
  }
}

void elastlab_close(elastlab_session* s) { delete s; }

int elastlab_set(elastlab_session* s, const char* key, const char* value) {
  if (!s) return 2;
  if (!key || !value || !*key) {
    s->error = "elastlab_set: null or empty key/value";
    return 2;
  }
  s->cfg.kv[key] = value;
  s->error.clear();
  return 0;
}

int elastlab_load_config(elastlab_session* s, const char* path) {
  if (!s) return 2;
  if (!path) {
    s->error = "elastlab_load_config: null path";
    return 2;
  }
  try {
    elastlab::Config loaded = elastlab::Config::load(path);
    for (const auto& [k, v] : loaded.kv) s->cfg.kv[k] = v;
    s->error.clear();
    return 0;
  } catch (const std::exception& e) {
    s->error = e.what();
    return 2;
  }
}

int elastlab_run(elastlab_session* s, const char* suite) {
  if (!s) return 2;
  if (!suite) {
    s->error = "elastlab_run: null suite name";
    return 2;
  }
  try {
    elastlab::SuiteResult res = elastlab::run_suite(suite, s->cfg);
    s->summary = res.summary;
    for (const auto& a : res.artifacts) s->summary += "wrote " + a + "\n";
    s->error = res.status == 0 ? "" : res.summary;
    return res.status;
  } catch (const std::exception& e) {
    s->error = e.what();
    return 2;
  }
}

const char* elastlab_summary(const elastlab_session* s) {
  return s ? s->summary.c_str() : "";
}

const char* elastlab_last_error(const elastlab_session* s) {
  return s ? s->error.c_str() : "";
}

const char* elastlab_version(void) { return "elastlab 1.0.0"; }

double elastlab_rongved_d33(double mu, double nu, double mup, double nup,
                            double r, double x1, double x2, double x3) {
  try {
    elastlab::BimaterialConfig cfg;
    cfg.mu = mu;
    cfg.nu = nu;
    cfg.mup = mup;
    cfg.nup = nup;
    cfg.r = r;
    return elastlab::rongved_d33(elastlab::Vec3(x1, x2, x3), cfg);
  } catch (...) {
    return std::nan("");
  }
}

}  // extern "C"
