// Batch front end: runs one named suite against a flat key = value
// configuration and writes CSV/JSON artifacts to the output directory.
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "elastlab.h"

int main(int argc, char** argv) {
  CLI::App app{"elastlab: elastic inclusion identification laboratory"};

  std::string suite;
  app.add_option("suite", suite,
                 "suite to run: validate, kernels, dtn, sderiv, sscale, "
                 "stability")
      ->required();
  std::string config_path;
  app.add_option("-c,--config", config_path, "configuration file");
  std::vector<std::string> overrides;
  app.add_option("-D,--define", overrides, "override: key=value");
  std::string out_dir;
  app.add_option("-o,--out-dir", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  elastlab_session* s = elastlab_open();
  if (!s) {
    std::fprintf(stderr, "failed to open session\n");
    return 2;
  }

  int rc = 0;
  if (!config_path.empty()) rc = elastlab_load_config(s, config_path.c_str());
  for (size_t i = 0; rc == 0 && i < overrides.size(); ++i) {
    size_t eq = overrides[i].find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "bad override (need key=value): %s\n",
                   overrides[i].c_str());
      rc = 2;
      break;
    }
    rc = elastlab_set(s, overrides[i].substr(0, eq).c_str(),
                      overrides[i].substr(eq + 1).c_str());
  }
  if (rc == 0 && !out_dir.empty()) rc = elastlab_set(s, "out_dir", out_dir.c_str());

  if (rc == 0) {
    rc = elastlab_run(s, suite.c_str());
    std::fputs(elastlab_summary(s), stdout);
  }
  if (rc != 0) std::fprintf(stderr, "%s\n", elastlab_last_error(s));

  elastlab_close(s);
  return rc;
}
