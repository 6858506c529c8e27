// acd: command-line front end over the C interface.
#include "acd/acd.h"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

namespace {

struct Flags {
  std::string config, out, checkpoint, data, family;
  std::uint64_t seed = 0;
  std::uint64_t samples = 0;
};

int exit_code(acd_status s) {
  switch (s) {
    case ACD_OK: return 0;
    case ACD_ERR_CONFIG: return 2;
    case ACD_ERR_NUMERICAL: return 3;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Amortized community detection: data generation, training and inference"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(acd_version()));

  Flags f;
  using Run = acd_status (*)(const char*, const acd_options*, const char*);
  struct Verb {
    const char* name;
    const char* help;
    Run run;
    bool needs_config;
  };
  const Verb verbs[] = {
      {"gen-data", "Generate a graph dataset (JSONL plus binary cache)", acd_run_gen_data, true},
      {"train", "Train a model; --out is the run directory", acd_run_train, true},
      {"infer", "Posterior samples, MAP labels and metrics CSV", acd_run_infer, false},
      {"sweep", "Mean AMI over an (a, b) grid of symmetric SBMs", acd_run_sweep, true},
      {"calibrate", "Expected calibration error of the inferred K", acd_run_calibrate, false},
      {"bench", "Inference time and network calls versus S", acd_run_bench, false},
      {"uncertainty", "Mean and std of the inferred K per graph", acd_run_uncertainty, false},
  };

  Run chosen = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* samples_opt = nullptr;
  std::vector<std::pair<CLI::Option*, CLI::Option*>> per_verb;
  for (auto const& v : verbs) {
    auto* sub = app.add_subcommand(v.name, v.help);
    auto* c = sub->add_option("--config", f.config, "key = value configuration file");
    if (v.needs_config) c->required();
    sub->add_option("--out", f.out, "output path")->required();
    auto* s = sub->add_option("--seed", f.seed, "random seed (overrides the config)");
    auto* n = sub->add_option("--samples", f.samples, "posterior samples per graph");
    if (std::string(v.name) == "gen-data")
      sub->add_option("--family", f.family, "general-sbm, sym-sbm or snap")
          ->check(CLI::IsMember({"general-sbm", "sym-sbm", "snap"}));
    if (std::string(v.name) != "gen-data") {
      sub->add_option("--checkpoint", f.checkpoint, "model checkpoint");
      sub->add_option("--data", f.data, "dataset file");
    }
    sub->callback([&, run = v.run, s, n] {
      chosen = run;
      seed_opt = s;
      samples_opt = n;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  acd_options opts;
  acd_options_init(&opts);
  if (seed_opt && seed_opt->count()) {
    opts.has_seed = 1;
    opts.seed = f.seed;
  }
  if (samples_opt && samples_opt->count()) {
    opts.has_samples = 1;
    opts.samples = f.samples;
  }
  opts.family = f.family.empty() ? nullptr : f.family.c_str();
  opts.checkpoint = f.checkpoint.empty() ? nullptr : f.checkpoint.c_str();
  opts.data = f.data.empty() ? nullptr : f.data.c_str();

  acd_status st = chosen(f.config.empty() ? nullptr : f.config.c_str(), &opts, f.out.c_str());
  if (st != ACD_OK) {
    std::fprintf(stderr, "error: %s: %s\n", acd_status_string(st), acd_last_error());
    return exit_code(st);
  }
  std::printf("%s\n", acd_last_summary());
  return 0;
}
