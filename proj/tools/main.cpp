// Command-line driver: one subcommand per experiment kind, plus
// validate-config.  Exit codes: 0 success, 1 bad config, 2 some seeds
// failed, 3 internal error.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "spintunnel/harness.hpp"

using namespace spintunnel;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  int seeds = -1;
  long long base_seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "experiment config file")
      ->required();
  cmd->add_option("--out", o.out_dir, "output directory (overrides config)");
  cmd->add_option("--seeds", o.seeds, "number of disorder seeds (override)");
  cmd->add_option("--base-seed", o.base_seed, "base seed (override)");
}

ExperimentConfig load(const CommonOpts& o, ExperimentKind kind) {
  ExperimentConfig c = parse_config_file(o.config_path);
  c.kind = kind;
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  if (o.seeds >= 0) c.n_seeds = o.seeds;
  if (o.base_seed >= 0) c.base_seed = static_cast<std::uint64_t>(o.base_seed);
  c.validate();
  return c;
}

int run(const CommonOpts& o, ExperimentKind kind) {
  ExperimentConfig c;
  try {
    c = load(o, kind);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  try {
    const RunManifest m = run_experiment(c);
    const int failed = m.failures();
    std::cout << to_string(kind) << ": wrote " << m.output_hashes.size()
              << " outputs to " << c.out_dir;
    if (failed > 0)
      std::cout << " (" << failed << "/" << m.seed_status.size()
                << " seeds failed)";
    std::cout << "\n";
    return failed > 0 ? 2 : 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spin-coupled Anderson model laboratory"};
  app.require_subcommand(1);

  struct Sub {
    ExperimentKind kind;
    const char* help;
  };
  const Sub subs[] = {
      {ExperimentKind::Spectrum, "eigen-decomposition census of H_g"},
      {ExperimentKind::Match, "multi-scale eigenpair matching and pair audit"},
      {ExperimentKind::Tunnel, "spin-flip tunneling trace for one split pair"},
      {ExperimentKind::Greens, "fractional resolvent moment decay scan"},
      {ExperimentKind::Minami, "level-spacing clustering statistic"},
      {ExperimentKind::Correlator, "cross-spin transition amplitude decay"},
  };
  CommonOpts opts[6];
  int rc = 0;
  for (int i = 0; i < 6; ++i) {
    CLI::App* cmd = app.add_subcommand(to_string(subs[i].kind), subs[i].help);
    add_common(cmd, opts[i]);
    const ExperimentKind kind = subs[i].kind;
    CommonOpts* o = &opts[i];
    cmd->callback([o, kind, &rc] { rc = run(*o, kind); });
  }

  static CommonOpts vopts;
  CLI::App* vcmd =
      app.add_subcommand("validate-config", "parse and echo a config file");
  add_common(vcmd, vopts);
  vcmd->callback([&rc] {
    try {
      ExperimentConfig c = parse_config_file(vopts.config_path);
      if (!vopts.out_dir.empty()) c.out_dir = vopts.out_dir;
      if (vopts.seeds >= 0) c.n_seeds = vopts.seeds;
      if (vopts.base_seed >= 0)
        c.base_seed = static_cast<std::uint64_t>(vopts.base_seed);
      c.validate();
      std::cout << render_config(c);
      rc = 0;
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      rc = 1;
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  return rc;
}
