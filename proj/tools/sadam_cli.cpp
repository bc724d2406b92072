#include <iostream>

#include <CLI11.hpp>

#include "sadam/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"S-Adam optimizer experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SADAM_VERSION);

  sadam::CommandOptions opts;
  std::uint64_t seed = 0;
  std::string out;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", opts.config, "JSON config file")->required();
    sub->add_option("--seed", seed, "run only this seed");
    sub->add_option("--out", out, "output directory (default $SADAM_OUT_DIR or ./out)");
    sub->add_flag("--force", opts.force, "overwrite files produced by a different config");
  };

  auto* run = app.add_subcommand("run", "train one optimizer per seed");
  auto* compare = app.add_subcommand("compare", "train every optimizer in the config's set");
  auto* probe = app.add_subcommand("probe", "scan the LGI score over a 2-D grid");
  auto* conc = app.add_subcommand("concentration", "probe-count concentration table");
  auto* stab = app.add_subcommand("stability", "one-sample-swap stability study");
  app.add_subcommand("defaults", "print the published default hyperparameters");
  for (auto* sub : {run, compare, probe, conc, stab}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sadam::kExitConfig;
  }

  auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  if (name == "defaults") return sadam::cmd_defaults(std::cout);
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->count("--out")) opts.out = out;

  if (name == "run") return sadam::cmd_run(opts);
  if (name == "compare") return sadam::cmd_compare(opts);
  if (name == "probe") return sadam::cmd_probe(opts);
  if (name == "concentration") return sadam::cmd_concentration(opts);
  return sadam::cmd_stability(opts);
}
