#include <CLI11.hpp>

#include <iostream>

#include "kplab/cli_io.hpp"
#include "kplab/errors.hpp"

using namespace kplab;

int main(int argc, char** argv) {
  CLI::App app{"KP-I simulator, dyadic norm toolkit and estimate checks"};
  app.require_subcommand(1);

  CommonOptions common;
  uint64_t seed = 0;
  auto add_common = [&](CLI::App* c, bool with_seed) {
    c->add_option("--config", common.config, "RunConfig JSON file")->check(CLI::ExistingFile);
    c->add_option("--out", common.out, "output directory (overrides output.dir)");
    if (with_seed) c->add_option("--seed", seed, "data seed (overrides data.seed)");
    c->add_option("--threads", common.threads, "worker threads (default: KPI_LAB_THREADS or all cores)");
  };

  auto* solve = app.add_subcommand("solve", "integrate from a configured datum");
  add_common(solve, true);

  NormsOptions norms;
  std::string norm_list;
  auto* nc = app.add_subcommand("norms", "evaluate norms of a snapshot directory");
  nc->add_option("snapshots", norms.snapshots, "directory of .kpi1 snapshots")->required();
  nc->add_option("--norms", norm_list, "comma-separated list, e.g. E1,F1,B1,NL1,L4");
  nc->add_option("--T", norms.T, "time horizon");
  nc->add_option("--sign", norms.sign, "-1 for KP-I, +1 for KP-II");
  nc->add_option("--out", norms.out, "output directory");
  nc->add_option("--threads", norms.threads, "worker threads");

  VerifyOptions verify;
  std::vector<std::string> params;
  auto* vc = app.add_subcommand("verify", "randomized check of an estimate");
  vc->add_option("lemma", verify.lemma, "estimate id, e.g. 5.1b or 7.1")->required();
  vc->add_option("--param,-p", params, "key=value or key=a..b (repeatable)");
  vc->add_option("--trials", verify.trials, "trials per parameter point");
  vc->add_option("--seed", verify.seed, "trial seed");
  vc->add_flag("!--no-refine", verify.refine, "skip the refined companion run");
  vc->add_option("--out", verify.out, "output directory");
  vc->add_option("--threads", verify.threads, "worker threads");

  std::string name;
  auto* ec = app.add_subcommand("experiment", "run a named experiment");
  ec->add_option("name", name, "experiment name")->required();
  add_common(ec, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  if (solve->count("--seed") || ec->count("--seed")) common.seed = seed;

  if (*solve) return cmd_solve(common);
  if (*nc) {
    std::string item;
    for (char ch : norm_list + ",") {
      if (ch == ',') {
        if (!item.empty()) norms.norms.push_back(item);
        item.clear();
      } else if (ch != ' ') {
        item += ch;
      }
    }
    return cmd_norms(norms);
  }
  if (*vc) {
    for (const auto& p : params) {
      auto eq = p.find('=');
      if (eq == std::string::npos || eq == 0) {
        std::cerr << "kplab: config error: --param expects key=value, got '" << p << "'\n";
        return kExitConfig;
      }
      verify.params[p.substr(0, eq)] = p.substr(eq + 1);
    }
    return cmd_verify(verify);
  }
  return cmd_experiment(name, common);
}
