#include <CLI11.hpp>

#include "phiftrl/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generalized (non-exponential) weighted aggregation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  phiftrl::CliOverrides overrides;
  std::string out_flag;
  std::string format_flag;
  std::uint64_t seed_flag = 0;

  const auto attach_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", out_flag, "output path (default: config output.path or stdout)");
    cmd->add_option("--format", format_flag, "output format: csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", seed_flag, "override the configured seed");
  };

  CLI::App* run = app.add_subcommand("run", "run every configured learner on the shared stream");
  attach_common(run);
  CLI::App* compare =
      app.add_subcommand("compare", "summary table: final regret, bound, L per learner");
  attach_common(compare);

  phiftrl::BoundFlags bound_flags;
  CLI::App* bound = app.add_subcommand("bound", "evaluate the regret bound terms");
  bound->add_option("--T", bound_flags.T, "horizon")->required();
  bound->add_option("--eta", bound_flags.eta, "learning rate")->required();
  bound->add_option("--L", bound_flags.L, "Lipschitz/moment constant")->required();
  double alpha_flag = 0.0;
  CLI::Option* alpha_opt =
      bound->add_option("--alpha", alpha_flag, "strong-convexity constant override");
  bound->add_option("--family", bound_flags.family, "kl|chi2|power")->required();
  bound->add_option("--p", bound_flags.p, "power exponent (family=power)");
  bound->add_option("--pi-j", bound_flags.pi_j, "prior mass of the comparator atom")->required();

  phiftrl::AppendixAFlags appendix_flags;
  CLI::App* appendix = app.add_subcommand(
      "appendix-a", "three-learner quadratic experiment on bounded and shifted streams");
  appendix->add_option("--T", appendix_flags.T, "horizon (>= 100)");
  appendix->add_option("--C", appendix_flags.C, "target bound |y_t| <= C");
  appendix->add_option("--seed", appendix_flags.seed, "stream seed");
  appendix->add_option("--out", appendix_flags.out,
                       "bounded-stream output path (shifted goes to *_shifted)");
  appendix->add_option("--format", appendix_flags.format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));

  CLI::App* selfcheck = app.add_subcommand("selfcheck", "fast invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto fill_overrides = [&](CLI::App* cmd) {
    if (cmd->count("--out")) overrides.out = out_flag;
    if (cmd->count("--format")) overrides.format = format_flag;
    if (cmd->count("--seed")) overrides.seed = seed_flag;
  };

  if (run->parsed()) {
    fill_overrides(run);
    return phiftrl::cmd_run(config_path, overrides);
  }
  if (compare->parsed()) {
    fill_overrides(compare);
    return phiftrl::cmd_compare(config_path, overrides);
  }
  if (bound->parsed()) {
    if (alpha_opt->count()) bound_flags.alpha = alpha_flag;
    return phiftrl::cmd_bound(bound_flags);
  }
  if (appendix->parsed()) {
    return phiftrl::cmd_appendix_a(appendix_flags);
  }
  if (selfcheck->parsed()) {
    return phiftrl::cmd_selfcheck();
  }
  return 2;
}
