// CLI for the cloud scheduling-policy selection pipeline:
//   collect -> train -> evaluate -> compare / vis

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "metanet/config.hpp"
#include "metanet/error.hpp"
#include "metanet/harness.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string env;  // "", "real" or "synthetic"
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* opt = cmd->add_option("--config", args.config_path, "experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--seed", args.seed, "master seed override");
  cmd->add_option("--env", args.env, "environment: real | synthetic")
      ->check(CLI::IsMember({"real", "synthetic"}));
}

metanet::ExperimentConfig resolve_config(const CommonArgs& args) {
  metanet::ExperimentConfig cfg = args.config_path.empty()
                                      ? metanet::default_config()
                                      : metanet::load_config(args.config_path);
  if (args.seed.has_value()) cfg.seed = *args.seed;
  if (args.env == "synthetic") cfg.synthetic.enabled = true;
  if (args.env == "real") cfg.synthetic.enabled = false;
  metanet::validate(cfg);
  return cfg;
}

void apply_selector(metanet::ExperimentConfig& cfg, const std::string& spec) {
  if (spec.empty()) return;
  if (spec.rfind("fixed:", 0) == 0) {
    cfg.selector.kind = "fixed";
    cfg.selector.fixed_policy = spec.substr(6);
  } else {
    cfg.selector.kind = spec;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heterogeneous-cloud scheduling simulator with surrogate-driven "
               "dynamic policy selection"};
  app.require_subcommand(1);

  CommonArgs collect_args, train_args, eval_args, compare_args;
  std::string out_path, trace_path, checkpoint_path, loss_path, selector_spec, run_path;
  std::vector<std::string> compare_configs, compare_selectors;

  auto* collect = app.add_subcommand("collect", "run every policy for gamma intervals "
                                                "and write the trace dataset");
  add_common(collect, collect_args);
  collect->add_option("--out", out_path, "trace CSV path")->required();

  auto* train = app.add_subcommand("train", "train the cost surrogate on a trace");
  add_common(train, train_args);
  train->add_option("--trace", trace_path, "trace CSV from collect")->required();
  train->add_option("--out", checkpoint_path, "checkpoint output path")->required();
  train->add_option("--loss-out", loss_path, "per-epoch loss CSV (default <out>.loss.csv)");

  auto* evaluate = app.add_subcommand("evaluate", "run T intervals with a selector and "
                                                  "write the per-interval report");
  add_common(evaluate, eval_args);
  evaluate->add_option("--selector", selector_spec,
                       "metanet | random | mab | dqn | fixed:<policy>");
  evaluate->add_option("--checkpoint", checkpoint_path, "surrogate checkpoint (metanet)");
  evaluate->add_option("--trace", trace_path, "trace for dqn pretraining / mab warm start");
  evaluate->add_option("--out", out_path, "report CSV path")->required();

  auto* compare = app.add_subcommand("compare", "evaluate several selectors on one "
                                                "simulator setup and tabulate");
  compare->add_option("--config", compare_configs, "config file(s); one, or one per selector")
      ->required();
  compare->add_option("--selector", compare_selectors,
                      "selector specs applied to a single base config");
  compare->add_option("--seed", compare_args.seed, "master seed override");
  compare->add_option("--env", compare_args.env, "environment: real | synthetic")
      ->check(CLI::IsMember({"real", "synthetic"}));
  compare->add_option("--checkpoint", checkpoint_path, "checkpoint for metanet runs");
  compare->add_option("--trace", trace_path, "trace for dqn/mab runs");
  compare->add_option("--out", out_path, "output prefix")->required();

  auto* vis = app.add_subcommand("vis", "extract per-interval cost estimates and the "
                                        "selected policy from a metanet report");
  vis->add_option("--run", run_path, "report CSV from evaluate")->required();
  vis->add_option("--out", out_path, "vis CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (collect->parsed()) {
      const auto cfg = resolve_config(collect_args);
      metanet::collect(cfg, out_path);
      std::printf("wrote %d records to %s\n", cfg.policies.q() * cfg.collect_gamma,
                  out_path.c_str());
    } else if (train->parsed()) {
      const auto cfg = resolve_config(train_args);
      if (loss_path.empty()) loss_path = checkpoint_path + ".loss.csv";
      const auto result = metanet::train_cmd(cfg, trace_path, checkpoint_path, loss_path);
      std::printf("trained %zu epochs, final loss %g, checkpoint %s\n",
                  result.loss_curve.size(),
                  result.loss_curve.empty() ? 0.0 : result.loss_curve.back(),
                  checkpoint_path.c_str());
    } else if (evaluate->parsed()) {
      auto cfg = resolve_config(eval_args);
      apply_selector(cfg, selector_spec);
      metanet::SelectorArtifacts art{checkpoint_path, trace_path};
      const auto summary = metanet::evaluate(cfg, art, out_path);
      std::printf("%s: cost %.6g energy %.6g resp %.6g sla %.6g cpu %.4g%%\n",
                  summary.selector.c_str(), summary.mean_amortized_cost,
                  summary.total_energy, summary.mean_response_time, summary.sla_rate,
                  summary.mean_cpu_pct);
    } else if (compare->parsed()) {
      std::vector<metanet::ExperimentConfig> configs;
      if (compare_configs.size() == 1 && !compare_selectors.empty()) {
        for (const auto& spec : compare_selectors) {
          CommonArgs args{compare_configs[0], compare_args.seed, compare_args.env};
          auto cfg = resolve_config(args);
          apply_selector(cfg, spec);
          configs.push_back(std::move(cfg));
        }
      } else {
        for (const auto& path : compare_configs) {
          CommonArgs args{path, compare_args.seed, compare_args.env};
          configs.push_back(resolve_config(args));
        }
      }
      std::vector<metanet::SelectorArtifacts> arts(configs.size(),
                                                   {checkpoint_path, trace_path});
      const auto summaries = metanet::compare(configs, arts, out_path);
      std::printf("compared %zu runs, table at %s.txt\n", summaries.size(),
                  out_path.c_str());
    } else if (vis->parsed()) {
      metanet::emit_vis(run_path, out_path);
      std::printf("wrote %s\n", out_path.c_str());
    }
  } catch (const metanet::MetaError& e) {
    std::fprintf(stderr, "error: %s: %s\n", metanet::to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 2;
  }
  return 0;
}
