// Command line front end: one subcommand per pipeline stage, plus `synth`
// to write a seeded synthetic experiment.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "tagrisk/config.hpp"
#include "tagrisk/error.hpp"
#include "tagrisk/pipeline.hpp"
#include "tagrisk/synthetic.hpp"

namespace {

struct StageOptions {
  std::string config;
  std::string out_dir = "out";
  tagrisk::config::Overrides overrides;
  std::string space;
};

int run_stage(const std::string& stage, StageOptions& o) {
  if (!o.space.empty()) o.overrides.space = tagrisk::emotion_space_from_string(o.space);
  auto cfg = tagrisk::config::load(o.config, o.overrides);
  tagrisk::pipeline::Pipeline p(std::move(cfg), o.out_dir);
  p.run(stage);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mood tags, listening histories and depression risk"};
  app.require_subcommand(1);

  StageOptions opts;
  std::string chosen;
  for (auto stage : tagrisk::pipeline::kStages) {
    const std::string name(stage);
    auto* sub = app.add_subcommand(name, name == "pipeline" ? "Run every stage over the grid"
                                                            : "Run the " + name + " stage");
    sub->add_option("--config", opts.config, "INI configuration file")->required();
    sub->add_option("--out-dir", opts.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", opts.overrides.seed, "Override run.seed");
    sub->add_option("--space", opts.space, "Restrict to one emotion space")
        ->check(CLI::IsMember({"va", "vad"}));
    sub->add_option("--top-n", opts.overrides.top_n, "Restrict to one top-n value");
    sub->add_option("--window-months", opts.overrides.window_months,
                    "Restrict to one window half-width");
    sub->add_option("--iterations", opts.overrides.iterations, "Bootstrap iterations");
    sub->callback([&chosen, name] { chosen = name; });
  }

  tagrisk::synthetic::CohortSpec spec;
  std::string synth_dir;
  bool null_cohort = false;
  auto* synth = app.add_subcommand("synth", "Write a synthetic experiment directory");
  synth->add_option("--out", synth_dir, "Directory to create")->required();
  synth->add_option("--seed", spec.seed, "Cohort seed")->capture_default_str();
  synth->add_option("--at-risk", spec.at_risk, "At-Risk users")->capture_default_str();
  synth->add_option("--no-risk", spec.no_risk, "No-Risk users")->capture_default_str();
  synth->add_flag("--null", null_cohort, "No planted Sadness effect");
  synth->callback([&chosen] { chosen = "synth"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(tagrisk::ExitCode::Usage);
  }

  try {
    if (chosen == "synth") {
      if (null_cohort) spec.sad_multiplier = 1.0;
      tagrisk::synthetic::write_experiment(synth_dir, spec);
      return 0;
    }
    return run_stage(chosen, opts);
  } catch (const tagrisk::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(tagrisk::ExitCode::Data);
  }
}
