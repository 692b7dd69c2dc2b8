// grpo-demo: optimize the toy policy toward one fixed target sequence and
// record the reward curve.

#include <chrono>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "patchseg/errors.hpp"
#include "patchseg/grpo.hpp"
#include "patchseg/io.hpp"
#include "patchseg/policy.hpp"

#include "common.hpp"

namespace patchseg::cli {

namespace {

struct GrpoDemoOptions {
  int steps = 200;
  int vocab = 4;
  int target_len = 3;
  double learning_rate = 60.0;
  double stop_reward = 0.95;
  GrpoConfig cfg;
};

}  // namespace

void register_grpo(CLI::App& app, GlobalOptions& g) {
  auto opts = std::make_shared<GrpoDemoOptions>();
  CLI::App* cmd = app.add_subcommand(
      "grpo-demo", "Train the toy policy to emit one fixed sequence; writes the reward curve");
  cmd->add_option("--steps", opts->steps, "Step budget")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--group-size", opts->cfg.group_size, "Rollouts per step")
      ->capture_default_str();
  cmd->add_option("--clip", opts->cfg.clip_epsilon, "Surrogate clip width")
      ->capture_default_str();
  cmd->add_option("--kl-beta", opts->cfg.kl_beta, "KL penalty weight")->capture_default_str();
  cmd->add_option("--lr", opts->learning_rate, "Learning rate (demo scale)")
      ->capture_default_str();
  cmd->add_option("--vocab", opts->vocab, "Toy vocabulary size")
      ->capture_default_str()
      ->check(CLI::Range(2, 64));
  cmd->add_option("--target-len", opts->target_len, "Target sequence length")
      ->capture_default_str()
      ->check(CLI::Range(1, 64));
  cmd->add_option("--stop-reward", opts->stop_reward,
                  "Stop once the mean group reward reaches this value (0 runs every step)")
      ->capture_default_str();

  cmd->callback([opts, &g] {
    const std::filesystem::path out = require_out(g);
    opts->cfg.learning_rate = opts->learning_rate;
    opts->cfg.validate();

    std::vector<int> target(static_cast<std::size_t>(opts->target_len));
    for (int t = 0; t < opts->target_len; ++t) target[t] = (t + 1) % opts->vocab;

    GrpoEngine engine(ToyPolicy(opts->vocab, opts->target_len, 1), opts->cfg);
    const PolicyContext ctx{"demo"};
    const auto score = [&target](Rollout& r) { return r.tokens == target ? 1.0 : 0.0; };

    const auto started = std::chrono::steady_clock::now();
    std::string curve = "step,loss,mean_reward,kl,grad_norm\n";
    StepStats last{};
    int steps_run = 0;
    int first_above = -1;
    bool converged = false;
    for (int step = 0; step < opts->steps; ++step) {
      RolloutGroup group = engine.sample_group(ctx, opts->target_len, g.seed,
                                               static_cast<std::uint64_t>(step));
      score_rollouts(group, score, opts->cfg.std_floor);
      last = engine.step(group);
      ++steps_run;
      char row[160];
      std::snprintf(row, sizeof row, "%d,%.10g,%.10g,%.10g,%.10g\n", step, last.loss,
                    last.mean_reward, last.kl, last.grad_norm);
      curve += row;
      if (first_above < 0 && last.mean_reward > 0.9) first_above = step;
      if (opts->stop_reward > 0 && last.mean_reward >= opts->stop_reward) {
        converged = true;
        break;
      }
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    write_text_file(out / "curve.csv", curve);
    write_json_file(out / "grpo_stats.json",
                    {{"steps_run", steps_run},
                     {"final_mean_reward", last.mean_reward},
                     {"final_loss", last.loss},
                     {"final_kl", last.kl},
                     {"first_step_above_0.9", first_above},
                     {"converged", converged},
                     {"seconds", seconds}});
    write_json_file(out / "grpo_manifest.json",
                    {{"command", "grpo-demo"},
                     {"global", g.echo()},
                     {"config",
                      {{"steps", opts->steps},
                       {"group_size", opts->cfg.group_size},
                       {"clip_epsilon", opts->cfg.clip_epsilon},
                       {"kl_beta", opts->cfg.kl_beta},
                       {"learning_rate", opts->cfg.learning_rate},
                       {"vocab", opts->vocab},
                       {"target_tokens", target},
                       {"stop_reward", opts->stop_reward}}},
                     {"outputs", {"curve.csv", "grpo_stats.json"}}});

    if (!converged && opts->stop_reward > 0) {
      warn("mean reward never reached " + std::to_string(opts->stop_reward) + " in " +
           std::to_string(steps_run) + " steps");
    }
  });
}

}  // namespace patchseg::cli
