// Group-relative policy optimization over the toy policy.
//
// A group of G sequences is sampled per step. Rewards are normalized within
// the group to advantages, the surrogate compares the current policy against
// a frozen reference snapshot through a sequence-level probability ratio with
// a clipped objective, and a KL penalty on the visited next-token
// distributions regularizes toward the reference.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "patchseg/grid.hpp"
#include "patchseg/mask.hpp"
#include "patchseg/policy.hpp"
#include "patchseg/tokenizer.hpp"

namespace patchseg {

struct GrpoConfig {
  int group_size = 24;
  double clip_epsilon = 1e-3;
  double kl_beta = 1e-4;
  double learning_rate = 1e-6;
  double dice_epsilon = 1e-6;
  double std_floor = 1e-8;
  bool dice_includes_background = true;

  void validate() const;  // throws DataError
};

struct Rollout {
  std::vector<int> tokens;
  std::string text;                  // detokenized form, when a tokenizer is in play
  std::vector<double> logprob_new;   // per-token log-probs under the current policy
  std::vector<double> logprob_ref;   // per-token log-probs under the reference policy
  double reward = 0;
  double advantage = 0;
};

struct RolloutGroup {
  PolicyContext context;
  int max_len = 0;
  std::vector<Rollout> rollouts;
  bool advantages_populated = false;
};

struct StepStats {
  double loss = 0;
  double mean_reward = 0;
  double kl = 0;
  double grad_norm = 0;
};

// Mean soft-dice over the class map's classes; background participates
// unless include_background is false. Throws DataError on dimension mismatch.
double dice_reward(const SemanticMask& pred, const SemanticMask& gt, const ClassMap& cm,
                   double epsilon, bool include_background = true);

// Group-normalized advantages with the population standard deviation. A
// group whose reward spread falls below std_floor gets all-zero advantages.
// Throws DataError for groups smaller than 2 or non-finite rewards.
std::vector<double> group_advantages(std::span<const double> rewards, double std_floor);

// exp(sum(lp_new) - sum(lp_ref)); lengths must match.
double sequence_ratio(std::span<const double> lp_new, std::span<const double> lp_ref);

// Clipped surrogate -(1/G) * sum min(rho * A, clip(rho, 1-eps, 1+eps) * A),
// using the log-probs stored in the group. Throws DataError when advantages
// were never populated.
double grpo_loss(const RolloutGroup& group, double clip_epsilon);

// Fills rewards via `score` (which may also set rollout.text) and populates
// advantages.
void score_rollouts(RolloutGroup& group, const std::function<double(Rollout&)>& score,
                    double std_floor);

// Samples group_size sequences from `now` and records log-probs under both
// policies. Rollout i draws from a stream derived from (seed, group_index, i)
// so serial and parallel execution agree bit for bit. Rewards are left to the
// caller.
RolloutGroup rollout_group(const ToyPolicy& now, const ToyPolicy& ref, const PolicyContext& ctx,
                           int max_len, const GrpoConfig& cfg, std::uint64_t seed,
                           std::uint64_t group_index);

// Convenience: rollouts detokenized, robust-decoded against the patch
// dimensions, and scored with dice against gt_patch.
RolloutGroup rollout_group_rrle(const ToyPolicy& now, const ToyPolicy& ref,
                                const PolicyContext& ctx, const RrleTokenizer& tokenizer,
                                const SemanticMask& gt_patch, const ClassMap& cm,
                                const GrpoConfig& cfg, std::uint64_t seed,
                                std::uint64_t group_index);

// Penalized objective: grpo_loss plus kl_beta times the exact KL summed over
// every step visited by the group's rollouts. logprob_new is recomputed from
// `now`, so the value is a deterministic function of the policy parameters.
double pt_loss(const ToyPolicy& now, const ToyPolicy& ref, const RolloutGroup& group,
               const GrpoConfig& cfg);

// Analytic gradient of pt_loss with respect to now's parameters. Advantages
// and reference log-probs are data; rollouts inside the clip dead zone
// contribute exactly zero.
std::vector<double> pt_grad(const ToyPolicy& now, const ToyPolicy& ref, const RolloutGroup& group,
                            const GrpoConfig& cfg);

// One gradient-descent step on pt_loss. Populates advantages when the caller
// has not. Throws DataError when the loss or gradient turns non-finite.
StepStats grpo_step(ToyPolicy& now, const ToyPolicy& ref, RolloutGroup& group,
                    const GrpoConfig& cfg);

// Loop driver holding the mutable policy and its frozen reference snapshot.
class GrpoEngine {
 public:
  GrpoEngine(ToyPolicy policy, GrpoConfig cfg);

  const ToyPolicy& policy() const { return policy_; }
  ToyPolicy& policy() { return policy_; }
  const ToyPolicy& reference() const { return reference_; }
  const GrpoConfig& config() const { return cfg_; }

  RolloutGroup sample_group(const PolicyContext& ctx, int max_len, std::uint64_t seed,
                            std::uint64_t group_index) const;
  StepStats step(RolloutGroup& group);

 private:
  ToyPolicy policy_;
  const ToyPolicy reference_;
  GrpoConfig cfg_;
};

}  // namespace patchseg
