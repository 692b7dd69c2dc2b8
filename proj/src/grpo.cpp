#include "patchseg/grpo.hpp"

#include <cmath>
#include <numeric>

#include "patchseg/errors.hpp"
#include "patchseg/rng.hpp"
#include "patchseg/rrle.hpp"

namespace patchseg {

void GrpoConfig::validate() const {
  if (group_size < 2) throw DataError("group_size must be at least 2");
  if (!(clip_epsilon > 0) || !(clip_epsilon < 1)) {
    throw DataError("clip_epsilon must lie in (0, 1)");
  }
  if (!(kl_beta >= 0)) throw DataError("kl_beta must be non-negative");
  if (!(learning_rate > 0)) throw DataError("learning_rate must be positive");
  if (!(dice_epsilon > 0)) throw DataError("dice_epsilon must be positive");
  if (!(std_floor > 0)) throw DataError("std_floor must be positive");
}

double dice_reward(const SemanticMask& pred, const SemanticMask& gt, const ClassMap& cm,
                   double epsilon, bool include_background) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw DataError("dice operands differ in shape: " + std::to_string(pred.height()) + "x" +
                    std::to_string(pred.width()) + " vs " + std::to_string(gt.height()) + "x" +
                    std::to_string(gt.width()));
  }
  double total = 0;
  int classes = 0;
  for (const auto& entry : cm.entries()) {
    if (!include_background && entry.id == cm.background_id()) continue;
    long long inter = 0;
    long long pred_count = 0;
    long long gt_count = 0;
    for (std::size_t i = 0; i < pred.data().size(); ++i) {
      const bool in_pred = pred.data()[i] == entry.id;
      const bool in_gt = gt.data()[i] == entry.id;
      inter += in_pred && in_gt;
      pred_count += in_pred;
      gt_count += in_gt;
    }
    total += 2.0 * static_cast<double>(inter) /
             (static_cast<double>(pred_count) + static_cast<double>(gt_count) + epsilon);
    ++classes;
  }
  if (classes == 0) throw DataError("dice has no classes to average over");
  return total / classes;
}

std::vector<double> group_advantages(std::span<const double> rewards, double std_floor) {
  if (rewards.size() < 2) throw DataError("advantage normalization needs at least 2 rewards");
  for (double r : rewards) {
    if (!std::isfinite(r)) throw DataError("non-finite reward in group");
  }
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double stddev = std::sqrt(var / n);

  std::vector<double> advantages(rewards.size(), 0.0);
  if (stddev < std_floor) return advantages;  // no in-group signal
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    advantages[i] = (rewards[i] - mean) / stddev;
  }
  return advantages;
}

double sequence_ratio(std::span<const double> lp_new, std::span<const double> lp_ref) {
  if (lp_new.size() != lp_ref.size()) {
    throw DataError("ratio operands differ in length: " + std::to_string(lp_new.size()) + " vs " +
                    std::to_string(lp_ref.size()));
  }
  double diff = 0;
  for (std::size_t i = 0; i < lp_new.size(); ++i) diff += lp_new[i] - lp_ref[i];
  return std::exp(diff);
}

namespace {

double clipped_term(double ratio, double advantage, double eps) {
  const double clipped = std::min(std::max(ratio, 1.0 - eps), 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

// True when min() selects the clipped branch, i.e. the term is locally
// constant in the ratio and the gradient is exactly zero.
bool in_dead_zone(double ratio, double advantage, double eps) {
  return (ratio > 1.0 + eps && advantage > 0) || (ratio < 1.0 - eps && advantage < 0);
}

std::vector<StepVisit> group_visits(const ToyPolicy& policy, const RolloutGroup& group) {
  std::vector<StepVisit> visits;
  for (const Rollout& r : group.rollouts) {
    const std::vector<StepVisit> v = visits_for(policy, r.tokens);
    visits.insert(visits.end(), v.begin(), v.end());
  }
  return visits;
}

}  // namespace

double grpo_loss(const RolloutGroup& group, double clip_epsilon) {
  if (!group.advantages_populated) throw DataError("group advantages were never populated");
  if (group.rollouts.empty()) throw DataError("empty rollout group");
  double total = 0;
  for (const Rollout& r : group.rollouts) {
    const double ratio = sequence_ratio(r.logprob_new, r.logprob_ref);
    total += clipped_term(ratio, r.advantage, clip_epsilon);
  }
  return -total / static_cast<double>(group.rollouts.size());
}

void score_rollouts(RolloutGroup& group, const std::function<double(Rollout&)>& score,
                    double std_floor) {
  std::vector<double> rewards;
  rewards.reserve(group.rollouts.size());
  for (Rollout& r : group.rollouts) {
    r.reward = score(r);
    rewards.push_back(r.reward);
  }
  const std::vector<double> advantages = group_advantages(rewards, std_floor);
  for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
    group.rollouts[i].advantage = advantages[i];
  }
  group.advantages_populated = true;
}

RolloutGroup rollout_group(const ToyPolicy& now, const ToyPolicy& ref, const PolicyContext& ctx,
                           int max_len, const GrpoConfig& cfg, std::uint64_t seed,
                           std::uint64_t group_index) {
  cfg.validate();
  if (max_len < 1) throw DataError("rollout max_len must be positive");
  RolloutGroup group;
  group.context = ctx;
  group.max_len = max_len;
  group.rollouts.resize(static_cast<std::size_t>(cfg.group_size));
  for (int i = 0; i < cfg.group_size; ++i) {
    Rollout& r = group.rollouts[static_cast<std::size_t>(i)];
    const std::uint64_t stream = mix_seed(seed, group_index, static_cast<std::uint64_t>(i));
    r.tokens = now.sample(ctx, max_len, stream);
    r.logprob_new = now.logprobs(ctx, r.tokens);
    r.logprob_ref = ref.logprobs(ctx, r.tokens);
  }
  return group;
}

RolloutGroup rollout_group_rrle(const ToyPolicy& now, const ToyPolicy& ref,
                                const PolicyContext& ctx, const RrleTokenizer& tokenizer,
                                const SemanticMask& gt_patch, const ClassMap& cm,
                                const GrpoConfig& cfg, std::uint64_t seed,
                                std::uint64_t group_index) {
  // Worst case alternates single-pixel runs: two tokens per pixel plus
  // separators comfortably fit in 3 tokens per pixel.
  const int max_len = 3 * gt_patch.height() * gt_patch.width();
  RolloutGroup group = rollout_group(now, ref, ctx, max_len, cfg, seed, group_index);
  score_rollouts(
      group,
      [&](Rollout& r) {
        r.text = tokenizer.detokenize(r.tokens);
        const DecodeReport decoded = decode_rrle(r.text, cm, gt_patch.height(), gt_patch.width());
        return dice_reward(decoded.mask, gt_patch, cm, cfg.dice_epsilon,
                           cfg.dice_includes_background);
      },
      cfg.std_floor);
  return group;
}

double pt_loss(const ToyPolicy& now, const ToyPolicy& ref, const RolloutGroup& group,
               const GrpoConfig& cfg) {
  if (!group.advantages_populated) throw DataError("group advantages were never populated");
  if (group.rollouts.empty()) throw DataError("empty rollout group");
  double surrogate = 0;
  for (const Rollout& r : group.rollouts) {
    const std::vector<double> lp_now = now.logprobs(group.context, r.tokens);
    const double ratio = sequence_ratio(lp_now, r.logprob_ref);
    surrogate += clipped_term(ratio, r.advantage, cfg.clip_epsilon);
  }
  double loss = -surrogate / static_cast<double>(group.rollouts.size());
  if (cfg.kl_beta > 0) {
    const std::vector<StepVisit> visits = group_visits(now, group);
    loss += cfg.kl_beta * kl_penalty(ref, now, group.context, visits);
  }
  return loss;
}

std::vector<double> pt_grad(const ToyPolicy& now, const ToyPolicy& ref, const RolloutGroup& group,
                            const GrpoConfig& cfg) {
  if (!group.advantages_populated) throw DataError("group advantages were never populated");
  if (group.rollouts.empty()) throw DataError("empty rollout group");
  std::vector<double> grad(now.params().size(), 0.0);
  const double inv_g = 1.0 / static_cast<double>(group.rollouts.size());
  for (const Rollout& r : group.rollouts) {
    const std::vector<double> lp_now = now.logprobs(group.context, r.tokens);
    const double ratio = sequence_ratio(lp_now, r.logprob_ref);
    if (in_dead_zone(ratio, r.advantage, cfg.clip_epsilon)) continue;
    // d/dtheta [-(1/G) * ratio * A] = -(1/G) * A * ratio * d log pi / dtheta.
    now.add_logprob_grad(group.context, r.tokens, -inv_g * r.advantage * ratio, grad);
  }
  if (cfg.kl_beta > 0) {
    const std::vector<StepVisit> visits = group_visits(now, group);
    add_kl_grad(ref, now, group.context, visits, cfg.kl_beta, grad);
  }
  return grad;
}

StepStats grpo_step(ToyPolicy& now, const ToyPolicy& ref, RolloutGroup& group,
                    const GrpoConfig& cfg) {
  cfg.validate();
  if (!group.advantages_populated) {
    std::vector<double> rewards;
    rewards.reserve(group.rollouts.size());
    for (const Rollout& r : group.rollouts) rewards.push_back(r.reward);
    const std::vector<double> advantages = group_advantages(rewards, cfg.std_floor);
    for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
      group.rollouts[i].advantage = advantages[i];
    }
    group.advantages_populated = true;
  }

  StepStats stats;
  stats.loss = pt_loss(now, ref, group, cfg);
  const std::vector<StepVisit> visits = group_visits(now, group);
  stats.kl = kl_penalty(ref, now, group.context, visits);
  double reward_sum = 0;
  for (const Rollout& r : group.rollouts) reward_sum += r.reward;
  stats.mean_reward = reward_sum / static_cast<double>(group.rollouts.size());

  const std::vector<double> grad = pt_grad(now, ref, group, cfg);
  double norm_sq = 0;
  for (double g : grad) norm_sq += g * g;
  stats.grad_norm = std::sqrt(norm_sq);

  if (!std::isfinite(stats.loss) || !std::isfinite(stats.grad_norm)) {
    throw DataError("non-finite loss or gradient in optimization step");
  }
  now.add_scaled(grad, -cfg.learning_rate);
  return stats;
}

GrpoEngine::GrpoEngine(ToyPolicy policy, GrpoConfig cfg)
    : policy_(policy), reference_(std::move(policy)), cfg_(cfg) {
  cfg_.validate();
}

RolloutGroup GrpoEngine::sample_group(const PolicyContext& ctx, int max_len, std::uint64_t seed,
                                      std::uint64_t group_index) const {
  return rollout_group(policy_, reference_, ctx, max_len, cfg_, seed, group_index);
}

StepStats GrpoEngine::step(RolloutGroup& group) { return grpo_step(policy_, reference_, group, cfg_); }

}  // namespace patchseg
