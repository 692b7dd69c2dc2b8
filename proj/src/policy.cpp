#include "patchseg/policy.hpp"

#include <algorithm>
#include <cmath>

#include "patchseg/errors.hpp"

namespace patchseg {

namespace {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Log-softmax in place, numerically stable.
void log_softmax(std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0;
  for (double x : v) sum += std::exp(x - m);
  const double lse = m + std::log(sum);
  for (double& x : v) x -= lse;
}

void check_same_shape(const ToyPolicy& a, const ToyPolicy& b) {
  if (a.vocab_size() != b.vocab_size() || a.position_buckets() != b.position_buckets() ||
      a.context_buckets() != b.context_buckets()) {
    throw DataError("policies have mismatched shapes");
  }
}

}  // namespace

ToyPolicy::ToyPolicy(int vocab_size, int position_buckets, int context_buckets)
    : vocab_(vocab_size), position_buckets_(position_buckets), context_buckets_(context_buckets) {
  if (vocab_size < 2) throw DataError("policy vocabulary needs at least 2 tokens");
  if (position_buckets < 1 || context_buckets < 1) {
    throw DataError("policy bucket counts must be positive");
  }
  params_.assign(static_cast<std::size_t>(vocab_ + 1) * position_buckets_ * vocab_ +
                     static_cast<std::size_t>(context_buckets_) * vocab_,
                 0.0);
}

void ToyPolicy::add_scaled(std::span<const double> delta, double scale) {
  if (delta.size() != params_.size()) throw DataError("parameter delta has wrong size");
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i] += scale * delta[i];
}

void ToyPolicy::randomize(Rng& rng, double scale) {
  for (double& p : params_) p = scale * (2.0 * uniform01(rng) - 1.0);
}

int ToyPolicy::context_bucket(const PolicyContext& ctx) const {
  return static_cast<int>(fnv1a64(ctx.key) % static_cast<std::uint64_t>(context_buckets_));
}

int ToyPolicy::position_bucket(int position) const {
  return std::min(std::max(position, 0), position_buckets_ - 1);
}

std::size_t ToyPolicy::w_base(int prev, int bucket) const {
  return (static_cast<std::size_t>(prev) * position_buckets_ + bucket) * vocab_;
}

std::size_t ToyPolicy::c_base(int ctx_bucket) const {
  return static_cast<std::size_t>(vocab_ + 1) * position_buckets_ * vocab_ +
         static_cast<std::size_t>(ctx_bucket) * vocab_;
}

std::size_t ToyPolicy::w_row(const StepVisit& visit) const {
  if (visit.prev_token < 0 || visit.prev_token > vocab_) {
    throw DataError("previous token " + std::to_string(visit.prev_token) + " outside vocabulary");
  }
  return w_base(visit.prev_token, position_bucket(visit.position));
}

std::size_t ToyPolicy::c_row(const PolicyContext& ctx) const { return c_base(context_bucket(ctx)); }

std::vector<double> ToyPolicy::step_logits(const PolicyContext& ctx, const StepVisit& visit) const {
  if (visit.prev_token < 0 || visit.prev_token > vocab_) {
    throw DataError("previous token " + std::to_string(visit.prev_token) + " outside vocabulary");
  }
  const std::size_t w = w_base(visit.prev_token, position_bucket(visit.position));
  const std::size_t c = c_base(context_bucket(ctx));
  std::vector<double> logits(static_cast<std::size_t>(vocab_));
  for (int k = 0; k < vocab_; ++k) {
    logits[static_cast<std::size_t>(k)] = params_[w + k] + params_[c + k];
  }
  return logits;
}

std::vector<double> ToyPolicy::step_logprobs(const PolicyContext& ctx,
                                             const StepVisit& visit) const {
  std::vector<double> v = step_logits(ctx, visit);
  log_softmax(v);
  return v;
}

std::vector<int> ToyPolicy::sample(const PolicyContext& ctx, int max_len,
                                   std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<int> tokens;
  tokens.reserve(static_cast<std::size_t>(std::max(max_len, 0)));
  int prev = bos_token();
  for (int pos = 0; pos < max_len; ++pos) {
    const std::vector<double> lp = step_logprobs(ctx, {prev, pos});
    const double u = uniform01(rng);
    double acc = 0;
    int tok = vocab_ - 1;  // rounding fallback
    for (int k = 0; k < vocab_; ++k) {
      acc += std::exp(lp[static_cast<std::size_t>(k)]);
      if (u < acc) {
        tok = k;
        break;
      }
    }
    tokens.push_back(tok);
    prev = tok;
  }
  return tokens;
}

std::vector<double> ToyPolicy::logprobs(const PolicyContext& ctx,
                                        std::span<const int> tokens) const {
  std::vector<double> out;
  out.reserve(tokens.size());
  int prev = bos_token();
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    const int tok = tokens[pos];
    if (tok < 0 || tok >= vocab_) {
      throw DataError("token " + std::to_string(tok) + " outside vocabulary");
    }
    const std::vector<double> lp = step_logprobs(ctx, {prev, static_cast<int>(pos)});
    out.push_back(lp[static_cast<std::size_t>(tok)]);
    prev = tok;
  }
  return out;
}

void ToyPolicy::add_logprob_grad(const PolicyContext& ctx, std::span<const int> tokens,
                                 double coeff, std::span<double> grad) const {
  if (grad.size() != params_.size()) throw DataError("gradient buffer has wrong size");
  int prev = bos_token();
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    const int tok = tokens[pos];
    if (tok < 0 || tok >= vocab_) {
      throw DataError("token " + std::to_string(tok) + " outside vocabulary");
    }
    const StepVisit visit{prev, static_cast<int>(pos)};
    const std::vector<double> lp = step_logprobs(ctx, visit);
    const std::size_t w = w_row(visit);
    const std::size_t c = c_row(ctx);
    for (int k = 0; k < vocab_; ++k) {
      const double delta = (k == tok ? 1.0 : 0.0) - std::exp(lp[static_cast<std::size_t>(k)]);
      grad[w + k] += coeff * delta;
      grad[c + k] += coeff * delta;
    }
    prev = tok;
  }
}

double kl_penalty(const ToyPolicy& ref, const ToyPolicy& now, const PolicyContext& ctx,
                  std::span<const StepVisit> visits) {
  check_same_shape(ref, now);
  double total = 0;
  for (const StepVisit& visit : visits) {
    const std::vector<double> lp_ref = ref.step_logprobs(ctx, visit);
    const std::vector<double> lp_now = now.step_logprobs(ctx, visit);
    for (int k = 0; k < ref.vocab_size(); ++k) {
      const std::size_t i = static_cast<std::size_t>(k);
      total += std::exp(lp_ref[i]) * (lp_ref[i] - lp_now[i]);
    }
  }
  return total;
}

void add_kl_grad(const ToyPolicy& ref, const ToyPolicy& now, const PolicyContext& ctx,
                 std::span<const StepVisit> visits, double coeff, std::span<double> grad) {
  check_same_shape(ref, now);
  if (grad.size() != now.params().size()) throw DataError("gradient buffer has wrong size");
  // d KL(p_ref || softmax(z)) / d z_k = pi_k - p_ref_k, routed to both tables.
  for (const StepVisit& visit : visits) {
    const std::vector<double> lp_ref = ref.step_logprobs(ctx, visit);
    const std::vector<double> lp_now = now.step_logprobs(ctx, visit);
    const std::size_t w = now.w_row(visit);
    const std::size_t c = now.c_row(ctx);
    for (int k = 0; k < now.vocab_size(); ++k) {
      const std::size_t i = static_cast<std::size_t>(k);
      const double dz = std::exp(lp_now[i]) - std::exp(lp_ref[i]);
      grad[w + i] += coeff * dz;
      grad[c + i] += coeff * dz;
    }
  }
}

std::vector<StepVisit> visits_for(const ToyPolicy& policy, std::span<const int> tokens) {
  std::vector<StepVisit> visits;
  visits.reserve(tokens.size());
  int prev = policy.bos_token();
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    visits.push_back({prev, static_cast<int>(pos)});
    prev = tokens[pos];
  }
  return visits;
}

}  // namespace patchseg
