// Toy autoregressive policy with exact log-probs and analytic gradients.
//
// The next-token distribution is a softmax over
//     logits[k] = W[prev_token][position_bucket][k] + C[context_bucket][k]
// where prev_token includes a begin-of-sequence slot. The table form keeps
// every probability exact and every gradient analytic, which is what the
// optimization tests need, while still giving sequences a nontrivial
// dependence on history, position, and context.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "patchseg/rng.hpp"

namespace patchseg {

// Opaque conditioning for a sampled sequence; the toy policy hashes the key
// into a bucket, an external adapter may use it verbatim.
struct PolicyContext {
  std::string key;
};

// Minimal surface an external generation server must offer. sample() derives
// all randomness from `seed` so identical calls stay identical.
class PolicyOracle {
 public:
  virtual ~PolicyOracle() = default;
  virtual std::vector<int> sample(const PolicyContext& ctx, int max_len,
                                  std::uint64_t seed) const = 0;
  virtual std::vector<double> logprobs(const PolicyContext& ctx,
                                       std::span<const int> tokens) const = 0;
};

// One decoding step's conditioning, used to enumerate visited distributions.
struct StepVisit {
  int prev_token = 0;  // vocab_size() means begin-of-sequence
  int position = 0;
};

class ToyPolicy : public PolicyOracle {
 public:
  // Zero parameters, i.e. the uniform policy.
  ToyPolicy(int vocab_size, int position_buckets, int context_buckets);

  int vocab_size() const { return vocab_; }
  int bos_token() const { return vocab_; }
  int position_buckets() const { return position_buckets_; }
  int context_buckets() const { return context_buckets_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  void add_scaled(std::span<const double> delta, double scale);  // params += scale * delta
  void randomize(Rng& rng, double scale);

  int context_bucket(const PolicyContext& ctx) const;
  int position_bucket(int position) const;

  // Offsets of the logit rows that feed a step's distribution, exposed so
  // gradient code outside the class routes into the same slots.
  std::size_t w_row(const StepVisit& visit) const;
  std::size_t c_row(const PolicyContext& ctx) const;

  std::vector<double> step_logits(const PolicyContext& ctx, const StepVisit& visit) const;
  // Log-softmax of step_logits.
  std::vector<double> step_logprobs(const PolicyContext& ctx, const StepVisit& visit) const;

  // PolicyOracle.
  std::vector<int> sample(const PolicyContext& ctx, int max_len,
                          std::uint64_t seed) const override;
  std::vector<double> logprobs(const PolicyContext& ctx,
                               std::span<const int> tokens) const override;

  // grad[i] += coeff * d(sum_t log pi(tokens[t]))/d(params[i]).
  void add_logprob_grad(const PolicyContext& ctx, std::span<const int> tokens, double coeff,
                        std::span<double> grad) const;

 private:
  std::size_t w_base(int prev, int bucket) const;
  std::size_t c_base(int ctx_bucket) const;

  int vocab_ = 0;
  int position_buckets_ = 0;
  int context_buckets_ = 0;
  std::vector<double> params_;  // W[(vocab_+1) * buckets] rows then C[context_buckets] rows
};

// Exact KL(ref || now) summed over the visited next-token distributions.
// Throws DataError when the two policies' shapes differ.
double kl_penalty(const ToyPolicy& ref, const ToyPolicy& now, const PolicyContext& ctx,
                  std::span<const StepVisit> visits);

// grad[i] += coeff * d kl_penalty / d now.params[i].
void add_kl_grad(const ToyPolicy& ref, const ToyPolicy& now, const PolicyContext& ctx,
                 std::span<const StepVisit> visits, double coeff, std::span<double> grad);

// Begin-of-sequence-rooted visit list for a token sequence.
std::vector<StepVisit> visits_for(const ToyPolicy& policy, std::span<const int> tokens);

}  // namespace patchseg
