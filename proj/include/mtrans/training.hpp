#pragma once

// Training regimes: static-oracle MLE, imitation learning with expert or
// mixed roll-outs, and minimum-risk training, plus the epoch loop with
// early stopping on dev exact match.

#include <iosfwd>
#include <random>
#include <vector>

#include "mtrans/core.hpp"
#include "mtrans/network.hpp"
#include "mtrans/oracle.hpp"
#include "mtrans/transition.hpp"

namespace mtrans {

// Expert roll-in probability k / (k + exp(epoch / k)), epoch counted from 0.
double rollin_expert_probability(double k, int epoch);

struct LossGrad {
  double loss = 0;
  Vec dlogits;
};

// -log sum_{a in optimal} P(a). Throws UsageError on an empty set.
LossGrad nll_marginal_loss(const Vec& probs, const std::vector<ActionId>& optimal);

// -log [ sum_{a in optimal} exp(z_a) / sum_{a valid} exp(z_a + r_a) ].
LossGrad softmax_margin_loss(const Vec& logits, const std::vector<std::uint8_t>& valid,
                             const Vec& regrets, const std::vector<ActionId>& optimal);

enum class RolloutMode { Expert, Mixed };
enum class ActionLoss { Nll, SoftmaxMargin };

struct RegretVector {
  std::vector<ActionId> actions;  // valid actions, ascending
  std::vector<double> regret;     // aligned with `actions`
  std::vector<ActionId> optimal;  // zero-regret subset

  double of(ActionId a) const;
  // Full-vocabulary vector with 0 at invalid ids.
  Vec dense(int vocab_size) const;
};

// Everything a roll-out needs about one training sample.
struct RolloutContext {
  const Model& model;
  const EncodedInput& enc;
  const Vec& feats;
  const Expert& expert;
  int beta;
  int action_slack = kDefaultActionSlack;
};

// Regrets of every valid action at (s, es). `step` is the decoder state
// scoring the next action. Actions that raise the attainable distance get
// regret beta without a roll-out; the rest are scored by the expert's
// closed-form completion or, in Mixed mode with probability 1 - mix_p per
// action, by greedy model continuation. Coins are drawn serially in action
// order, so `parallel` changes only how the roll-outs are scheduled.
RegretVector compute_regrets(const RolloutContext& ctx, const EditState& s, ExpertState es,
                             const DecoderStep& step, RolloutMode mode, double mix_p,
                             std::mt19937_64& rng, bool parallel = false);

double regret_for_action(const RolloutContext& ctx, const EditState& s, ExpertState es,
                         const DecoderStep& step, const Action& a, RolloutMode mode,
                         double mix_p, std::mt19937_64& rng);

// One visited configuration of a roll-in together with the quantities the
// action-level losses need.
struct Configuration {
  EditState state;
  ExpertState expert;
  DecoderStep step;
  ActionDistribution dist;
  std::vector<std::uint8_t> valid;
  RegretVector regrets;
};

struct RollIn {
  std::vector<Configuration> configs;
  std::vector<Action> actions;  // the action taken at each configuration
  EditState final_state;
};

// Follows the expert (uniformly over the zero-regret set) with probability
// expert_prob per step, else samples from the model's valid distribution.
// When `trace` is given the decoder caches are recorded for backward().
RollIn roll_in(const RolloutContext& ctx, double expert_prob, RolloutMode mode, double mix_p,
               std::mt19937_64& rng, DecoderTrace* trace = nullptr, bool parallel = false);

// Per-step supervision for a teacher-forced pass.
struct StepTarget {
  std::vector<ActionId> optimal;
  Vec regrets;  // full vocabulary; used by the softmax-margin loss only
};

// Teacher-forced pass along `actions`, summing the action-level loss
// against `targets`. Accumulates gradients when `grads` is non-null.
double trajectory_loss(const Model& model, const std::u32string& x, const MorphFeatures& feats,
                       const std::vector<Action>& actions, const std::vector<StepTarget>& targets,
                       ActionLoss loss, Gradients* grads, int action_slack = kDefaultActionSlack);

// Negative log-likelihood of a static derivation.
double mle_train_step(const Model& model, const Sample& sample, const MorphFeatures& feats,
                      const std::vector<Action>& static_actions, Gradients& grads);

struct IlStepResult {
  double loss = 0;
  RollIn rollin;
};

IlStepResult il_train_step(const Model& model, const Sample& sample, const MorphFeatures& feats,
                           const TrainConfig& config, double expert_prob, RolloutMode mode,
                           ActionLoss loss, std::mt19937_64& rng, Gradients& grads,
                           bool parallel = false);

// Ancestral samples from the model, deduplicated, first-seen order.
std::vector<std::vector<Action>> sample_action_sequences(const Model& model,
                                                         const std::u32string& x,
                                                         const MorphFeatures& feats, int draws,
                                                         std::mt19937_64& rng,
                                                         int action_slack = kDefaultActionSlack);

// risk = lambda * lev / max(|y|, |y*|) + (1 - lambda) * minmax(cost); a batch
// with one distinct cost scales every cost to 0.
std::vector<double> mrt_risks(const std::vector<std::vector<Action>>& sequences,
                              const std::u32string& x, const std::u32string& y_star,
                              double lambda);

// Expected risk under Q(a) ~ P(a)^alpha renormalized over `sequences`.
double mrt_loss(const Model& model, const std::u32string& x, const MorphFeatures& feats,
                const std::u32string& y_star, const std::vector<std::vector<Action>>& sequences,
                double lambda, double alpha, Gradients* grads,
                int action_slack = kDefaultActionSlack);

double mrt_train_step(const Model& model, const Sample& sample, const MorphFeatures& feats,
                      const TrainConfig& config, std::mt19937_64& rng, Gradients& grads);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0;
  double dev_accuracy = 0;
  double dev_mean_distance = 0;
  double expert_prob = 0;
};

struct TrainResult {
  Model best;
  int best_epoch = -1;
  double best_accuracy = 0;
  double best_distance = 0;
  double initial_accuracy = 0;  // dev accuracy before the first update
  double initial_distance = 0;
  std::vector<EpochLog> epochs;
};

// rollout_mix_p is the per-action probability of an expert roll-out, so 1
// means expert roll-outs only and anything lower mixes in the model.
RolloutMode rollout_mode(const TrainConfig& config);

// Writes "epoch<TAB>loss<TAB>dev_acc<TAB>dev_dist<TAB>p_e" per epoch to `log`.
// Throws ConfigError on empty train or dev sets.
TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& dev_set,
                  const TrainConfig& config, std::ostream* log = nullptr,
                  const Model* warm_start = nullptr);

}  // namespace mtrans
