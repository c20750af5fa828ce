#include "mtrans/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "mtrans/batch_decode.hpp"
#include "mtrans/data_io.hpp"
#include "mtrans/decoder.hpp"
#include "mtrans/errors.hpp"
#include "mtrans/optimizer.hpp"

namespace mtrans {

double rollin_expert_probability(double k, int epoch) {
  return k / (k + std::exp(static_cast<double>(epoch) / k));
}

LossGrad nll_marginal_loss(const Vec& probs, const std::vector<ActionId>& optimal) {
  if (optimal.empty()) throw UsageError("optimal action set is empty");
  double mass = 0;
  for (ActionId a : optimal) mass += probs[a];
  LossGrad out;
  out.loss = -std::log(mass);
  // d/dz of -log sum_A p = p - p restricted to A and renormalized.
  out.dlogits = probs;
  for (ActionId a : optimal) out.dlogits[a] -= probs[a] / mass;
  return out;
}

LossGrad softmax_margin_loss(const Vec& logits, const std::vector<std::uint8_t>& valid,
                             const Vec& regrets, const std::vector<ActionId>& optimal) {
  if (optimal.empty()) throw UsageError("optimal action set is empty");
  const Vec augmented = logits + regrets;
  const Vec p_aug = masked_softmax(augmented, valid);

  double mx = -std::numeric_limits<double>::infinity();
  for (ActionId a : optimal) mx = std::max(mx, logits[a]);
  double num = 0;
  for (ActionId a : optimal) num += std::exp(logits[a] - mx);
  const double log_num = mx + std::log(num);

  double mx_aug = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < augmented.size(); ++k)
    if (valid[k]) mx_aug = std::max(mx_aug, augmented[k]);
  double den = 0;
  for (Eigen::Index k = 0; k < augmented.size(); ++k)
    if (valid[k]) den += std::exp(augmented[k] - mx_aug);
  const double log_den = mx_aug + std::log(den);

  LossGrad out;
  out.loss = log_den - log_num;
  out.dlogits = p_aug;
  for (ActionId a : optimal) out.dlogits[a] -= std::exp(logits[a] - log_num);
  return out;
}

double RegretVector::of(ActionId a) const {
  auto it = std::lower_bound(actions.begin(), actions.end(), a);
  if (it == actions.end() || *it != a) throw UsageError("regret requested for an invalid action");
  return regret[it - actions.begin()];
}

Vec RegretVector::dense(int vocab_size) const {
  Vec r = Vec::Zero(vocab_size);
  for (std::size_t k = 0; k < actions.size(); ++k) r[actions[k]] = regret[k];
  return r;
}

namespace {

// Loss of the expert's best completion from a state: actions so far, the
// least completion cost, and beta times the distance of the string the
// expert would finish with.
double expert_completion_loss(const RolloutContext& ctx, const EditState& s, ExpertState es) {
  const auto& y = ctx.expert.target();
  if (s.terminal) return s.cost + static_cast<double>(ctx.beta) * levenshtein(s.out, y);
  std::u32string final_out = s.out;
  final_out.append(y, es.j, std::u32string::npos);
  return s.cost + ctx.expert.completion_cost(s.i, es.j) +
         static_cast<double>(ctx.beta) * levenshtein(final_out, y);
}

double model_completion_loss(const RolloutContext& ctx, const EditState& s_after, ActionId a,
                             const DecoderStep& step) {
  const auto& y = ctx.expert.target();
  if (s_after.terminal) {
    return s_after.cost + static_cast<double>(ctx.beta) * levenshtein(s_after.out, y);
  }
  const auto next = decoder_step(ctx.model, step, a, ctx.enc, s_after.i, ctx.feats);
  const auto done = greedy_rollout(ctx.model, ctx.enc, ctx.feats, s_after, next);
  return done.cost + static_cast<double>(ctx.beta) * levenshtein(done.out, y);
}

double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

std::size_t sample_index(const Vec& probs, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0;
  std::size_t last = 0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0) continue;
    acc += probs[k];
    last = static_cast<std::size_t>(k);
    if (u < acc) return last;
  }
  return last;
}

}  // namespace

RegretVector compute_regrets(const RolloutContext& ctx, const EditState& s, ExpertState es,
                             const DecoderStep& step, RolloutMode mode, double mix_p,
                             std::mt19937_64& rng, bool parallel) {
  const auto& vocab = ctx.model.vocabs.actions;
  const auto& y = ctx.expert.target();
  RegretVector rv;
  rv.actions = valid_actions(s, vocab);
  rv.regret.assign(rv.actions.size(), static_cast<double>(ctx.beta));

  std::vector<std::size_t> scored;
  for (std::size_t k = 0; k < rv.actions.size(); ++k) {
    if (!ctx.expert.increases_distance(s, es, vocab.action(rv.actions[k]))) scored.push_back(k);
  }
  // Every valid action raises the distance only when the cap leaves END as
  // the sole option with target characters missing.
  if (scored.empty()) {
    scored.resize(rv.actions.size());
    std::iota(scored.begin(), scored.end(), std::size_t{0});
  }

  std::vector<std::uint8_t> use_model(scored.size(), 0);
  if (mode == RolloutMode::Mixed) {
    for (auto& flag : use_model) flag = uniform01(rng) >= mix_p;
  }

  std::vector<double> loss(scored.size());
  const auto count = static_cast<std::int64_t>(scored.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t k = 0; k < count; ++k) {
    const ActionId id = rv.actions[scored[k]];
    const Action& a = vocab.action(id);
    const EditState after = apply(s, a);
    if (use_model[k]) {
      loss[k] = model_completion_loss(ctx, after, id, step);
    } else {
      loss[k] = expert_completion_loss(ctx, after, advance_pointer(es, s, a, y));
    }
  }

  const double best = *std::min_element(loss.begin(), loss.end());
  for (std::size_t k = 0; k < scored.size(); ++k) rv.regret[scored[k]] = loss[k] - best;
  for (std::size_t k = 0; k < rv.actions.size(); ++k) {
    if (rv.regret[k] == 0) rv.optimal.push_back(rv.actions[k]);
  }
  return rv;
}

double regret_for_action(const RolloutContext& ctx, const EditState& s, ExpertState es,
                         const DecoderStep& step, const Action& a, RolloutMode mode, double mix_p,
                         std::mt19937_64& rng) {
  const auto rv = compute_regrets(ctx, s, es, step, mode, mix_p, rng);
  return rv.of(ctx.model.vocabs.actions.id(a));
}

RollIn roll_in(const RolloutContext& ctx, double expert_prob, RolloutMode mode, double mix_p,
               std::mt19937_64& rng, DecoderTrace* trace, bool parallel) {
  const auto& vocab = ctx.model.vocabs.actions;
  const auto& y = ctx.expert.target();
  RollIn out;
  auto s = initial_state(ctx.expert.x(), ctx.action_slack);
  ExpertState es;
  DecoderStepCache* cache = nullptr;
  if (trace) cache = &trace->steps.emplace_back();
  auto step = decoder_step(ctx.model, initial_decoder_step(ctx.model), kBeginAction, ctx.enc, 1,
                           ctx.feats, cache);
  while (true) {
    Configuration cfg;
    cfg.valid = valid_mask(s, vocab);
    cfg.dist = action_distribution(ctx.model, step, cfg.valid);
    cfg.regrets = compute_regrets(ctx, s, es, step, mode, mix_p, rng, parallel);
    if (trace) trace->s.push_back(step.s);

    ActionId chosen;
    if (uniform01(rng) < expert_prob) {
      const auto& opt = cfg.regrets.optimal;
      chosen = opt[std::uniform_int_distribution<std::size_t>(0, opt.size() - 1)(rng)];
    } else {
      chosen = static_cast<ActionId>(sample_index(cfg.dist.probs, rng));
    }
    const Action& a = vocab.action(chosen);
    cfg.state = s;
    cfg.expert = es;
    cfg.step = step;
    out.configs.push_back(std::move(cfg));
    out.actions.push_back(a);

    es = advance_pointer(es, s, a, y);
    s.advance(a);
    if (s.terminal) break;
    if (trace) cache = &trace->steps.emplace_back();
    step = decoder_step(ctx.model, step, chosen, ctx.enc, s.i, ctx.feats, cache);
  }
  out.final_state = std::move(s);
  return out;
}

double trajectory_loss(const Model& model, const std::u32string& x, const MorphFeatures& feats,
                       const std::vector<Action>& actions, const std::vector<StepTarget>& targets,
                       ActionLoss loss, Gradients* grads, int action_slack) {
  if (actions.size() != targets.size()) throw UsageError("one target per action is required");
  const auto& vocab = model.vocabs.actions;
  EncoderTrace enc_trace;
  const auto enc = encode(model, x, grads ? &enc_trace : nullptr);
  const Vec fb = feature_block(model, feats);

  std::vector<DecoderTrace> traces(1);
  auto& trace = traces.front();
  auto s = initial_state(x, action_slack);
  DecoderStep step = initial_decoder_step(model);
  ActionId prev = kBeginAction;
  double total = 0;
  for (std::size_t t = 0; t < actions.size(); ++t) {
    DecoderStepCache* cache = grads ? &trace.steps.emplace_back() : nullptr;
    step = decoder_step(model, step, prev, enc, s.i, fb, cache);
    const auto mask = valid_mask(s, vocab);
    const auto dist = action_distribution(model, step, mask);
    const LossGrad lg = loss == ActionLoss::Nll
                            ? nll_marginal_loss(dist.probs, targets[t].optimal)
                            : softmax_margin_loss(dist.logits, mask, targets[t].regrets,
                                                  targets[t].optimal);
    total += lg.loss;
    if (grads) {
      trace.s.push_back(step.s);
      trace.dlogits.push_back(lg.dlogits);
    }
    prev = vocab.id(actions[t]);
    s.advance(actions[t]);
  }
  if (grads) backward(model, enc_trace, enc, feats, traces, *grads);
  return total;
}

double mle_train_step(const Model& model, const Sample& sample, const MorphFeatures& feats,
                      const std::vector<Action>& static_actions, Gradients& grads) {
  const auto& vocab = model.vocabs.actions;
  std::vector<StepTarget> targets;
  targets.reserve(static_actions.size());
  for (const auto& a : static_actions) targets.push_back({{vocab.id(a)}, Vec()});
  return trajectory_loss(model, sample.x, feats, static_actions, targets, ActionLoss::Nll, &grads);
}

IlStepResult il_train_step(const Model& model, const Sample& sample, const MorphFeatures& feats,
                           const TrainConfig& config, double expert_prob, RolloutMode mode,
                           ActionLoss loss, std::mt19937_64& rng, Gradients& grads,
                           bool parallel) {
  if (!sample.y) throw UsageError("imitation learning needs a target string");
  const auto& vocab = model.vocabs.actions;
  EncoderTrace enc_trace;
  const auto enc = encode(model, sample.x, &enc_trace);
  const Vec fb = feature_block(model, feats);
  const Expert expert(sample.x, *sample.y);
  const RolloutContext ctx{model, enc, fb, expert, config.beta, config.max_actions_slack};

  std::vector<DecoderTrace> traces(1);
  auto& trace = traces.front();
  IlStepResult result;
  result.rollin = roll_in(ctx, expert_prob, mode, config.rollout_mix_p, rng, &trace, parallel);
  for (const auto& cfg : result.rollin.configs) {
    const LossGrad lg =
        loss == ActionLoss::Nll
            ? nll_marginal_loss(cfg.dist.probs, cfg.regrets.optimal)
            : softmax_margin_loss(cfg.dist.logits, cfg.valid, cfg.regrets.dense(vocab.size()),
                                  cfg.regrets.optimal);
    result.loss += lg.loss;
    trace.dlogits.push_back(lg.dlogits);
  }
  backward(model, enc_trace, enc, feats, traces, grads);
  return result;
}

std::vector<std::vector<Action>> sample_action_sequences(const Model& model,
                                                         const std::u32string& x,
                                                         const MorphFeatures& feats, int draws,
                                                         std::mt19937_64& rng, int action_slack) {
  const auto& vocab = model.vocabs.actions;
  const auto enc = encode(model, x);
  const Vec fb = feature_block(model, feats);
  std::vector<std::vector<Action>> unique;
  std::map<std::vector<ActionId>, bool> seen;
  for (int d = 0; d < draws; ++d) {
    auto s = initial_state(x, action_slack);
    auto step = decoder_step(model, initial_decoder_step(model), kBeginAction, enc, 1, fb);
    std::vector<ActionId> ids;
    while (true) {
      const auto mask = valid_mask(s, vocab);
      const auto dist = action_distribution(model, step, mask);
      const auto a = static_cast<ActionId>(sample_index(dist.probs, rng));
      ids.push_back(a);
      s.advance(vocab.action(a));
      if (s.terminal) break;
      step = decoder_step(model, step, a, enc, s.i, fb);
    }
    if (seen.emplace(ids, true).second) unique.push_back(s.history);
  }
  return unique;
}

std::vector<double> mrt_risks(const std::vector<std::vector<Action>>& sequences,
                              const std::u32string& x, const std::u32string& y_star,
                              double lambda) {
  std::vector<double> dist(sequences.size()), cost(sequences.size());
  for (std::size_t k = 0; k < sequences.size(); ++k) {
    const auto y = run_actions(x, sequences[k], static_cast<int>(sequences[k].size()) + 1);
    const auto longest = std::max(y.size(), y_star.size());
    dist[k] = longest == 0 ? 0.0 : static_cast<double>(levenshtein(y, y_star)) / longest;
    cost[k] = edit_cost(sequences[k]);
  }
  const auto [lo, hi] = std::minmax_element(cost.begin(), cost.end());
  const double span = sequences.empty() ? 0.0 : *hi - *lo;
  std::vector<double> risk(sequences.size());
  for (std::size_t k = 0; k < sequences.size(); ++k) {
    const double scaled = span > 0 ? (cost[k] - *lo) / span : 0.0;
    risk[k] = lambda * dist[k] + (1.0 - lambda) * scaled;
  }
  return risk;
}

double mrt_loss(const Model& model, const std::u32string& x, const MorphFeatures& feats,
                const std::u32string& y_star, const std::vector<std::vector<Action>>& sequences,
                double lambda, double alpha, Gradients* grads, int action_slack) {
  if (sequences.empty()) return 0;
  const auto& vocab = model.vocabs.actions;
  EncoderTrace enc_trace;
  const auto enc = encode(model, x, grads ? &enc_trace : nullptr);
  const Vec fb = feature_block(model, feats);

  const std::size_t count = sequences.size();
  std::vector<DecoderTrace> traces(count);
  std::vector<std::vector<Vec>> probs(count);
  std::vector<double> log_p(count, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    auto s = initial_state(x, action_slack);
    DecoderStep step = initial_decoder_step(model);
    ActionId prev = kBeginAction;
    for (const auto& a : sequences[k]) {
      DecoderStepCache* cache = grads ? &traces[k].steps.emplace_back() : nullptr;
      step = decoder_step(model, step, prev, enc, s.i, fb, cache);
      const auto dist = action_distribution(model, step, valid_mask(s, vocab));
      prev = vocab.id(a);
      log_p[k] += std::log(dist.probs[prev]);
      if (grads) {
        traces[k].s.push_back(step.s);
        probs[k].push_back(dist.probs);
      }
      s.advance(a);
    }
  }

  const auto risk = mrt_risks(sequences, x, y_star, lambda);
  double mx = -std::numeric_limits<double>::infinity();
  for (double lp : log_p) mx = std::max(mx, alpha * lp);
  std::vector<double> q(count);
  double z = 0;
  for (std::size_t k = 0; k < count; ++k) z += (q[k] = std::exp(alpha * log_p[k] - mx));
  double expected = 0;
  for (std::size_t k = 0; k < count; ++k) expected += (q[k] /= z) * risk[k];

  if (grads) {
    // dL/dlogP_k = alpha Q_k (risk_k - L); dlogP_k/dz_t = onehot(a_t) - p_t.
    for (std::size_t k = 0; k < count; ++k) {
      const double w = alpha * q[k] * (risk[k] - expected);
      for (std::size_t t = 0; t < sequences[k].size(); ++t) {
        Vec d = -w * probs[k][t];
        d[vocab.id(sequences[k][t])] += w;
        traces[k].dlogits.push_back(std::move(d));
      }
    }
    backward(model, enc_trace, enc, feats, traces, *grads);
  }
  return expected;
}

double mrt_train_step(const Model& model, const Sample& sample, const MorphFeatures& feats,
                      const TrainConfig& config, std::mt19937_64& rng, Gradients& grads) {
  if (!sample.y) throw UsageError("minimum-risk training needs a target string");
  const auto seqs = sample_action_sequences(model, sample.x, feats, config.mrt_max_samples, rng,
                                            config.max_actions_slack);
  return mrt_loss(model, sample.x, feats, *sample.y, seqs, config.mrt_lambda, config.mrt_alpha,
                  &grads, config.max_actions_slack);
}

RolloutMode rollout_mode(const TrainConfig& config) {
  return config.rollout_mix_p >= 1.0 ? RolloutMode::Expert : RolloutMode::Mixed;
}

namespace {

Evaluation evaluate_model(const Model& model, const std::vector<Sample>& dev, int beam_width,
                          int action_slack) {
  const std::vector<const Model*> models{&model};
  const auto results = decode_batch(models, dev, beam_width, action_slack);
  std::vector<std::u32string> predictions;
  predictions.reserve(results.size());
  for (const auto& r : results) predictions.push_back(r.output);
  return evaluate(dev, predictions);
}

bool better(const Evaluation& e, double best_acc, double best_dist, bool have_best) {
  if (!have_best) return true;
  if (e.exact_match != best_acc) return e.exact_match > best_acc;
  return e.mean_distance < best_dist;
}

}  // namespace

TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& dev_set,
                  const TrainConfig& config, std::ostream* log, const Model* warm_start) {
  config.validate();
  if (train_set.empty()) throw ConfigError("training set is empty");
  if (dev_set.empty()) throw ConfigError("development set is empty");
  for (const auto& s : train_set) {
    if (!s.y) throw ConfigError("every training sample needs a target");
  }

  Model model = warm_start ? *warm_start
                           : make_model(build_vocabs(train_set),
                                        {config.char_dim, config.feat_dim, config.hidden_dim},
                                        config.seed);
  Adadelta optimizer(model.params);
  Gradients grads = model.params.zeros_like();
  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ull);

  std::vector<MorphFeatures> feats;
  feats.reserve(train_set.size());
  for (const auto& s : train_set) feats.push_back(encode_features(s.features, model.vocabs.features));

  std::vector<std::vector<Action>> static_actions;
  if (config.objective == Objective::Mle) {
    for (const auto& s : train_set) static_actions.push_back(derive_static_actions(s.x, *s.y));
  }
  const RolloutMode mode = rollout_mode(config);
  const ActionLoss action_loss =
      config.objective == Objective::IlSoftmaxMargin ? ActionLoss::SoftmaxMargin : ActionLoss::Nll;

  TrainResult result;
  const auto initial = evaluate_model(model, dev_set, config.beam_width, config.max_actions_slack);
  result.initial_accuracy = initial.exact_match;
  result.initial_distance = initial.mean_distance;
  result.best = model;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  bool have_best = false;
  int since_best = 0;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const double expert_prob = rollin_expert_probability(config.rollin_k, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t idx : order) {
      const auto& sample = train_set[idx];
      grads.set_zero();
      double loss = 0;
      switch (config.objective) {
        case Objective::Mle:
          loss = mle_train_step(model, sample, feats[idx], static_actions[idx], grads);
          break;
        case Objective::IlNll:
        case Objective::IlSoftmaxMargin:
          loss = il_train_step(model, sample, feats[idx], config, expert_prob, mode, action_loss,
                               rng, grads)
                     .loss;
          break;
        case Objective::Mrt:
          loss = mrt_train_step(model, sample, feats[idx], config, rng, grads);
          break;
      }
      total += loss;
      optimizer.update(model.params, grads);
    }

    const auto dev = evaluate_model(model, dev_set, config.beam_width, config.max_actions_slack);
    EpochLog entry{epoch, total / static_cast<double>(train_set.size()), dev.exact_match,
                   dev.mean_distance, expert_prob};
    result.epochs.push_back(entry);
    if (log) {
      *log << entry.epoch << '\t' << entry.train_loss << '\t' << entry.dev_accuracy << '\t'
           << entry.dev_mean_distance << '\t' << entry.expert_prob << '\n';
      log->flush();
    }
    if (better(dev, result.best_accuracy, result.best_distance, have_best)) {
      have_best = true;
      result.best = model;
      result.best_epoch = epoch;
      result.best_accuracy = dev.exact_match;
      result.best_distance = dev.mean_distance;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace mtrans
