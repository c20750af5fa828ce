// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run everything
//   acceptance 1 4 8      run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "brute_force.hpp"
#include "gradcheck.hpp"
#include "mtrans/batch_decode.hpp"
#include "mtrans/data_io.hpp"
#include "mtrans/decoder.hpp"
#include "mtrans/oracle.hpp"
#include "mtrans/training.hpp"
#include "synthetic_grammar.hpp"

using namespace mtrans;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const std::u32string kSigma = U"abc";

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  const auto xs = testing::all_strings(kSigma, 1, 5);
  const auto ys = testing::all_strings(kSigma, 0, 5);
  std::size_t pairs = 0, bad = 0;
  for (const auto& x : xs)
    for (const auto& y : ys) {
      ++pairs;
      const int brute = testing::min_derivation_cost(x, y);
      const int table = completion_costs(x, 1, y, 0).at(1, 0);
      const auto acts = derive_static_actions(x, y);
      if (table != brute || edit_cost(acts) != brute || run_actions(x, acts) != y) ++bad;
    }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 30.0, std::to_string(pairs) + " pairs, " + std::to_string(bad) +
                                       " mismatches, " + fmt("%.1f s (limit 30 s)", secs)};
}

Outcome expert_example() {
  const std::u32string x = U"walk", y = U"walked";
  const Expert ex(x, y);
  auto s = initial_state(x);
  ExpertState es;
  for (const auto& a : {Action::copy(), Action::copy(), Action::insert(U'd')}) {
    es = advance_pointer(es, s, a, y);
    s.advance(a);
  }
  const auto acts = ex.expert_actions(s, es);
  const bool ok = s.out == U"wad" && s.i == 3 && es.j == 2 &&
                  acts == std::vector<Action>{Action::copy()};
  return {ok, "expert set {" + to_string(acts) + "}"};
}

Outcome regret_correctness() {
  const auto t0 = Clock::now();
  const int beta = 5;
  const auto model = make_model(build_vocabs({{kSigma, {}, kSigma}}), {2, 2, 2}, 1);
  const auto& vocab = model.vocabs.actions;
  const Vec feats = feature_block(model, encode_features({}, model.vocabs.features));
  std::mt19937_64 rng(0);
  std::size_t states = 0, actions = 0, bad = 0;
  for (const auto& x : testing::all_strings(kSigma, 1, 5)) {
    const auto enc = encode(model, x);
    const auto step = decoder_step(model, initial_decoder_step(model), kBeginAction, enc, 1, feats);
    for (const auto& y : testing::all_strings(kSigma, 0, 5)) {
      const Expert expert(x, y);
      const RolloutContext ctx{model, enc, feats, expert, beta};
      const int n = static_cast<int>(x.size()), m = static_cast<int>(y.size());
      const testing::CompletionSearch search(x, y, kSigma, beta,
                                             testing::CompletionSearch::exact_length(n, m, beta));
      for (int i = 1; i <= n + 1; ++i)
        for (int j = 0; j <= m; ++j) {
          // Every error-free configuration: output is the first j target characters.
          auto s = initial_state(x);
          s.i = i;
          s.out = y.substr(0, j);
          const ExpertState es{j};
          const auto rv = compute_regrets(ctx, s, es, step, RolloutMode::Expert, 0, rng);
          std::vector<long> loss(rv.actions.size());
          for (std::size_t k = 0; k < rv.actions.size(); ++k) {
            const auto after = apply(s, vocab.action(rv.actions[k]));
            loss[k] = after.cost + (after.terminal ? beta * levenshtein(after.out, y)
                                                   : search.value(after.i, after.out));
          }
          const long best = *std::min_element(loss.begin(), loss.end());
          const auto expert_set = expert.expert_actions(s, es);
          for (std::size_t k = 0; k < rv.actions.size(); ++k) {
            const auto& a = vocab.action(rv.actions[k]);
            const bool in_expert =
                std::find(expert_set.begin(), expert_set.end(), a) != expert_set.end();
            bool ok;
            if (expert.increases_distance(s, es, a)) {
              ok = rv.regret[k] == beta && loss[k] > best && !in_expert;
            } else {
              ok = rv.regret[k] == static_cast<double>(loss[k] - best);
            }
            if (in_expert && rv.regret[k] != 0) ok = false;
            if (!ok) ++bad;
            ++actions;
          }
          ++states;
        }
    }
  }
  return {bad == 0, std::to_string(states) + " configurations, " + std::to_string(actions) +
                        " actions, " + std::to_string(bad) + " mismatches, " +
                        fmt("%.1f s", seconds_since(t0))};
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  auto m = make_model(build_vocabs({{U"ab", {"V", "PST"}, U"ba"}}), {4, 3, 5}, 11);
  const auto feats = encode_features({"PST"}, m.vocabs.features);
  const auto& vocab = m.vocabs.actions;
  const std::u32string x = U"ab", y = U"ba";

  const auto gold = derive_static_actions(x, y);
  std::vector<StepTarget> gold_targets;
  for (const auto& a : gold) gold_targets.push_back({{vocab.id(a)}, Vec()});

  // A trajectory with an early mistake, supervised by expert sets and regrets.
  const std::vector<Action> acts = {Action::insert(U'a'), Action::copy(), Action::insert(U'a'),
                                    Action::del(), Action::end()};
  std::vector<StepTarget> targets;
  {
    const Expert expert(x, y);
    const auto enc = encode(m, x);
    const Vec fb = feature_block(m, feats);
    const RolloutContext ctx{m, enc, fb, expert, 5};
    auto s = initial_state(x);
    ExpertState es;
    std::mt19937_64 rng(0);
    for (const auto& a : acts) {
      const auto rv =
          compute_regrets(ctx, s, es, initial_decoder_step(m), RolloutMode::Expert, 0, rng);
      targets.push_back({rv.optimal, rv.dense(m.action_count())});
      es = advance_pointer(es, s, a, y);
      s.advance(a);
    }
  }

  const auto mle = testing::gradient_check(m, [&](const Model& mm, Gradients* g) {
    return trajectory_loss(mm, x, feats, gold, gold_targets, ActionLoss::Nll, g);
  });
  const auto marginal = testing::gradient_check(m, [&](const Model& mm, Gradients* g) {
    return trajectory_loss(mm, x, feats, acts, targets, ActionLoss::Nll, g);
  });
  const auto margin = testing::gradient_check(m, [&](const Model& mm, Gradients* g) {
    return trajectory_loss(mm, x, feats, acts, targets, ActionLoss::SoftmaxMargin, g);
  });
  const double worst = std::max({mle.max_rel_error, marginal.max_rel_error, margin.max_rel_error});
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "max rel. error: static " << fmt("%.2e", mle.max_rel_error) << ", marginal "
    << fmt("%.2e", marginal.max_rel_error) << ", softmax-margin "
    << fmt("%.2e", margin.max_rel_error) << " over " << mle.checked << " parameters, "
    << fmt("%.1f s", secs);
  return {worst < 1e-4 && secs < 10.0, d.str()};
}

Outcome levenshtein_check() {
  const auto strings = testing::all_strings(kSigma, 0, 5);
  std::size_t bad = 0;
  for (const auto& a : strings)
    for (const auto& b : strings) bad += levenshtein(a, b) != testing::brute_levenshtein(a, b);
  const int kitten = levenshtein(U"kitten", U"sitting");
  return {bad == 0 && kitten == 3, std::to_string(strings.size() * strings.size()) + " pairs, " +
                                       std::to_string(bad) + " mismatches, kitten/sitting = " +
                                       std::to_string(kitten)};
}

std::vector<Sample> random_toy_inputs(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto bundles = testing::synthetic_bundles();
  const std::u32string letters = U"bdfgklmnprstvzaeiouy";
  std::vector<Sample> out;
  for (int k = 0; k < count; ++k) {
    std::u32string x;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int c = 0; c < n; ++c) x.push_back(letters[rng() % letters.size()]);
    out.push_back({x, bundles[rng() % bundles.size()], std::nullopt});
  }
  return out;
}

Outcome beam_contract() {
  const auto data = testing::make_synthetic_grammar(7, 50, 10);
  const auto model = make_model(build_vocabs(data.train), {10, 4, 16}, 3);
  std::size_t w1_mismatch = 0, below = 0;
  for (const auto& s : random_toy_inputs(200, 13)) {
    const auto f = encode_features(s.features, model.vocabs.features);
    const auto g = greedy_decode(model, s.x, f);
    const auto b1 = beam_decode(model, s.x, f, 1);
    const auto b4 = beam_decode(model, s.x, f, 4);
    w1_mismatch += b1.actions != g.actions;
    below += b4.log_prob < g.log_prob;
  }
  return {w1_mismatch == 0 && below == 0,
          "200 inputs: W=1 differs from greedy on " + std::to_string(w1_mismatch) +
              ", W=4 scores below greedy on " + std::to_string(below)};
}

Outcome determinism() {
  const auto data = testing::make_synthetic_grammar(5, 60, 20);
  TrainConfig cfg;
  cfg.char_dim = 12;
  cfg.feat_dim = 4;
  cfg.hidden_dim = 16;
  cfg.max_epochs = 2;
  cfg.seed = 42;
  const auto a = train(data.train, data.dev, cfg);
  const auto b = train(data.train, data.dev, cfg);
  const auto bytes_a = serialize_checkpoint(a.best, cfg);
  const bool same_ckpt = bytes_a == serialize_checkpoint(b.best, cfg);

  const auto loaded = deserialize_checkpoint(bytes_a);
  const auto inputs = random_toy_inputs(100, 3);
  const auto p = decode_batch({&a.best}, inputs, 4);
  const auto q = decode_batch({&loaded.model}, inputs, 4);
  std::size_t diff = 0;
  for (std::size_t k = 0; k < p.size(); ++k)
    diff += p[k].actions != q[k].actions || p[k].log_prob != q[k].log_prob;
  return {same_ckpt && diff == 0 && loaded.config == cfg,
          std::string("checkpoints ") + (same_ckpt ? "identical" : "differ") + ", " +
              std::to_string(diff) + "/100 predictions differ after reload"};
}

// ---------------------------------------------------------------------------
// Desk-scale training.

constexpr std::uint64_t kGrammarSeed = 2017;

const testing::SplitData& grammar() {
  static const auto data = testing::make_synthetic_grammar(kGrammarSeed, 1000, 200);
  return data;
}

TrainConfig base_config() {
  TrainConfig c;
  c.hidden_dim = 100;
  c.max_epochs = 30;
  c.patience = 10;
  return c;
}

double accuracy_on(const Model& m, const std::vector<Sample>& samples, int beam) {
  const auto results = decode_batch({&m}, samples, beam);
  std::vector<std::u32string> preds;
  for (const auto& r : results) preds.push_back(r.output);
  return evaluate(samples, preds).exact_match;
}

struct Run {
  TrainResult result;
  double secs = 0;
};

Run timed_train(const std::vector<Sample>& tr, const std::vector<Sample>& dev,
                const TrainConfig& cfg, const char* tag) {
  const auto t0 = Clock::now();
  std::ostringstream log;
  Run r{train(tr, dev, cfg, &log), 0};
  r.secs = seconds_since(t0);
  std::fprintf(stderr, "  [%s] %zu epochs, best %.4f at epoch %d, %.0f s\n", tag,
               r.result.epochs.size(), r.result.best_accuracy, r.result.best_epoch, r.secs);
  return r;
}

Outcome ca_d() {
  auto cfg = base_config();
  cfg.objective = Objective::IlNll;
  cfg.rollout_mix_p = 1.0;
  const auto r = timed_train(grammar().train, grammar().dev, cfg, "ca-d");
  const bool ok = r.result.best_accuracy >= 0.95 && r.secs < 15 * 60 &&
                  r.result.best_epoch < 30;
  return {ok, "dev exact match " + fmt("%.4f", r.result.best_accuracy) + " (need >= 0.95) at epoch " +
                  std::to_string(r.result.best_epoch) + ", " + fmt("%.0f s (limit 900 s)", r.secs)};
}

Outcome identity_task() {
  const auto data = testing::make_identity_task(99, 200, 200);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  const auto r = timed_train(data.train, data.dev, cfg, "identity");
  return {r.result.best_accuracy >= 0.99,
          "dev exact match " + fmt("%.4f", r.result.best_accuracy) + " (need >= 0.99) within 3 epochs, " +
              fmt("%.0f s", r.secs)};
}

Outcome infixation() {
  const auto slice = testing::infixation_slice(grammar().dev);
  double il = 0, mle = 0;
  std::ostringstream d;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto cfg = base_config();
    cfg.seed = seed;
    cfg.rollout_mix_p = 1.0;
    cfg.objective = Objective::IlNll;
    const auto a = timed_train(grammar().train, grammar().dev, cfg, "infix il-nll");
    cfg.objective = Objective::Mle;
    const auto b = timed_train(grammar().train, grammar().dev, cfg, "infix mle");
    const double ia = accuracy_on(a.result.best, slice, cfg.beam_width);
    const double ib = accuracy_on(b.result.best, slice, cfg.beam_width);
    il += ia / 3;
    mle += ib / 3;
    d << fmt("seed %.0f: ", static_cast<double>(seed)) << fmt("IL %.4f", ia) << fmt(" MLE %.4f; ", ib);
  }
  d << "mean IL " << fmt("%.4f", il) << " vs MLE " << fmt("%.4f", mle) << " on "
    << slice.size() << " infixed dev forms";
  return {il >= mle - 0.005, d.str()};
}

Outcome mixed_rollouts() {
  auto cfg = base_config();
  cfg.objective = Objective::IlNll;
  cfg.rollout_mix_p = 0.5;
  const auto r = timed_train(grammar().train, grammar().dev, cfg, "ca-r");
  cfg.objective = Objective::IlSoftmaxMargin;
  const auto rm = timed_train(grammar().train, grammar().dev, cfg, "ca-rm");

  auto mcfg = base_config();
  mcfg.objective = Objective::Mrt;
  // With the cost term in the risk, cold-start MRT settles on copying the
  // lemma: suffix insertions cost more than the distance they save once the
  // batch cost range narrows. Distance-only risk does not stall.
  mcfg.mrt_lambda = 1.0;
  mcfg.max_epochs = 4;
  const auto mrt = timed_train(grammar().train, grammar().dev, mcfg, "mrt");
  const bool ok = r.result.best_accuracy >= 0.93 && rm.result.best_accuracy >= 0.93 &&
                  mrt.result.best_accuracy > mrt.result.initial_accuracy;
  std::ostringstream d;
  d << "ca-r " << fmt("%.4f", r.result.best_accuracy) << ", ca-rm "
    << fmt("%.4f", rm.result.best_accuracy) << " (need >= 0.93); MRT "
    << fmt("%.4f", mrt.result.initial_accuracy) << " -> " << fmt("%.4f", mrt.result.best_accuracy);
  return {ok, d.str()};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "oracle equivalence", oracle_equivalence},
      {2, "expert example", expert_example},
      {3, "regret correctness", regret_correctness},
      {4, "gradient check", gradient_check},
      {5, "levenshtein", levenshtein_check},
      {6, "beam contract", beam_contract},
      {7, "determinism and persistence", determinism},
      {8, "ca-d >= 95% on the synthetic grammar", ca_d},
      {9, "identity task >= 99% in 3 epochs", identity_task},
      {10, "infixation: IL-NLL >= MLE", infixation},
      {11, "mixed roll-outs, softmax-margin, MRT", mixed_rollouts},
  };
  std::set<int> wanted;
  for (int k = 1; k < argc; ++k) wanted.insert(std::atoi(argv[k]));

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
