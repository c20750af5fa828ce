#include "mtrans/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtrans/errors.hpp"

namespace mtrans {

ActionId argmax_valid(const Vec& probs, const std::vector<std::uint8_t>& valid) {
  ActionId best = -1;
  for (ActionId a = 0; a < static_cast<ActionId>(probs.size()); ++a) {
    if (valid[a] && (best < 0 || probs[a] > probs[best])) best = a;
  }
  if (best < 0) throw UsageError("argmax over an empty valid set");
  return best;
}

EditState greedy_rollout(const Model& model, const EncodedInput& enc, const Vec& feats,
                         EditState s, DecoderStep step) {
  const auto& vocab = model.vocabs.actions;
  while (!s.terminal) {
    const auto mask = valid_mask(s, vocab);
    const auto dist = action_distribution(model, step, mask);
    const ActionId a = argmax_valid(dist.probs, mask);
    s.advance(vocab.action(a));
    if (s.terminal) break;
    step = decoder_step(model, step, a, enc, s.i, feats);
  }
  return s;
}

void check_compatible(const std::vector<const Model*>& models) {
  if (models.empty()) throw ConfigError("no models given");
  const auto& ref = models.front()->vocabs;
  for (const Model* m : models) {
    if (!(m->vocabs.alphabet == ref.alphabet) || !(m->vocabs.features == ref.features)) {
      throw ConfigError("ensemble members were trained with different vocabularies");
    }
  }
}

namespace {

// Per-member encodings and feature blocks for one input.
struct MemberInputs {
  std::vector<EncodedInput> enc;
  std::vector<Vec> feats;
};

MemberInputs prepare(const std::vector<const Model*>& models, const std::u32string& x,
                     const MorphFeatures& feats) {
  MemberInputs in;
  for (const Model* m : models) {
    in.enc.push_back(encode(*m, x));
    in.feats.push_back(feature_block(*m, feats));
  }
  return in;
}

std::vector<DecoderStep> first_steps(const std::vector<const Model*>& models,
                                     const MemberInputs& in) {
  std::vector<DecoderStep> steps;
  for (std::size_t k = 0; k < models.size(); ++k) {
    steps.push_back(decoder_step(*models[k], initial_decoder_step(*models[k]), kBeginAction,
                                 in.enc[k], 1, in.feats[k]));
  }
  return steps;
}

Vec mean_distribution(const std::vector<const Model*>& models,
                      const std::vector<DecoderStep>& steps, const std::vector<std::uint8_t>& mask) {
  Vec p = action_distribution(*models[0], steps[0], mask).probs;
  for (std::size_t k = 1; k < models.size(); ++k) {
    p += action_distribution(*models[k], steps[k], mask).probs;
  }
  if (models.size() > 1) p /= static_cast<double>(models.size());
  return p;
}

std::vector<DecoderStep> next_steps(const std::vector<const Model*>& models,
                                    const MemberInputs& in, const std::vector<DecoderStep>& steps,
                                    ActionId a, int buffer_pos) {
  std::vector<DecoderStep> out;
  out.reserve(models.size());
  for (std::size_t k = 0; k < models.size(); ++k) {
    out.push_back(decoder_step(*models[k], steps[k], a, in.enc[k], buffer_pos, in.feats[k]));
  }
  return out;
}

DecodeResult finish(const EditState& s, double log_prob, bool truncated) {
  return {s.out, s.history, log_prob, truncated};
}

DecodeResult greedy_members(const std::vector<const Model*>& models, const MemberInputs& in,
                            const std::u32string& x, int action_slack) {
  const auto& vocab = models[0]->vocabs.actions;
  auto s = initial_state(x, action_slack);
  auto steps = first_steps(models, in);
  double log_prob = 0;
  bool truncated = false;
  while (true) {
    truncated = truncated || s.at_cap();
    const auto mask = valid_mask(s, vocab);
    const Vec p = mean_distribution(models, steps, mask);
    const ActionId a = argmax_valid(p, mask);
    log_prob += std::log(p[a]);
    s.advance(vocab.action(a));
    if (s.terminal) break;
    steps = next_steps(models, in, steps, a, s.i);
  }
  return finish(s, log_prob, truncated);
}

struct Hypothesis {
  EditState state;
  std::vector<DecoderStep> steps;
  double score = 0;
  bool truncated = false;
};

DecodeResult beam_members(const std::vector<const Model*>& models, const MemberInputs& in,
                          const std::u32string& x, int beam_width, int action_slack) {
  if (beam_width < 1) throw UsageError("beam width must be >= 1");
  const auto& vocab = models[0]->vocabs.actions;

  std::vector<Hypothesis> live;
  live.push_back({initial_state(x, action_slack), first_steps(models, in), 0.0, false});
  std::vector<Hypothesis> finished;

  struct Candidate {
    std::size_t hyp;
    ActionId action;
    double score;
  };
  std::vector<Candidate> candidates;

  while (!live.empty() && static_cast<int>(finished.size()) < beam_width) {
    candidates.clear();
    for (std::size_t h = 0; h < live.size(); ++h) {
      const auto mask = valid_mask(live[h].state, vocab);
      const Vec p = mean_distribution(models, live[h].steps, mask);
      for (ActionId a = 0; a < vocab.size(); ++a) {
        if (mask[a]) candidates.push_back({h, a, live[h].score + std::log(p[a])});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    if (static_cast<int>(candidates.size()) > beam_width) candidates.resize(beam_width);

    std::vector<Hypothesis> next;
    for (const auto& c : candidates) {
      const auto& parent = live[c.hyp];
      Hypothesis h;
      h.state = apply(parent.state, vocab.action(c.action));
      h.score = c.score;
      h.truncated = parent.truncated || parent.state.at_cap();
      if (h.state.terminal) {
        finished.push_back(std::move(h));
      } else {
        h.steps = next_steps(models, in, parent.steps, c.action, h.state.i);
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);

    // Scores only decrease as hypotheses grow, so no live hypothesis can
    // overtake a finished one that already scores at least as high.
    if (!finished.empty() && !live.empty()) {
      double best_finished = -std::numeric_limits<double>::infinity();
      for (const auto& f : finished) best_finished = std::max(best_finished, f.score);
      if (best_finished >= live.front().score) break;
    }
  }

  const Hypothesis* best = nullptr;
  for (const auto& f : finished) {
    if (!best || f.score > best->score) best = &f;
  }
  auto result = finish(best->state, best->score, best->truncated);
  if (beam_width > 1) {
    auto greedy = greedy_members(models, in, x, action_slack);
    if (greedy.log_prob > result.log_prob) result = std::move(greedy);
  }
  return result;
}

}  // namespace

DecodeResult greedy_decode(const Model& model, const std::u32string& x, const MorphFeatures& feats,
                           int action_slack) {
  const std::vector<const Model*> models{&model};
  return greedy_members(models, prepare(models, x, feats), x, action_slack);
}

DecodeResult beam_decode(const Model& model, const std::u32string& x, const MorphFeatures& feats,
                         int beam_width, int action_slack) {
  const std::vector<const Model*> models{&model};
  return beam_members(models, prepare(models, x, feats), x, beam_width, action_slack);
}

DecodeResult ensemble_decode(const std::vector<const Model*>& models, const std::u32string& x,
                             const MorphFeatures& feats, int beam_width, int action_slack) {
  check_compatible(models);
  return beam_members(models, prepare(models, x, feats), x, beam_width, action_slack);
}

}  // namespace mtrans
