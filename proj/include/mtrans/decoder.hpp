#pragma once

// Greedy, beam and ensemble decoding over frozen models.

#include <string>
#include <vector>

#include "mtrans/network.hpp"
#include "mtrans/transition.hpp"

namespace mtrans {

struct DecodeResult {
  std::u32string output;
  std::vector<Action> actions;
  double log_prob = 0;
  bool truncated = false;  // the action cap forced the buffer to drain
};

DecodeResult greedy_decode(const Model& model, const std::u32string& x,
                           const MorphFeatures& feats, int action_slack = kDefaultActionSlack);

// Hypotheses ranked by cumulative log-probability, no length normalization.
// The greedy path is kept as a candidate so the result never scores below
// greedy decoding.
DecodeResult beam_decode(const Model& model, const std::u32string& x, const MorphFeatures& feats,
                         int beam_width, int action_slack = kDefaultActionSlack);

// Beam search over the arithmetic mean of the members' masked
// distributions. Throws ConfigError when vocabularies differ.
DecodeResult ensemble_decode(const std::vector<const Model*>& models, const std::u32string& x,
                             const MorphFeatures& feats, int beam_width,
                             int action_slack = kDefaultActionSlack);

// Throws ConfigError unless every model shares the first one's vocabularies.
void check_compatible(const std::vector<const Model*>& models);

// Continues argmax decoding from `s`, where `step` already consumed the
// action that produced `s`. Returns the terminal state.
EditState greedy_rollout(const Model& model, const EncodedInput& enc, const Vec& feats,
                         EditState s, DecoderStep step);

// Index of the first maximum among valid entries.
ActionId argmax_valid(const Vec& probs, const std::vector<std::uint8_t>& valid);

}  // namespace mtrans
