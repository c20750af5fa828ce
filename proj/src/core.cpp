#include "mtrans/core.hpp"

#include <algorithm>
#include <set>

#include "mtrans/errors.hpp"
#include "mtrans/utf8.hpp"

namespace mtrans {

std::string to_string(const Action& a) {
  switch (a.kind) {
    case ActionKind::Copy:
      return "COPY";
    case ActionKind::Delete:
      return "DELETE";
    case ActionKind::End:
      return "END";
    case ActionKind::Insert:
      return "INS(" + utf8::encode(a.ch) + ")";
  }
  return "?";
}

std::string to_string(const std::vector<Action>& actions) {
  std::string out;
  for (std::size_t k = 0; k < actions.size(); ++k) {
    if (k) out += ' ';
    out += to_string(actions[k]);
  }
  return out;
}

Action parse_action(std::string_view token) {
  if (token == "COPY") return Action::copy();
  if (token == "DELETE") return Action::del();
  if (token == "END") return Action::end();
  if (token.size() > 5 && token.substr(0, 4) == "INS(" && token.back() == ')') {
    const auto chars = utf8::decode(token.substr(4, token.size() - 5));
    if (chars.size() == 1) return Action::insert(chars[0]);
  }
  throw InputError("bad action token '" + std::string(token) + "'");
}

std::vector<Action> parse_actions(std::string_view text) {
  std::vector<Action> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == ' ') {
      ++pos;
      continue;
    }
    // INS( ) carries a literal character, which may itself be a space.
    std::size_t end;
    if (text.substr(pos, 4) == "INS(") {
      end = text.find(')', pos + 5);
      if (end == std::string_view::npos) throw InputError("unterminated INS(");
      ++end;
    } else {
      end = text.find(' ', pos);
      if (end == std::string_view::npos) end = text.size();
    }
    out.push_back(parse_action(text.substr(pos, end - pos)));
    pos = end;
  }
  return out;
}

Alphabet::Alphabet(std::vector<char32_t> chars) {
  std::sort(chars.begin(), chars.end());
  chars.erase(std::unique(chars.begin(), chars.end()), chars.end());
  surface_ = std::move(chars);
  id_to_char_.assign(kFirstSurface, 0);
  for (char32_t c : surface_) {
    char_to_id_.emplace(c, static_cast<int>(id_to_char_.size()));
    id_to_char_.push_back(c);
  }
}

int Alphabet::id(char32_t c) const {
  auto it = char_to_id_.find(c);
  return it == char_to_id_.end() ? kUnk : it->second;
}

char32_t Alphabet::character(int id) const {
  if (id < kFirstSurface || id >= size()) {
    throw UsageError("alphabet id " + std::to_string(id) + " has no surface character");
  }
  return id_to_char_[id];
}

ActionVocab::ActionVocab(const Alphabet& alphabet) {
  actions_ = {Action::copy(), Action::del(), Action::end()};
  for (char32_t c : alphabet.surface_chars()) {
    insert_ids_.emplace(c, static_cast<ActionId>(actions_.size()));
    actions_.push_back(Action::insert(c));
  }
}

std::optional<ActionId> ActionVocab::find(const Action& a) const {
  switch (a.kind) {
    case ActionKind::Copy:
      return kCopy;
    case ActionKind::Delete:
      return kDelete;
    case ActionKind::End:
      return kEnd;
    case ActionKind::Insert: {
      auto it = insert_ids_.find(a.ch);
      if (it == insert_ids_.end()) return std::nullopt;
      return it->second;
    }
  }
  return std::nullopt;
}

ActionId ActionVocab::id(const Action& a) const {
  auto found = find(a);
  if (!found) throw UsageError("action " + to_string(a) + " is not in the vocabulary");
  return *found;
}

FeatureVocab::FeatureVocab(std::vector<std::string> features) {
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());
  names_ = std::move(features);
  for (std::size_t k = 0; k < names_.size(); ++k) {
    ids_.emplace(names_[k], static_cast<int>(k) + 1);
  }
}

int FeatureVocab::id(std::string_view feature) const {
  auto it = ids_.find(std::string(feature));
  return it == ids_.end() ? 0 : it->second;
}

MorphFeatures encode_features(const std::vector<std::string>& raw,
                              const FeatureVocab& vocab,
                              std::size_t& unknown_tally) {
  MorphFeatures e;
  e.bits.assign(vocab.size(), 0);
  for (const auto& f : raw) {
    const int h = vocab.id(f);
    if (h == 0) {
      ++unknown_tally;
    } else {
      e.bits[h - 1] = 1;
    }
  }
  return e;
}

MorphFeatures encode_features(const std::vector<std::string>& raw,
                              const FeatureVocab& vocab) {
  std::size_t ignored = 0;
  return encode_features(raw, vocab, ignored);
}

Vocabularies build_vocabs(const std::vector<Sample>& samples) {
  if (samples.empty()) throw ConfigError("cannot build vocabularies from zero samples");
  std::set<char32_t> chars;
  std::set<std::string> feats;
  for (const auto& s : samples) {
    chars.insert(s.x.begin(), s.x.end());
    if (s.y) chars.insert(s.y->begin(), s.y->end());
    feats.insert(s.features.begin(), s.features.end());
  }
  Vocabularies v;
  v.alphabet = Alphabet({chars.begin(), chars.end()});
  v.actions = ActionVocab(v.alphabet);
  v.features = FeatureVocab({feats.begin(), feats.end()});
  return v;
}

std::string to_string(Objective o) {
  switch (o) {
    case Objective::Mle:
      return "mle";
    case Objective::IlNll:
      return "il-nll";
    case Objective::IlSoftmaxMargin:
      return "il-softmax-margin";
    case Objective::Mrt:
      return "mrt";
  }
  return "?";
}

Objective parse_objective(std::string_view name) {
  if (name == "mle") return Objective::Mle;
  if (name == "il-nll") return Objective::IlNll;
  if (name == "il-softmax-margin" || name == "il-sm") return Objective::IlSoftmaxMargin;
  if (name == "mrt") return Objective::Mrt;
  throw ConfigError("unknown objective '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(beta >= 1, "beta must be >= 1");
  require(rollin_k > 0, "rollin_k must be positive");
  require(rollout_mix_p >= 0 && rollout_mix_p <= 1, "rollout_mix_p must lie in [0,1]");
  require(beam_width >= 1, "beam_width must be >= 1");
  require(char_dim >= 1 && feat_dim >= 1 && hidden_dim >= 1, "dimensions must be positive");
  require(max_actions_slack >= 1, "max_actions_slack must be positive");
  require(patience >= 1 && max_epochs >= 1, "patience and max_epochs must be positive");
  require(mrt_lambda >= 0 && mrt_lambda <= 1, "mrt_lambda must lie in [0,1]");
  require(mrt_max_samples >= 1, "mrt_max_samples must be positive");
  require(mrt_alpha > 0, "mrt_alpha must be positive");
}

}  // namespace mtrans
