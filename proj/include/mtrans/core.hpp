#pragma once

// Vocabularies, samples and run configuration shared by every module.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mtrans {

// Dense id into an ActionVocab.
using ActionId = std::int32_t;

enum class ActionKind : std::uint8_t { Copy, Delete, Insert, End };

struct Action {
  ActionKind kind = ActionKind::Copy;
  char32_t ch = 0;  // only meaningful for Insert

  static constexpr Action copy() { return {ActionKind::Copy, 0}; }
  static constexpr Action del() { return {ActionKind::Delete, 0}; }
  static constexpr Action end() { return {ActionKind::End, 0}; }
  static constexpr Action insert(char32_t c) { return {ActionKind::Insert, c}; }

  bool is_emission() const {
    return kind == ActionKind::Copy || kind == ActionKind::Insert;
  }
  bool consumes_buffer() const {
    return kind == ActionKind::Copy || kind == ActionKind::Delete;
  }

  friend bool operator==(const Action&, const Action&) = default;
};

// Token form used in logs and oracle dumps: COPY, DELETE, END, INS(c).
std::string to_string(const Action& a);
std::string to_string(const std::vector<Action>& actions);
Action parse_action(std::string_view token);
std::vector<Action> parse_actions(std::string_view text);

// Character inventory: union of input and output characters, plus two
// reserved ids that never surface in output.
class Alphabet {
 public:
  static constexpr int kSentinel = 0;
  static constexpr int kUnk = 1;
  static constexpr int kFirstSurface = 2;

  Alphabet() = default;
  // Characters are deduplicated and ordered by code point.
  explicit Alphabet(std::vector<char32_t> chars);

  int size() const { return static_cast<int>(id_to_char_.size()); }
  int surface_size() const { return size() - kFirstSurface; }

  bool contains(char32_t c) const { return char_to_id_.count(c) != 0; }
  // UNK for characters not seen when the alphabet was built.
  int id(char32_t c) const;
  // Throws UsageError for the reserved ids.
  char32_t character(int id) const;
  const std::vector<char32_t>& surface_chars() const { return surface_; }

  friend bool operator==(const Alphabet& a, const Alphabet& b) {
    return a.surface_ == b.surface_;
  }

 private:
  std::unordered_map<char32_t, int> char_to_id_;
  std::vector<char32_t> id_to_char_;
  std::vector<char32_t> surface_;
};

// COPY, DELETE, END, then one INSERT per surface character in alphabet
// order, so INSERT(c) has id kFirstInsert + (alphabet id of c - 2).
class ActionVocab {
 public:
  static constexpr ActionId kCopy = 0;
  static constexpr ActionId kDelete = 1;
  static constexpr ActionId kEnd = 2;
  static constexpr ActionId kFirstInsert = 3;

  ActionVocab() = default;
  explicit ActionVocab(const Alphabet& alphabet);

  int size() const { return static_cast<int>(actions_.size()); }
  const Action& action(ActionId id) const { return actions_.at(id); }
  // Throws UsageError for INSERT of a character outside the alphabet.
  ActionId id(const Action& a) const;
  std::optional<ActionId> find(const Action& a) const;
  // Alphabet id that embeds this action when it is an INSERT.
  static int insert_char_id(ActionId id) {
    return id - kFirstInsert + Alphabet::kFirstSurface;
  }

 private:
  std::vector<Action> actions_;
  std::unordered_map<char32_t, ActionId> insert_ids_;
};

// Feature strings mapped to slots 1..H; slot 0 is the "feature absent"
// embedding and never named.
class FeatureVocab {
 public:
  FeatureVocab() = default;
  explicit FeatureVocab(std::vector<std::string> features);

  int size() const { return static_cast<int>(names_.size()); }
  // 0 when unknown.
  int id(std::string_view feature) const;
  const std::vector<std::string>& names() const { return names_; }

  friend bool operator==(const FeatureVocab& a, const FeatureVocab& b) {
    return a.names_ == b.names_;
  }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> names_;
};

// n-hot encoding of a feature bundle; bits[h-1] is slot h.
struct MorphFeatures {
  std::vector<std::uint8_t> bits;

  int size() const { return static_cast<int>(bits.size()); }
  friend bool operator==(const MorphFeatures&, const MorphFeatures&) = default;
};

MorphFeatures encode_features(const std::vector<std::string>& raw,
                              const FeatureVocab& vocab,
                              std::size_t& unknown_tally);
MorphFeatures encode_features(const std::vector<std::string>& raw,
                              const FeatureVocab& vocab);

struct Sample {
  std::u32string x;
  std::vector<std::string> features;  // raw feature strings, input order
  std::optional<std::u32string> y;
};

struct Vocabularies {
  Alphabet alphabet;
  ActionVocab actions;
  FeatureVocab features;
};

// Throws ConfigError on an empty sample list.
Vocabularies build_vocabs(const std::vector<Sample>& samples);

enum class Objective { Mle, IlNll, IlSoftmaxMargin, Mrt };

std::string to_string(Objective o);
// Accepts mle, il-nll, il-softmax-margin (alias il-sm), mrt.
Objective parse_objective(std::string_view name);

struct TrainConfig {
  int beta = 5;
  double rollin_k = 12.0;
  double rollout_mix_p = 0.5;
  Objective objective = Objective::IlNll;
  int beam_width = 4;
  int char_dim = 100;
  int feat_dim = 20;
  int hidden_dim = 200;
  // Action cap per sample is |x| + max_actions_slack.
  int max_actions_slack = 50;
  int patience = 10;
  int max_epochs = 60;
  std::uint64_t seed = 1;
  double mrt_lambda = 0.5;
  int mrt_max_samples = 20;
  double mrt_alpha = 1.0;

  // Throws ConfigError when a field is out of range.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

}  // namespace mtrans
