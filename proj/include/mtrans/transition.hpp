#pragma once

// The edit transition system: a buffer over x·SENTINEL consumed left to
// right by COPY/DELETE, an append-only output, and END once only the
// sentinel remains.

#include <string>
#include <vector>

#include "mtrans/core.hpp"

namespace mtrans {

struct EditState {
  std::u32string x;
  int i = 1;  // 1-based buffer top; n+1 is the sentinel
  std::u32string out;
  std::vector<Action> history;
  int cost = 0;  // non-END actions taken
  bool terminal = false;
  int max_actions = 0;  // beyond this, only buffer-draining actions remain

  int n() const { return static_cast<int>(x.size()); }
  bool at_sentinel() const { return i == n() + 1; }
  bool at_cap() const { return static_cast<int>(history.size()) >= max_actions; }
  // The character under the buffer top; requires !at_sentinel().
  char32_t top() const { return x[i - 1]; }

  // In-place form of apply(); throws UsageError on an invalid action.
  void advance(const Action& a);
};

inline constexpr int kDefaultActionSlack = 50;

// Throws InputError on empty x.
EditState initial_state(const std::u32string& x, int action_slack = kDefaultActionSlack);

// Kinds of action currently allowed. INSERT stands for every INSERT(c).
struct ValidKinds {
  bool copy = false;
  bool del = false;
  bool insert = false;
  bool end = false;
};

// Throws UsageError on a terminal state.
ValidKinds valid_kinds(const EditState& s);
bool is_valid(const EditState& s, const Action& a);
// Valid action ids in ascending order.
std::vector<ActionId> valid_actions(const EditState& s, const ActionVocab& vocab);
// 0/1 per action id.
std::vector<std::uint8_t> valid_mask(const EditState& s, const ActionVocab& vocab);

EditState apply(const EditState& s, const Action& a);

// Replays a complete END-terminated sequence. Throws UsageError otherwise.
std::u32string run_actions(const std::u32string& x, const std::vector<Action>& actions,
                           int action_slack = kDefaultActionSlack);

// Edits in a sequence, END excluded.
int edit_cost(const std::vector<Action>& actions);

}  // namespace mtrans
