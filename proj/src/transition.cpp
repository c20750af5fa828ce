#include "mtrans/transition.hpp"

#include "mtrans/errors.hpp"

namespace mtrans {

EditState initial_state(const std::u32string& x, int action_slack) {
  if (x.empty()) throw InputError("transduction input must be non-empty");
  EditState s;
  s.x = x;
  s.max_actions = static_cast<int>(x.size()) + action_slack;
  return s;
}

ValidKinds valid_kinds(const EditState& s) {
  if (s.terminal) throw UsageError("no actions are valid in a terminal state");
  ValidKinds v;
  if (s.at_sentinel()) {
    v.end = true;
    v.insert = !s.at_cap();
  } else {
    v.copy = true;
    v.del = true;
    v.insert = !s.at_cap();
  }
  return v;
}

bool is_valid(const EditState& s, const Action& a) {
  if (s.terminal) return false;
  const auto v = valid_kinds(s);
  switch (a.kind) {
    case ActionKind::Copy:
      return v.copy;
    case ActionKind::Delete:
      return v.del;
    case ActionKind::Insert:
      return v.insert;
    case ActionKind::End:
      return v.end;
  }
  return false;
}

std::vector<ActionId> valid_actions(const EditState& s, const ActionVocab& vocab) {
  const auto v = valid_kinds(s);
  std::vector<ActionId> ids;
  if (v.copy) ids.push_back(ActionVocab::kCopy);
  if (v.del) ids.push_back(ActionVocab::kDelete);
  if (v.end) ids.push_back(ActionVocab::kEnd);
  if (v.insert) {
    for (ActionId a = ActionVocab::kFirstInsert; a < vocab.size(); ++a) ids.push_back(a);
  }
  return ids;
}

std::vector<std::uint8_t> valid_mask(const EditState& s, const ActionVocab& vocab) {
  std::vector<std::uint8_t> mask(vocab.size(), 0);
  for (ActionId a : valid_actions(s, vocab)) mask[a] = 1;
  return mask;
}

void EditState::advance(const Action& a) {
  if (!is_valid(*this, a)) {
    throw UsageError("action " + to_string(a) + " is not valid at buffer position " +
                     std::to_string(i));
  }
  switch (a.kind) {
    case ActionKind::Copy:
      out.push_back(top());
      ++i;
      ++cost;
      break;
    case ActionKind::Delete:
      ++i;
      ++cost;
      break;
    case ActionKind::Insert:
      out.push_back(a.ch);
      ++cost;
      break;
    case ActionKind::End:
      terminal = true;
      break;
  }
  history.push_back(a);
}

EditState apply(const EditState& s, const Action& a) {
  EditState next = s;
  next.advance(a);
  return next;
}

std::u32string run_actions(const std::u32string& x, const std::vector<Action>& actions,
                           int action_slack) {
  auto s = initial_state(x, action_slack);
  for (const auto& a : actions) s.advance(a);
  if (!s.terminal) throw UsageError("action sequence does not end with END");
  return s.out;
}

int edit_cost(const std::vector<Action>& actions) {
  int cost = 0;
  for (const auto& a : actions) cost += a.kind == ActionKind::End ? 0 : 1;
  return cost;
}

}  // namespace mtrans
