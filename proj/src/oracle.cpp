#include "mtrans/oracle.hpp"

#include <algorithm>
#include <limits>

#include "mtrans/errors.hpp"

namespace mtrans {

int levenshtein(std::u32string_view a, std::u32string_view b) {
  std::vector<int> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

CompletionTable::CompletionTable(int n, int m, int i0, int j0)
    : n_(n), m_(m), i0_(i0), j0_(j0) {
  cells_.assign(static_cast<std::size_t>(n - i0 + 2) * (m - j0 + 1), 0);
}

std::size_t CompletionTable::index(int i, int j) const {
  if (i < i0_ || i > n_ + 1 || j < j0_ || j > m_) {
    throw UsageError("completion table index (" + std::to_string(i) + ", " +
                     std::to_string(j) + ") out of range");
  }
  return static_cast<std::size_t>(i - i0_) * (m_ - j0_ + 1) + (j - j0_);
}

int CompletionTable::at(int i, int j) const { return cells_[index(i, j)]; }

CompletionTable completion_costs(const std::u32string& x, int i0, const std::u32string& y_star,
                                 int j0) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(y_star.size());
  if (i0 < 1 || i0 > n + 1 || j0 < 0 || j0 > m) {
    throw UsageError("completion_costs start position out of range");
  }
  CompletionTable c(n, m, i0, j0);
  for (int i = n + 1; i >= i0; --i) {
    for (int j = m; j >= j0; --j) {
      if (i == n + 1 && j == m) {
        c.mut(i, j) = 0;
        continue;
      }
      int best = std::numeric_limits<int>::max();
      if (i <= n) {
        if (j < m && x[i - 1] == y_star[j]) best = std::min(best, 1 + c.at(i + 1, j + 1));
        best = std::min(best, 1 + c.at(i + 1, j));
      }
      if (j < m) best = std::min(best, 1 + c.at(i, j + 1));
      c.mut(i, j) = best;
    }
  }
  return c;
}

ExpertState advance_pointer(ExpertState es, char32_t emitted, const std::u32string& y_star) {
  if (es.j < static_cast<int>(y_star.size()) && y_star[es.j] == emitted) ++es.j;
  return es;
}

ExpertState advance_pointer(ExpertState es, const EditState& s, const Action& a,
                            const std::u32string& y_star) {
  switch (a.kind) {
    case ActionKind::Copy:
      return advance_pointer(es, s.top(), y_star);
    case ActionKind::Insert:
      return advance_pointer(es, a.ch, y_star);
    default:
      return es;
  }
}

Expert::Expert(std::u32string x, std::u32string y_star)
    : x_(std::move(x)), y_(std::move(y_star)), table_(completion_costs(x_, 1, y_, 0)) {}

bool Expert::increases_distance(const EditState& s, ExpertState es, const Action& a) const {
  const int m = static_cast<int>(y_.size());
  switch (a.kind) {
    case ActionKind::Copy:
      return es.j >= m || s.top() != y_[es.j];
    case ActionKind::Insert:
      return es.j >= m || a.ch != y_[es.j];
    case ActionKind::End:
      return es.j < m;
    case ActionKind::Delete:
      return false;
  }
  return false;
}

int Expert::cost_after(const EditState& s, ExpertState es, const Action& a) const {
  if (increases_distance(s, es, a)) return -1;
  switch (a.kind) {
    case ActionKind::Copy:
    case ActionKind::Insert: {
      const int i = a.kind == ActionKind::Copy ? s.i + 1 : s.i;
      return 1 + table_.at(i, es.j + 1);
    }
    case ActionKind::Delete:
      return 1 + table_.at(s.i + 1, es.j);
    case ActionKind::End:
      return 0;
  }
  return -1;
}

std::vector<Action> Expert::expert_actions(const EditState& s, ExpertState es) const {
  const auto v = valid_kinds(s);
  const int m = static_cast<int>(y_.size());
  std::vector<Action> candidates;
  if (v.copy) candidates.push_back(Action::copy());
  if (v.del) candidates.push_back(Action::del());
  if (v.insert && es.j < m) candidates.push_back(Action::insert(y_[es.j]));
  if (v.end) candidates.push_back(Action::end());

  std::vector<Action> best;
  int best_cost = std::numeric_limits<int>::max();
  for (const auto& a : candidates) {
    const int c = cost_after(s, es, a);
    if (c < 0) continue;
    if (c < best_cost) {
      best_cost = c;
      best.clear();
    }
    if (c == best_cost) best.push_back(a);
  }
  // Only reachable at the action cap with a missing target suffix: END is
  // then the sole valid action.
  if (best.empty()) best.push_back(candidates.front());
  return best;
}

long sequence_loss(const std::vector<Action>& actions, const std::u32string& x,
                   const std::u32string& y_star, int beta) {
  const auto y = run_actions(x, actions, static_cast<int>(actions.size()) + 1);
  return static_cast<long>(beta) * levenshtein(y, y_star) + edit_cost(actions);
}

std::vector<Action> derive_static_actions(const std::u32string& x, const std::u32string& y_star) {
  Expert expert(x, y_star);
  auto s = initial_state(x, static_cast<int>(y_star.size()) + 1);
  ExpertState es;
  while (!s.terminal) {
    // expert_actions lists candidates in COPY, DELETE, INSERT, END order.
    const Action a = expert.expert_actions(s, es).front();
    es = advance_pointer(es, s, a, y_star);
    s.advance(a);
  }
  return s.history;
}

}  // namespace mtrans
