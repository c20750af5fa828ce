#pragma once

// Edit distance, completion-cost dynamic program and the expert policy.

#include <string>
#include <string_view>
#include <vector>

#include "mtrans/core.hpp"
#include "mtrans/transition.hpp"

namespace mtrans {

// Unit-cost Levenshtein distance.
int levenshtein(std::u32string_view a, std::u32string_view b);

// C[i][j]: least number of edits that emits y*[j:] (0-based j) while
// consuming x from 1-based buffer position i, then END.
class CompletionTable {
 public:
  CompletionTable(int n, int m, int i0, int j0);

  int n() const { return n_; }
  int m() const { return m_; }
  int i0() const { return i0_; }
  int j0() const { return j0_; }
  // i in [i0, n+1], j in [j0, m]. Throws UsageError outside that range.
  int at(int i, int j) const;
  int& mut(int i, int j) { return cells_[index(i, j)]; }

 private:
  std::size_t index(int i, int j) const;

  int n_, m_, i0_, j0_;
  std::vector<int> cells_;
};

// Throws UsageError unless 1 <= i0 <= n+1 and 0 <= j0 <= |y*|.
CompletionTable completion_costs(const std::u32string& x, int i0, const std::u32string& y_star,
                                 int j0);

// Number of target characters matched so far as a prefix.
struct ExpertState {
  int j = 0;
  friend bool operator==(const ExpertState&, const ExpertState&) = default;
};

ExpertState advance_pointer(ExpertState es, char32_t emitted, const std::u32string& y_star);

// Pointer after `a` is applied at `s`.
ExpertState advance_pointer(ExpertState es, const EditState& s, const Action& a,
                            const std::u32string& y_star);

// Dynamic oracle for one (x, y*) pair. The table is built once and covers
// every configuration reachable from the initial state.
class Expert {
 public:
  Expert(std::u32string x, std::u32string y_star);

  const std::u32string& x() const { return x_; }
  const std::u32string& target() const { return y_; }
  const CompletionTable& table() const { return table_; }
  int completion_cost(int i, int j) const { return table_.at(i, j); }
  // Minimal total edit cost from the initial state.
  int optimal_cost() const { return table_.at(1, 0); }

  // Every valid action that reaches the least completion cost. Never
  // proposes emitting a character other than y*[j]. Throws UsageError on
  // a terminal state.
  std::vector<Action> expert_actions(const EditState& s, ExpertState es) const;

  // True when `a` raises the least Levenshtein distance still attainable:
  // a wrong emission, an emission past the end of y*, or END with target
  // characters still missing.
  bool increases_distance(const EditState& s, ExpertState es, const Action& a) const;

  // Least completion cost after applying `a`, or -1 when `a` is not an
  // expert candidate (a wrong emission or premature END).
  int cost_after(const EditState& s, ExpertState es, const Action& a) const;

 private:
  std::u32string x_;
  std::u32string y_;
  CompletionTable table_;
};

// beta * levenshtein(replay, y*) + edit cost. Throws UsageError on an
// incomplete sequence.
long sequence_loss(const std::vector<Action>& actions, const std::u32string& x,
                   const std::u32string& y_star, int beta);

// Deterministic expert derivation, ties broken COPY > DELETE > INSERT > END.
std::vector<Action> derive_static_actions(const std::u32string& x, const std::u32string& y_star);

}  // namespace mtrans
