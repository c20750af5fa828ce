#include "brute_force.hpp"

#include <algorithm>
#include <limits>

namespace mtrans::testing {

namespace {

int lev_rec(const char32_t* a, std::size_t na, const char32_t* b, std::size_t nb) {
  if (na == 0) return static_cast<int>(nb);
  if (nb == 0) return static_cast<int>(na);
  const int sub = lev_rec(a + 1, na - 1, b + 1, nb - 1) + (a[0] == b[0] ? 0 : 1);
  const int del = lev_rec(a + 1, na - 1, b, nb) + 1;
  const int ins = lev_rec(a, na, b + 1, nb - 1) + 1;
  return std::min({sub, del, ins});
}

std::u32string distinct_chars(const std::u32string& s) {
  std::u32string out;
  for (char32_t c : s)
    if (out.find(c) == std::u32string::npos) out.push_back(c);
  return out;
}

struct Walk {
  const std::u32string& x;
  const std::u32string& y;
  std::u32string chars;
  bool prune;
  Derivations d;

  void go(int i, std::u32string& out, int cost) {
    const int n = static_cast<int>(x.size());
    if (out.size() > y.size() || y.compare(0, out.size(), out) != 0) return;
    if (prune && d.min_cost >= 0 && cost >= d.min_cost) return;
    if (i == n + 1 && out == y) {
      ++d.count;
      if (d.min_cost < 0 || cost < d.min_cost) d.min_cost = cost;
    }
    if (i <= n) {
      out.push_back(x[i - 1]);
      go(i + 1, out, cost + 1);
      out.pop_back();
      go(i + 1, out, cost + 1);
    }
    for (char32_t c : chars) {
      out.push_back(c);
      go(i, out, cost + 1);
      out.pop_back();
    }
  }
};

}  // namespace

int brute_levenshtein(const std::u32string& a, const std::u32string& b) {
  return lev_rec(a.data(), a.size(), b.data(), b.size());
}

Derivations enumerate_derivations(const std::u32string& x, const std::u32string& y_star, int i,
                                  const std::u32string& out) {
  Walk w{x, y_star, distinct_chars(x + y_star), false, {}};
  std::u32string buf = out;
  w.go(i, buf, 0);
  return w.d;
}

int min_derivation_cost(const std::u32string& x, const std::u32string& y_star) {
  Walk w{x, y_star, distinct_chars(x + y_star), true, {}};
  std::u32string buf;
  w.go(1, buf, 0);
  return w.d.min_cost;
}

CompletionSearch::CompletionSearch(std::u32string x, std::u32string y_star,
                                   std::u32string alphabet, int beta, int max_len)
    : x_(std::move(x)), y_(std::move(y_star)), alphabet_(distinct_chars(alphabet + x_)),
      max_len_(max_len) {
  const int A = static_cast<int>(alphabet_.size());
  const int m = static_cast<int>(y_.size());
  // Breadth-first trie: parents precede children, so a reverse sweep visits
  // longer outputs first. Each node carries its Levenshtein row against y*.
  std::vector<int> length{0};
  std::vector<std::vector<int>> rows{{}};
  for (int j = 0; j <= m; ++j) rows[0].push_back(j);
  child_.assign(A, -1);
  for (int v = 0; v < static_cast<int>(length.size()); ++v) {
    if (length[v] == max_len_) continue;
    for (int c = 0; c < A; ++c) {
      const int u = static_cast<int>(length.size());
      child_[static_cast<std::size_t>(v) * A + c] = u;
      length.push_back(length[v] + 1);
      std::vector<int> row(m + 1);
      row[0] = length[v] + 1;
      for (int j = 1; j <= m; ++j) {
        row[j] = std::min({rows[v][j] + 1, row[j - 1] + 1,
                           rows[v][j - 1] + (alphabet_[c] == y_[j - 1] ? 0 : 1)});
      }
      rows.push_back(std::move(row));
      child_.resize(child_.size() + A, -1);
    }
  }
  nodes_ = static_cast<int>(length.size());

  const int n = static_cast<int>(x_.size());
  constexpr long kInf = std::numeric_limits<long>::max() / 4;
  value_.assign(static_cast<std::size_t>(n + 1) * nodes_, kInf);
  auto at = [&](int i, int v) -> long& { return value_[static_cast<std::size_t>(i - 1) * nodes_ + v]; };
  for (int i = n + 1; i >= 1; --i) {
    for (int v = nodes_ - 1; v >= 0; --v) {
      long best = kInf;
      if (i == n + 1) best = static_cast<long>(beta) * rows[v][m];
      if (i <= n) {
        best = std::min(best, 1 + at(i + 1, v));
        const int copy = child_[static_cast<std::size_t>(v) * A + alphabet_.find(x_[i - 1])];
        if (copy >= 0) best = std::min(best, 1 + at(i + 1, copy));
      }
      for (int c = 0; c < A; ++c) {
        const int u = child_[static_cast<std::size_t>(v) * A + c];
        if (u >= 0) best = std::min(best, 1 + at(i, u));
      }
      at(i, v) = best;
    }
  }
}

int CompletionSearch::node(const std::u32string& out) const {
  int v = 0;
  for (char32_t ch : out) {
    const auto c = alphabet_.find(ch);
    if (c == std::u32string::npos) return -1;
    v = child_[static_cast<std::size_t>(v) * alphabet_.size() + c];
    if (v < 0) return -1;
  }
  return v;
}

long CompletionSearch::value(int i, const std::u32string& out) const {
  const int v = node(out);
  if (v < 0 || i < 1 || i > static_cast<int>(x_.size()) + 1) return -1;
  return value_[static_cast<std::size_t>(i - 1) * nodes_ + v];
}

std::vector<std::u32string> all_strings(const std::u32string& alphabet, int min_len, int max_len) {
  std::vector<std::u32string> out;
  std::vector<std::u32string> layer{U""};
  for (int len = 0; len <= max_len; ++len) {
    if (len >= min_len) out.insert(out.end(), layer.begin(), layer.end());
    std::vector<std::u32string> next;
    for (const auto& s : layer)
      for (char32_t c : alphabet) next.push_back(s + c);
    layer = std::move(next);
  }
  return out;
}

}  // namespace mtrans::testing
