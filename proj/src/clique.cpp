#include "slim/clique.hpp"

#include <algorithm>
#include <bit>

namespace slim {

int AdjacencyGraph::degree(int i) const {
  int d = 0;
  for (int w = 0; w < words_; ++w) d += std::popcount(rows_[size_t(i) * words_ + w]);
  return d;
}

namespace {

using Bits = std::vector<uint64_t>;

struct Searcher {
  const AdjacencyGraph& g;
  int words;
  std::vector<int> best;
  std::vector<int> current;
  // scratch buffers reused across recursion levels
  std::vector<int> order_buf;
  std::vector<int> color_buf;

  explicit Searcher(const AdjacencyGraph& graph) : g(graph), words(graph.words()) {}

  void intersect(const Bits& a, const uint64_t* row, Bits& out) const {
    out.resize(words);
    for (int w = 0; w < words; ++w) out[w] = a[w] & row[w];
  }

  static bool test(const Bits& b, int i) { return (b[i / 64] >> (i % 64)) & 1; }
  static void clear(Bits& b, int i) { b[i / 64] &= ~(uint64_t(1) << (i % 64)); }

  /// Greedy coloring of the candidate set; emits vertices ordered by color
  /// so the bound |clique| + color(v) prunes late branches first.
  void color_sort(const Bits& cand, std::vector<int>& order, std::vector<int>& colors) const {
    order.clear();
    colors.clear();
    Bits uncolored = cand;
    int color = 0;
    while (true) {
      bool any = false;
      Bits avail = uncolored;
      ++color;
      for (int w = 0; w < (int)avail.size(); ++w) {
        while (avail[w]) {
          const int v = w * 64 + std::countr_zero(avail[w]);
          order.push_back(v);
          colors.push_back(color);
          clear(uncolored, v);
          clear(avail, v);
          // remove neighbors of v from this color class
          const uint64_t* row = g.row(v);
          for (int w2 = 0; w2 < words; ++w2) avail[w2] &= ~row[w2];
          any = true;
        }
      }
      if (!any) break;
    }
  }

  void expand(const Bits& cand) {
    std::vector<int> order, colors;
    color_sort(cand, order, colors);
    Bits rest = cand;
    for (int idx = int(order.size()) - 1; idx >= 0; --idx) {
      const int v = order[idx];
      if (int(current.size()) + colors[idx] <= int(best.size())) return;
      current.push_back(v);
      Bits next;
      intersect(rest, g.row(v), next);
      bool empty = true;
      for (uint64_t w : next)
        if (w) {
          empty = false;
          break;
        }
      if (empty) {
        if (current.size() > best.size()) best = current;
      } else {
        expand(next);
      }
      current.pop_back();
      clear(rest, v);
    }
  }
};

}  // namespace

std::vector<int> max_clique(const AdjacencyGraph& g) {
  const int n = g.size();
  if (n == 0) return {};
  Searcher s(g);
  Bits all((n + 63) / 64, 0);
  for (int i = 0; i < n; ++i) all[i / 64] |= uint64_t(1) << (i % 64);
  s.expand(all);
  std::sort(s.best.begin(), s.best.end());
  return s.best;
}

}  // namespace slim
