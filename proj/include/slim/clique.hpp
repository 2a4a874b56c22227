#pragma once

#include <cstdint>
#include <vector>

namespace slim {

/// Undirected simple graph over 0..n-1 with bitset adjacency rows.
class AdjacencyGraph {
 public:
  explicit AdjacencyGraph(int n = 0) { resize(n); }
  void resize(int n) {
    n_ = n;
    words_ = (n + 63) / 64;
    rows_.assign(size_t(n) * words_, 0);
  }
  int size() const { return n_; }
  void add_edge(int i, int j) {
    if (i == j) return;
    rows_[size_t(i) * words_ + j / 64] |= uint64_t(1) << (j % 64);
    rows_[size_t(j) * words_ + i / 64] |= uint64_t(1) << (i % 64);
  }
  bool has_edge(int i, int j) const {
    return (rows_[size_t(i) * words_ + j / 64] >> (j % 64)) & 1;
  }
  const uint64_t* row(int i) const { return rows_.data() + size_t(i) * words_; }
  int words() const { return words_; }
  int degree(int i) const;

 private:
  int n_ = 0;
  int words_ = 0;
  std::vector<uint64_t> rows_;
};

/// Exact maximum clique by branch and bound with a greedy coloring bound.
/// Deterministic: with the fixed search order the first maximum clique found
/// is returned. Empty graph yields an empty set.
std::vector<int> max_clique(const AdjacencyGraph& g);

}  // namespace slim
