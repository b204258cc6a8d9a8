#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rgat/rng.hpp"

namespace rgat {

// Relation label inventory. Four reserved ids come first and are stable
// across save/load: NONE marks non-edges in the label matrix, SELF labels
// self-loops, REMOVED replaces ablated labels, UNK absorbs labels unseen at
// training time.
class RelationVocab {
 public:
  static constexpr int kNone = 0;
  static constexpr int kSelf = 1;
  static constexpr int kRemoved = 2;
  static constexpr int kUnk = 3;
  static constexpr int kFirstRegular = 4;

  RelationVocab();

  // rebuilds a saved vocabulary; the reserved prefix must be intact
  static RelationVocab from_labels(std::vector<std::string> labels);

  int add(std::string_view label);        // existing id or a fresh one
  int id(std::string_view label) const;   // UNK when unknown
  int require(std::string_view label) const;  // throws when unknown
  const std::string& label(int id) const;
  int size() const { return static_cast<int>(labels_.size()); }
  std::vector<int> regular_ids() const;   // all non-reserved ids
  const std::vector<std::string>& labels() const { return labels_; }
  static bool reserved(int id) { return id >= 0 && id < kFirstRegular; }

 private:
  std::vector<std::string> labels_;
};

// Undirected typed dependency graph over a sentence: symmetric 0/1 adjacency
// with self-loops and a symmetric label-id matrix (NONE off the edge set).
struct DepGraph {
  int n = 0;
  std::vector<uint8_t> adj;   // n*n, row-major
  std::vector<int> labels;    // n*n, row-major
  std::string label_vocab_ref;

  bool edge(int i, int j) const { return adj[static_cast<size_t>(i) * n + j]; }
  int label(int i, int j) const {
    return labels[static_cast<size_t>(i) * n + j];
  }
  void set_edge(int i, int j, int label_id);  // both directions
  int undirected_edge_count() const;          // off-diagonal, each edge once

  // throws unless symmetric, self-looped, and label/adjacency consistent
  void check_invariants() const;
};

// Builds the graph from a single-rooted 1-based head array (0 = root):
// arcs are symmetrized with the arc label on both directions, the diagonal
// gets SELF, the root contributes no extra edge. Rejects multiple/zero
// roots, out-of-range heads and cycles.
DepGraph build_graph(const std::vector<int>& heads,
                     const std::vector<std::string>& labels,
                     RelationVocab& vocab, bool grow_vocab = true);

// Uniform random labeled spanning tree (Pruefer sequence for n >= 3), edge
// labels uniform over the vocab's non-reserved ids, then symmetrized with
// SELF loops. Deterministic in the seed.
DepGraph random_tree(int n, const RelationVocab& vocab, uint64_t seed);

// Reassigns the existing non-SELF edge labels by a uniform random
// permutation over the undirected edge list (edges ordered by (i,j), i<j,
// shuffled with Rng::shuffle). Adjacency and label multiset are preserved.
DepGraph permute_labels(const DepGraph& g, uint64_t seed);

// Replaces every occurrence of label_id by REMOVED, keeping all edges.
// Reserved ids are rejected.
DepGraph mask_label(const DepGraph& g, int label_id);

// Deletes the off-diagonal edges carrying label_id instead of relabeling
// them; the result may be disconnected. Used by the label-ablation harness
// when edge deletion is requested.
DepGraph remove_label_edges(const DepGraph& g, int label_id);

}  // namespace rgat
