#include "rgat/depgraph.hpp"

#include <algorithm>
#include <stdexcept>

namespace rgat {

RelationVocab::RelationVocab() : labels_{"<none>", "<self>", "<removed>", "<unk>"} {}

RelationVocab RelationVocab::from_labels(std::vector<std::string> labels) {
  RelationVocab v;
  if (labels.size() < static_cast<size_t>(kFirstRegular) ||
      !std::equal(v.labels_.begin(), v.labels_.end(), labels.begin()))
    throw std::invalid_argument("relation vocabulary: reserved prefix damaged");
  v.labels_ = std::move(labels);
  return v;
}

int RelationVocab::add(std::string_view label) {
  for (size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return static_cast<int>(i);
  labels_.emplace_back(label);
  return static_cast<int>(labels_.size()) - 1;
}

int RelationVocab::id(std::string_view label) const {
  for (size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return static_cast<int>(i);
  return kUnk;
}

int RelationVocab::require(std::string_view label) const {
  int i = id(label);
  if (i == kUnk && label != labels_[kUnk])
    throw std::invalid_argument("unknown relation label: " + std::string(label));
  return i;
}

const std::string& RelationVocab::label(int id) const {
  if (id < 0 || id >= size())
    throw std::invalid_argument("relation id out of range: " + std::to_string(id));
  return labels_[static_cast<size_t>(id)];
}

std::vector<int> RelationVocab::regular_ids() const {
  std::vector<int> ids;
  for (int i = kFirstRegular; i < size(); ++i) ids.push_back(i);
  return ids;
}

void DepGraph::set_edge(int i, int j, int label_id) {
  adj[static_cast<size_t>(i) * n + j] = 1;
  adj[static_cast<size_t>(j) * n + i] = 1;
  labels[static_cast<size_t>(i) * n + j] = label_id;
  labels[static_cast<size_t>(j) * n + i] = label_id;
}

int DepGraph::undirected_edge_count() const {
  int count = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (edge(i, j)) ++count;
  return count;
}

void DepGraph::check_invariants() const {
  if (static_cast<int64_t>(adj.size()) != static_cast<int64_t>(n) * n ||
      adj.size() != labels.size())
    throw std::runtime_error("depgraph: malformed matrices");
  for (int i = 0; i < n; ++i) {
    if (!edge(i, i) || label(i, i) != RelationVocab::kSelf)
      throw std::runtime_error("depgraph: missing SELF loop at node " +
                               std::to_string(i));
    for (int j = 0; j < n; ++j) {
      if (edge(i, j) != edge(j, i) || label(i, j) != label(j, i))
        throw std::runtime_error("depgraph: asymmetry at (" +
                                 std::to_string(i) + "," + std::to_string(j) +
                                 ")");
      if (edge(i, j) && label(i, j) == RelationVocab::kNone)
        throw std::runtime_error("depgraph: edge without label");
      if (!edge(i, j) && label(i, j) != RelationVocab::kNone)
        throw std::runtime_error("depgraph: label without edge");
    }
  }
}

namespace {

DepGraph empty_graph(int n) {
  DepGraph g;
  g.n = n;
  g.adj.assign(static_cast<size_t>(n) * n, 0);
  g.labels.assign(static_cast<size_t>(n) * n, RelationVocab::kNone);
  return g;
}

void add_self_loops(DepGraph& g) {
  for (int i = 0; i < g.n; ++i) {
    g.adj[static_cast<size_t>(i) * g.n + i] = 1;
    g.labels[static_cast<size_t>(i) * g.n + i] = RelationVocab::kSelf;
  }
}

}  // namespace

DepGraph build_graph(const std::vector<int>& heads,
                     const std::vector<std::string>& labels,
                     RelationVocab& vocab, bool grow_vocab) {
  int n = static_cast<int>(heads.size());
  if (n == 0) throw std::invalid_argument("build_graph: empty sentence");
  if (labels.size() != heads.size())
    throw std::invalid_argument("build_graph: heads/labels length mismatch");

  int roots = 0;
  for (int i = 0; i < n; ++i) {
    if (heads[i] < 0 || heads[i] > n)
      throw std::invalid_argument("build_graph: head " +
                                  std::to_string(heads[i]) + " of token " +
                                  std::to_string(i) + " out of range [0," +
                                  std::to_string(n) + "]");
    if (heads[i] == 0) ++roots;
    if (heads[i] == i + 1)
      throw std::invalid_argument("build_graph: token " + std::to_string(i) +
                                  " is its own head");
  }
  if (roots != 1)
    throw std::invalid_argument("build_graph: expected exactly one root, got " +
                                std::to_string(roots));

  // walk each parent chain; revisiting an in-progress chain means a cycle
  std::vector<int> state(static_cast<size_t>(n), 0);  // 0 new, 1 open, 2 done
  for (int i = 0; i < n; ++i) {
    int v = i;
    std::vector<int> chain;
    while (v >= 0 && state[static_cast<size_t>(v)] == 0) {
      state[static_cast<size_t>(v)] = 1;
      chain.push_back(v);
      v = heads[static_cast<size_t>(v)] - 1;  // -1 once we hit the root
    }
    if (v >= 0 && state[static_cast<size_t>(v)] == 1)
      throw std::invalid_argument("build_graph: cycle through token " +
                                  std::to_string(v));
    for (int u : chain) state[static_cast<size_t>(u)] = 2;
  }

  DepGraph g = empty_graph(n);
  for (int i = 0; i < n; ++i) {
    if (heads[i] == 0) continue;  // the root arc adds no edge
    int label_id = grow_vocab ? vocab.add(labels[static_cast<size_t>(i)])
                              : vocab.id(labels[static_cast<size_t>(i)]);
    g.set_edge(i, heads[i] - 1, label_id);
  }
  add_self_loops(g);
  g.check_invariants();
  return g;
}

DepGraph random_tree(int n, const RelationVocab& vocab, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_tree: need n >= 1");
  std::vector<int> regular = vocab.regular_ids();
  if (regular.empty())
    throw std::invalid_argument("random_tree: vocabulary has no regular labels");
  Rng rng(seed);
  Rng label_rng = rng.derive("labels");

  DepGraph g = empty_graph(n);
  auto draw_label = [&] {
    return regular[label_rng.uniform_int(regular.size())];
  };

  if (n >= 3) {
    // decode a uniform Pruefer sequence: each sequence of length n-2 over
    // [0,n) corresponds to exactly one labeled tree
    std::vector<int> pruefer(static_cast<size_t>(n - 2));
    for (int& x : pruefer) x = static_cast<int>(rng.uniform_int(n));
    std::vector<int> degree(static_cast<size_t>(n), 1);
    for (int x : pruefer) degree[static_cast<size_t>(x)]++;
    std::vector<int> leaves;
    for (int i = 0; i < n; ++i)
      if (degree[static_cast<size_t>(i)] == 1) leaves.push_back(i);
    std::make_heap(leaves.begin(), leaves.end(), std::greater<>());
    for (int x : pruefer) {
      std::pop_heap(leaves.begin(), leaves.end(), std::greater<>());
      int leaf = leaves.back();
      leaves.pop_back();
      g.set_edge(leaf, x, draw_label());
      if (--degree[static_cast<size_t>(x)] == 1) {
        leaves.push_back(x);
        std::push_heap(leaves.begin(), leaves.end(), std::greater<>());
      }
    }
    std::pop_heap(leaves.begin(), leaves.end(), std::greater<>());
    int a = leaves.back();
    leaves.pop_back();
    g.set_edge(a, leaves.front(), draw_label());
  } else if (n == 2) {
    g.set_edge(0, 1, draw_label());
  }
  add_self_loops(g);
  g.check_invariants();
  return g;
}

DepGraph permute_labels(const DepGraph& g, uint64_t seed) {
  DepGraph out = g;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> edge_labels;
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j)
      if (g.edge(i, j)) {
        edges.emplace_back(i, j);
        edge_labels.push_back(g.label(i, j));
      }
  Rng rng(seed);
  rng.shuffle(edge_labels);
  for (size_t e = 0; e < edges.size(); ++e)
    out.set_edge(edges[e].first, edges[e].second, edge_labels[e]);
  out.check_invariants();
  return out;
}

DepGraph mask_label(const DepGraph& g, int label_id) {
  if (RelationVocab::reserved(label_id))
    throw std::invalid_argument("mask_label: cannot mask reserved label " +
                                std::to_string(label_id));
  DepGraph out = g;
  for (int& l : out.labels)
    if (l == label_id) l = RelationVocab::kRemoved;
  out.check_invariants();
  return out;
}

DepGraph remove_label_edges(const DepGraph& g, int label_id) {
  if (RelationVocab::reserved(label_id))
    throw std::invalid_argument(
        "remove_label_edges: cannot remove reserved label " +
        std::to_string(label_id));
  DepGraph out = g;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (i != j && g.edge(i, j) && g.label(i, j) == label_id) {
        out.adj[static_cast<size_t>(i) * g.n + j] = 0;
        out.labels[static_cast<size_t>(i) * g.n + j] = RelationVocab::kNone;
      }
  out.check_invariants();
  return out;
}

}  // namespace rgat
