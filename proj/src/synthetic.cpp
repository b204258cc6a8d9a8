#include "rgat/synthetic.hpp"

#include <stdexcept>
#include <string>

#include "rgat/depgraph.hpp"

namespace rgat {

namespace {

// orient the undirected tree away from node 0, recording each node's parent
// edge label; node 0 becomes the root
void orient_tree(const DepGraph& g, std::vector<int>& heads,
                 std::vector<int>& parent_label) {
  int n = g.n;
  heads.assign(static_cast<size_t>(n), 0);
  parent_label.assign(static_cast<size_t>(n), -1);
  std::vector<char> seen(static_cast<size_t>(n), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < n; ++v) {
      if (v == u || !g.edge(u, v) || seen[static_cast<size_t>(v)]) continue;
      seen[static_cast<size_t>(v)] = 1;
      heads[static_cast<size_t>(v)] = u + 1;
      parent_label[static_cast<size_t>(v)] = g.label(u, v);
      stack.push_back(v);
    }
  }
}

// the arc between a and b exists in exactly one orientation
void set_edge_deprel(RawRecord& r, int a, int b, const std::string& label) {
  if (r.head[static_cast<size_t>(a)] == b + 1)
    r.deprel[static_cast<size_t>(a)] = label;
  else
    r.deprel[static_cast<size_t>(b)] = label;
}

}  // namespace

std::vector<RawRecord> gen_synthetic(int n_instances, const SynthOptions& opt,
                                     uint64_t seed) {
  if (n_instances < 1)
    throw std::invalid_argument("gen_synthetic: need at least one instance");
  if (opt.n_filler_labels < 1 || opt.n_words < 1 || opt.n_pos < 1)
    throw std::invalid_argument("gen_synthetic: bad inventory sizes");
  if (opt.min_tokens < 4 || opt.max_tokens < opt.min_tokens)
    throw std::invalid_argument(
        "gen_synthetic: need min_tokens >= 4 and max_tokens >= min_tokens");

  RelationVocab fillers;
  for (int i = 0; i < opt.n_filler_labels; ++i)
    fillers.add("fill_" + std::to_string(i));

  Rng base(seed);
  std::vector<RawRecord> out;
  out.reserve(static_cast<size_t>(n_instances));
  for (int idx = 0; idx < n_instances; ++idx) {
    Rng rng = base.derive("inst", static_cast<uint64_t>(idx));
    int n = opt.min_tokens +
            static_cast<int>(rng.uniform_int(
                static_cast<uint64_t>(opt.max_tokens - opt.min_tokens + 1)));
    int cls = static_cast<int>(rng.uniform_int(3));

    DepGraph g = random_tree(n, fillers, rng.derive("tree").seed());

    // the target needs two distinct neighbors; every tree with n >= 3 has
    // an internal node
    std::vector<int> internal;
    for (int v = 0; v < n; ++v) {
      int degree = 0;
      for (int u = 0; u < n; ++u)
        if (u != v && g.edge(v, u)) ++degree;
      if (degree >= 2) internal.push_back(v);
    }
    int target = internal[rng.uniform_int(internal.size())];
    std::vector<int> neighbors;
    for (int u = 0; u < n; ++u)
      if (u != target && g.edge(target, u)) neighbors.push_back(u);
    size_t cue_pick = rng.uniform_int(neighbors.size());
    size_t anchor_pick = rng.uniform_int(neighbors.size() - 1);
    if (anchor_pick >= cue_pick) ++anchor_pick;
    int cue = neighbors[cue_pick];
    int anchor = neighbors[anchor_pick];

    std::vector<int> heads, parent_label;
    orient_tree(g, heads, parent_label);

    RawRecord r;
    r.head = heads;
    r.tokens.resize(static_cast<size_t>(n));
    r.pos.resize(static_cast<size_t>(n));
    r.deprel.resize(static_cast<size_t>(n));
    for (int v = 0; v < n; ++v) {
      r.tokens[static_cast<size_t>(v)] =
          "w" + std::to_string(rng.uniform_int(static_cast<uint64_t>(opt.n_words)));
      r.pos[static_cast<size_t>(v)] =
          "p" + std::to_string(rng.uniform_int(static_cast<uint64_t>(opt.n_pos)));
      r.deprel[static_cast<size_t>(v)] =
          parent_label[static_cast<size_t>(v)] >= 0
              ? fillers.label(parent_label[static_cast<size_t>(v)])
              : "root";
    }
    r.tokens[static_cast<size_t>(cue)] = kCueToken;
    r.tokens[static_cast<size_t>(anchor)] = kAnchorToken;
    set_edge_deprel(r, target, anchor, kAnchorLabel);

    // the cue edge label alone decides the class; neutral keeps its filler
    if (cls == 0)
      set_edge_deprel(r, target, cue, kCuePositiveLabel);
    else if (cls == 1)
      set_edge_deprel(r, target, cue, kCueNegativeLabel);

    r.target_begin = target;
    r.target_end = target + 1;
    r.polarity = std::string(polarity_string(polarity_from_index(cls)));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace rgat
