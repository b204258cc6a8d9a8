#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "rgat/conllu.hpp"
#include "rgat/dataset.hpp"
#include "rgat/depgraph.hpp"

using namespace rgat;

namespace {

// brute-force edge enumeration: expected symmetric adjacency from arcs
std::vector<uint8_t> arcs_to_adjacency(int n, const std::vector<int>& heads) {
  std::vector<uint8_t> adj(static_cast<size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) adj[static_cast<size_t>(i) * n + i] = 1;
  for (int i = 0; i < n; ++i) {
    if (heads[static_cast<size_t>(i)] == 0) continue;
    int h = heads[static_cast<size_t>(i)] - 1;
    adj[static_cast<size_t>(i) * n + h] = 1;
    adj[static_cast<size_t>(h) * n + i] = 1;
  }
  return adj;
}

bool connected(const DepGraph& g) {
  std::vector<char> seen(static_cast<size_t>(g.n), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < g.n; ++v)
      if (v != u && g.edge(u, v) && !seen[static_cast<size_t>(v)]) {
        seen[static_cast<size_t>(v)] = 1;
        ++count;
        stack.push_back(v);
      }
  }
  return count == g.n;
}

std::string edge_key(const DepGraph& g) {
  std::string key;
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j)
      if (g.edge(i, j)) {
        key += std::to_string(i);
        key += std::to_string(j);
        key += ';';
      }
  return key;
}

}  // namespace

TEST_SUITE("depgraph") {

TEST_CASE("build_graph symmetrizes arcs and adds SELF loops") {
  RelationVocab vocab;
  DepGraph g = build_graph({2, 0, 2}, {"nsubj", "root", "dobj"}, vocab);
  int nsubj = vocab.id("nsubj"), dobj = vocab.id("dobj");
  CHECK(g.n == 3);
  CHECK(g.edge(0, 1));
  CHECK(g.edge(1, 0));
  CHECK(g.edge(1, 2));
  CHECK(g.edge(2, 1));
  CHECK_FALSE(g.edge(0, 2));
  CHECK(g.label(0, 1) == nsubj);
  CHECK(g.label(1, 0) == nsubj);
  CHECK(g.label(1, 2) == dobj);
  CHECK(g.label(2, 1) == dobj);
  for (int i = 0; i < 3; ++i) CHECK(g.label(i, i) == RelationVocab::kSelf);
  g.check_invariants();
}

TEST_CASE("build_graph single node") {
  RelationVocab vocab;
  DepGraph g = build_graph({0}, {"root"}, vocab);
  CHECK(g.n == 1);
  CHECK(g.edge(0, 0));
  CHECK(g.label(0, 0) == RelationVocab::kSelf);
}

TEST_CASE("build_graph path matches brute-force edge enumeration") {
  RelationVocab vocab;
  std::vector<int> heads{2, 3, 0};
  DepGraph g = build_graph(heads, {"a", "b", "root"}, vocab);
  CHECK(g.adj == arcs_to_adjacency(3, heads));
  CHECK(g.undirected_edge_count() == 2);
  CHECK(connected(g));
}

TEST_CASE("build_graph rejects bad input") {
  RelationVocab vocab;
  CHECK_THROWS_WITH_AS(build_graph({0, 0}, {"root", "root"}, vocab),
                       doctest::Contains("root"), std::invalid_argument);
  CHECK_THROWS_AS(build_graph({2, 1}, {"a", "b"}, vocab),
                  std::invalid_argument);  // no root
  CHECK_THROWS_WITH_AS(build_graph({5, 0}, {"a", "root"}, vocab),
                       doctest::Contains("out of range"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(build_graph({2, 1, 0}, {"a", "b", "root"}, vocab),
                       doctest::Contains("cycle"), std::invalid_argument);
}

TEST_CASE("random_tree basics") {
  RelationVocab vocab;
  vocab.add("x");
  vocab.add("y");

  SUBCASE("n = 1 is a lone self-loop") {
    DepGraph g = random_tree(1, vocab, 4);
    CHECK(g.n == 1);
    CHECK(g.undirected_edge_count() == 0);
  }
  SUBCASE("n = 0 is rejected") {
    CHECK_THROWS_AS(random_tree(0, vocab, 4), std::invalid_argument);
  }
  SUBCASE("spanning tree: n-1 edges, connected, invariants hold") {
    for (uint64_t seed = 0; seed < 25; ++seed) {
      DepGraph g = random_tree(5, vocab, seed);
      g.check_invariants();
      CHECK(g.undirected_edge_count() == 4);
      CHECK(connected(g));
    }
  }
  SUBCASE("deterministic in the seed") {
    DepGraph a = random_tree(7, vocab, 99);
    DepGraph b = random_tree(7, vocab, 99);
    CHECK(a.adj == b.adj);
    CHECK(a.labels == b.labels);
  }
}

TEST_CASE("random_tree is uniform over the 16 labeled trees on 4 nodes") {
  RelationVocab vocab;
  vocab.add("only");
  std::map<std::string, int> counts;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i)
    counts[edge_key(random_tree(4, vocab, static_cast<uint64_t>(i)))]++;
  CHECK(counts.size() == 16);  // 4^(4-2) Pruefer sequences
  // expectation 625, sigma = sqrt(10000 * (1/16)(15/16)) ~ 24.2; 3 sigma band
  for (const auto& [key, count] : counts) {
    INFO("tree " << key << " count " << count);
    CHECK(count > 625 - 73);
    CHECK(count < 625 + 73);
  }
}

TEST_CASE("permute_labels keeps adjacency and the label multiset") {
  RelationVocab vocab;
  DepGraph g = build_graph({2, 3, 0, 3}, {"a", "b", "root", "c"}, vocab);

  SUBCASE("single edge graphs are unchanged") {
    DepGraph two = build_graph({2, 0}, {"a", "root"}, vocab);
    DepGraph p = permute_labels(two, 5);
    CHECK(p.labels == two.labels);
  }
  SUBCASE("adjacency bit-exact, multiset preserved") {
    DepGraph p = permute_labels(g, 12345);
    CHECK(p.adj == g.adj);
    auto multiset = [](const DepGraph& d) {
      std::vector<int> ls;
      for (int i = 0; i < d.n; ++i)
        for (int j = i + 1; j < d.n; ++j)
          if (d.edge(i, j)) ls.push_back(d.label(i, j));
      std::sort(ls.begin(), ls.end());
      return ls;
    };
    CHECK(multiset(p) == multiset(g));
  }
  SUBCASE("fixed seed matches a replay of the documented shuffle") {
    DepGraph p = permute_labels(g, 777);
    // edges ordered (i<j): (0,1) a, (1,2) b, (2,3) c; shuffle with Rng(777)
    std::vector<int> labels{vocab.id("a"), vocab.id("b"), vocab.id("c")};
    Rng rng(777);
    for (size_t i = labels.size(); i > 1; --i)
      std::swap(labels[i - 1], labels[rng.uniform_int(i)]);
    CHECK(p.label(0, 1) == labels[0]);
    CHECK(p.label(1, 2) == labels[1]);
    CHECK(p.label(2, 3) == labels[2]);
  }
}

TEST_CASE("mask_label replaces occurrences and keeps structure") {
  RelationVocab vocab;
  DepGraph g = build_graph({2, 0, 2}, {"nsubj", "root", "amod"}, vocab);
  int amod = vocab.id("amod");

  SUBCASE("graphs without the label are unchanged") {
    int other = vocab.add("advmod");
    DepGraph m = mask_label(g, other);
    CHECK(m.labels == g.labels);
  }
  SUBCASE("replacement and idempotence") {
    DepGraph m = mask_label(g, amod);
    CHECK(m.adj == g.adj);
    CHECK(m.label(0, 1) == vocab.id("nsubj"));
    CHECK(m.label(1, 2) == RelationVocab::kRemoved);
    CHECK(m.label(2, 1) == RelationVocab::kRemoved);
    DepGraph mm = mask_label(m, amod);
    CHECK(mm.labels == m.labels);
  }
  SUBCASE("reserved ids are rejected") {
    CHECK_THROWS_AS(mask_label(g, RelationVocab::kSelf), std::invalid_argument);
  }
}

TEST_CASE("remove_label_edges deletes matching edges only") {
  RelationVocab vocab;
  DepGraph g = build_graph({2, 0, 2}, {"nsubj", "root", "amod"}, vocab);
  DepGraph r = remove_label_edges(g, vocab.id("amod"));
  CHECK_FALSE(r.edge(1, 2));
  CHECK(r.label(1, 2) == RelationVocab::kNone);
  CHECK(r.edge(0, 1));
  CHECK(r.edge(2, 2));  // self loop survives
  CHECK(r.undirected_edge_count() == 1);
}

TEST_CASE("conllu reader") {
  SUBCASE("two sentences with comments") {
    std::istringstream in(
        "# sent_id = 1\n"
        "1\tI\t_\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
        "2\tslept\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
        "\n"
        "# sent_id = 2\n"
        "1\tGood\t_\tADJ\t_\t_\t2\tamod\t_\t_\n"
        "2\tfood\t_\tNOUN\t_\t_\t0\troot\t_\t_\n"
        "3\t!\t_\tPUNCT\t_\t_\t2\tpunct\t_\t_\n");
    auto sents = read_conllu(in);
    REQUIRE(sents.size() == 2);
    CHECK(sents[0].forms == std::vector<std::string>{"I", "slept"});
    CHECK(sents[0].upos == std::vector<std::string>{"PRON", "VERB"});
    CHECK(sents[0].heads == std::vector<int>{2, 0});
    CHECK(sents[1].deprels ==
          std::vector<std::string>{"amod", "root", "punct"});
  }
  SUBCASE("comment-only input yields no sentences") {
    std::istringstream in("# a\n# b\n");
    CHECK(read_conllu(in).empty());
  }
  SUBCASE("multiword ranges and empty nodes are skipped") {
    std::istringstream in(
        "1\tWe\t_\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
        "2\tgo\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
        "3-4\tdella\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "3\tdi\t_\tADP\t_\t_\t2\tcase\t_\t_\n"
        "4\tla\t_\tDET\t_\t_\t3\tdet\t_\t_\n"
        "5.1\tghost\t_\t_\t_\t_\t_\t_\t_\t_\n");
    auto sents = read_conllu(in);
    REQUIRE(sents.size() == 1);
    CHECK(sents[0].forms.size() == 4);  // range and empty node excluded
    CHECK(sents[0].forms[2] == "di");
  }
  SUBCASE("malformed lines report the line number") {
    std::istringstream bad_cols("1\tonly\tthree\n");
    CHECK_THROWS_WITH_AS(read_conllu(bad_cols), doctest::Contains("line 1"),
                         std::runtime_error);
    std::istringstream bad_head(
        "1\tI\t_\tPRON\t_\t_\tx\tnsubj\t_\t_\n");
    CHECK_THROWS_WITH_AS(read_conllu(bad_head), doctest::Contains("HEAD"),
                         std::runtime_error);
  }
}

TEST_CASE("conllu write/read round-trip reproduces heads and labels") {
  std::vector<ConlluSentence> sents(2);
  sents[0].forms = {"I", "slept"};
  sents[0].upos = {"PRON", "VERB"};
  sents[0].heads = {2, 0};
  sents[0].deprels = {"nsubj", "root"};
  sents[1].forms = {"Good", "food", "!"};
  sents[1].upos = {"ADJ", "NOUN", "PUNCT"};
  sents[1].heads = {2, 0, 2};
  sents[1].deprels = {"amod", "root", "punct"};

  std::ostringstream out;
  for (const ConlluSentence& s : sents) {
    for (size_t i = 0; i < s.forms.size(); ++i)
      out << i + 1 << "\t" << s.forms[i] << "\t_\t" << s.upos[i] << "\t_\t_\t"
          << s.heads[i] << "\t" << s.deprels[i] << "\t_\t_\n";
    out << "\n";
  }
  std::istringstream in(out.str());
  auto back = read_conllu(in);
  REQUIRE(back.size() == 2);
  for (size_t s = 0; s < 2; ++s) {
    CHECK(back[s].forms == sents[s].forms);
    CHECK(back[s].upos == sents[s].upos);
    CHECK(back[s].heads == sents[s].heads);
    CHECK(back[s].deprels == sents[s].deprels);
  }
}

TEST_CASE("instance jsonl round-trip reproduces heads and labels") {
  std::vector<RawRecord> records;
  RawRecord r;
  r.tokens = {"the", "food", "rocks"};
  r.pos = {"DET", "NOUN", "VERB"};
  r.head = {2, 3, 0};
  r.deprel = {"det", "nsubj", "root"};
  r.target_begin = 1;
  r.target_end = 2;
  r.polarity = "positive";
  records.push_back(r);

  std::ostringstream out;
  write_jsonl(out, records);
  std::istringstream in(out.str());
  auto back = read_jsonl(in);
  REQUIRE(back.size() == 1);
  CHECK(back[0].tokens == r.tokens);
  CHECK(back[0].head == r.head);
  CHECK(back[0].deprel == r.deprel);
  CHECK(back[0].target_begin == 1);
  CHECK(back[0].target_end == 2);
  CHECK(back[0].polarity == "positive");
}

TEST_CASE("jsonl validation failures carry the line number") {
  std::istringstream bad_span(
      R"({"tokens":["a"],"pos":["X"],"head":[0],"deprel":["root"],"target":[0,2],"polarity":"neutral"})");
  CHECK_THROWS_WITH_AS(read_jsonl(bad_span), doctest::Contains("line 1"),
                       std::runtime_error);
  std::istringstream bad_pol(
      R"({"tokens":["a"],"pos":["X"],"head":[0],"deprel":["root"],"target":[0,1],"polarity":"meh"})");
  CHECK_THROWS_AS(read_jsonl(bad_pol), std::exception);
}

TEST_CASE("dataset building maps unseen symbols to UNK when frozen") {
  std::vector<RawRecord> train;
  RawRecord r;
  r.tokens = {"food", "rocks"};
  r.pos = {"NOUN", "VERB"};
  r.head = {2, 0};
  r.deprel = {"nsubj", "root"};
  r.target_begin = 0;
  r.target_end = 1;
  r.polarity = "positive";
  train.push_back(r);

  DataVocabs vocabs;
  build_dataset(train, vocabs, true);
  int before = vocabs.relations.size();

  RawRecord t = r;
  t.tokens = {"service", "sucks"};
  t.deprel = {"weirdrel", "root"};
  Dataset test = build_dataset({t}, vocabs, false);
  CHECK(vocabs.relations.size() == before);  // frozen
  CHECK(test.instances[0].graph.label(0, 1) == RelationVocab::kUnk);
  CHECK(vocabs.words.id("service") == Vocab::kUnk);
}

}  // TEST_SUITE
