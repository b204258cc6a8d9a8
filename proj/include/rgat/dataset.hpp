#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rgat/depgraph.hpp"

namespace rgat {

// Open vocabulary with a reserved UNK at id 0 (words, POS tags).
class Vocab {
 public:
  static constexpr int kUnk = 0;

  Vocab() : items_{"<unk>"} {}

  static Vocab from_items(std::vector<std::string> items);

  int add(std::string_view s);
  int id(std::string_view s) const;  // UNK when unknown
  const std::string& str(int id) const { return items_[static_cast<size_t>(id)]; }
  int size() const { return static_cast<int>(items_.size()); }
  const std::vector<std::string>& items() const { return items_; }

 private:
  std::vector<std::string> items_;
};

enum class Polarity { kPositive = 0, kNegative = 1, kNeutral = 2 };

int polarity_index(Polarity p);
Polarity polarity_from_index(int i);
Polarity polarity_from_string(std::string_view s);
std::string_view polarity_string(Polarity p);

struct Span {
  int begin = 0;
  int end = 0;  // half-open
  int length() const { return end - begin; }
};

// One classification instance: the sentence, the target mention span, the
// gold polarity and the typed dependency graph over the tokens.
struct Instance {
  std::vector<std::string> tokens;
  std::vector<int> pos_tags;
  Span target;
  Polarity polarity = Polarity::kNeutral;
  DepGraph graph;
};

// The on-disk record behind the instance JSONL format: one JSON object per
// line with fields tokens, pos, head, deprel, target [start,end), polarity.
struct RawRecord {
  std::vector<std::string> tokens;
  std::vector<std::string> pos;
  std::vector<int> head;
  std::vector<std::string> deprel;
  int target_begin = 0;
  int target_end = 0;
  std::string polarity;
};

std::vector<RawRecord> read_jsonl(std::istream& in);
std::vector<RawRecord> read_jsonl_file(const std::string& path);
void write_jsonl(std::ostream& out, const std::vector<RawRecord>& records);
void write_jsonl_file(const std::string& path,
                      const std::vector<RawRecord>& records);

struct DataVocabs {
  Vocab words;
  Vocab pos;
  RelationVocab relations;
};

struct Dataset {
  std::vector<Instance> instances;
  size_t size() const { return instances.size(); }
};

// Materializes records into instances. With grow_vocabs the vocabularies are
// extended (training split); otherwise unknown words/tags/labels map to UNK.
Dataset build_dataset(const std::vector<RawRecord>& records, DataVocabs& vocabs,
                      bool grow_vocabs);

}  // namespace rgat
