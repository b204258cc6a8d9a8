#include "rgat/dataset.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rgat {

using nlohmann::json;

Vocab Vocab::from_items(std::vector<std::string> items) {
  Vocab v;
  if (items.empty() || items[0] != "<unk>")
    throw std::invalid_argument("vocabulary: reserved <unk> entry damaged");
  v.items_ = std::move(items);
  return v;
}

int Vocab::add(std::string_view s) {
  for (size_t i = 0; i < items_.size(); ++i)
    if (items_[i] == s) return static_cast<int>(i);
  items_.emplace_back(s);
  return static_cast<int>(items_.size()) - 1;
}

int Vocab::id(std::string_view s) const {
  for (size_t i = 0; i < items_.size(); ++i)
    if (items_[i] == s) return static_cast<int>(i);
  return kUnk;
}

int polarity_index(Polarity p) { return static_cast<int>(p); }

Polarity polarity_from_index(int i) {
  if (i < 0 || i > 2)
    throw std::invalid_argument("bad polarity index " + std::to_string(i));
  return static_cast<Polarity>(i);
}

Polarity polarity_from_string(std::string_view s) {
  if (s == "positive") return Polarity::kPositive;
  if (s == "negative") return Polarity::kNegative;
  if (s == "neutral") return Polarity::kNeutral;
  throw std::invalid_argument("bad polarity '" + std::string(s) +
                              "' (want positive|negative|neutral)");
}

std::string_view polarity_string(Polarity p) {
  switch (p) {
    case Polarity::kPositive: return "positive";
    case Polarity::kNegative: return "negative";
    case Polarity::kNeutral: return "neutral";
  }
  throw std::invalid_argument("bad polarity value");
}

std::vector<RawRecord> read_jsonl(std::istream& in) {
  std::vector<RawRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("jsonl line " + std::to_string(line_no) + ": " +
                               e.what());
    }
    RawRecord r;
    try {
      r.tokens = j.at("tokens").get<std::vector<std::string>>();
      r.pos = j.at("pos").get<std::vector<std::string>>();
      r.head = j.at("head").get<std::vector<int>>();
      r.deprel = j.at("deprel").get<std::vector<std::string>>();
      r.target_begin = j.at("target").at(0).get<int>();
      r.target_end = j.at("target").at(1).get<int>();
      r.polarity = j.at("polarity").get<std::string>();
    } catch (const std::exception& e) {
      throw std::runtime_error("jsonl line " + std::to_string(line_no) +
                               ": bad record: " + e.what());
    }
    size_t n = r.tokens.size();
    if (n == 0 || r.pos.size() != n || r.head.size() != n ||
        r.deprel.size() != n)
      throw std::runtime_error("jsonl line " + std::to_string(line_no) +
                               ": field lengths disagree");
    if (r.target_begin < 0 || r.target_begin >= r.target_end ||
        r.target_end > static_cast<int>(n))
      throw std::runtime_error("jsonl line " + std::to_string(line_no) +
                               ": bad target span");
    polarity_from_string(r.polarity);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<RawRecord> read_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_jsonl(in);
}

void write_jsonl(std::ostream& out, const std::vector<RawRecord>& records) {
  for (const RawRecord& r : records) {
    json j;
    j["tokens"] = r.tokens;
    j["pos"] = r.pos;
    j["head"] = r.head;
    j["deprel"] = r.deprel;
    j["target"] = {r.target_begin, r.target_end};
    j["polarity"] = r.polarity;
    out << j.dump() << "\n";
  }
}

void write_jsonl_file(const std::string& path,
                      const std::vector<RawRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_jsonl(out, records);
}

Dataset build_dataset(const std::vector<RawRecord>& records, DataVocabs& vocabs,
                      bool grow_vocabs) {
  Dataset ds;
  ds.instances.reserve(records.size());
  for (const RawRecord& r : records) {
    Instance inst;
    inst.tokens = r.tokens;
    if (grow_vocabs)
      for (const std::string& w : r.tokens) vocabs.words.add(w);
    inst.pos_tags.reserve(r.pos.size());
    for (const std::string& p : r.pos)
      inst.pos_tags.push_back(grow_vocabs ? vocabs.pos.add(p)
                                          : vocabs.pos.id(p));
    inst.target = {r.target_begin, r.target_end};
    inst.polarity = polarity_from_string(r.polarity);
    inst.graph = build_graph(r.head, r.deprel, vocabs.relations, grow_vocabs);
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

}  // namespace rgat
