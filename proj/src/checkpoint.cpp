#include "rgat/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace rgat {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'R', 'G', 'A', 'T', 'C', 'K', 'P', '1'};

void write_u64(std::ostream& out, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_doubles(std::ostream& out, const std::vector<double>& xs) {
  for (double x : xs) write_u64(out, std::bit_cast<uint64_t>(x));
}

void read_doubles(std::istream& in, std::vector<double>& xs) {
  for (double& x : xs) x = std::bit_cast<double>(read_u64(in));
}

}  // namespace

void save_checkpoint(const std::string& path, const RgatModel& model) {
  json manifest;
  manifest["format"] = "rgat-checkpoint";
  manifest["config"] = model.config().to_map();
  manifest["vocabs"]["words"] = model.vocabs().words.items();
  manifest["vocabs"]["pos"] = model.vocabs().pos.items();
  manifest["vocabs"]["relations"] = model.vocabs().relations.labels();
  json tensors = json::array();
  for (const auto& p : model.params().all()) {
    json t;
    t["name"] = p->name;
    t["shape"] = p->value.shape;
    t["trainable"] = p->trainable;
    tensors.push_back(std::move(t));
  }
  manifest["tensors"] = std::move(tensors);
  std::string mtext = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out.write(kMagic, 8);
  write_u64(out, mtext.size());
  out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  for (const auto& p : model.params().all()) write_doubles(out, p->value.data);
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

RgatModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  uint64_t mlen = read_u64(in);
  std::string mtext(mlen, '\0');
  in.read(mtext.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw std::runtime_error("truncated checkpoint manifest: " + path);
  json manifest = json::parse(mtext);

  ModelConfig cfg;
  for (const auto& [k, v] : manifest.at("config").items())
    cfg.apply_entry(k, v.get<std::string>());
  // the weights are stored here; a missing embeddings file must not matter
  cfg.pretrained_embeddings.clear();
  cfg.validate();

  DataVocabs vocabs;
  vocabs.words = Vocab::from_items(
      manifest.at("vocabs").at("words").get<std::vector<std::string>>());
  vocabs.pos = Vocab::from_items(
      manifest.at("vocabs").at("pos").get<std::vector<std::string>>());
  vocabs.relations = RelationVocab::from_labels(
      manifest.at("vocabs").at("relations").get<std::vector<std::string>>());

  RgatModel model(cfg, std::move(vocabs), cfg.seed);
  const auto& table = manifest.at("tensors");
  if (table.size() != model.params().all().size())
    throw std::runtime_error("checkpoint tensor count mismatch: " + path);
  for (size_t i = 0; i < table.size(); ++i) {
    Parameter& p = *model.params().all()[i];
    if (table[i].at("name").get<std::string>() != p.name)
      throw std::runtime_error("checkpoint tensor order mismatch at " + p.name);
    if (table[i].at("shape").get<std::vector<int>>() != p.value.shape)
      throw std::runtime_error("checkpoint shape mismatch at " + p.name);
    p.trainable = table[i].at("trainable").get<bool>();
    read_doubles(in, p.value.data);
  }
  if (!in) throw std::runtime_error("truncated checkpoint payload: " + path);
  return model;
}

}  // namespace rgat
