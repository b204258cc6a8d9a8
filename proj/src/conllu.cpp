#include "rgat/conllu.hpp"

#include <stdexcept>

namespace rgat {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

bool plain_integer(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

}  // namespace

std::vector<ConlluSentence> read_conllu(std::istream& in) {
  std::vector<ConlluSentence> sentences;
  ConlluSentence current;
  std::string line;
  int line_no = 0;

  auto flush = [&] {
    if (!current.forms.empty()) {
      sentences.push_back(std::move(current));
      current = ConlluSentence{};
    }
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;
    std::vector<std::string> cols = split_tabs(line);
    if (cols.size() != 10)
      throw std::runtime_error("conllu line " + std::to_string(line_no) +
                               ": expected 10 columns, got " +
                               std::to_string(cols.size()));
    const std::string& id = cols[0];
    // multiword ranges ("3-4") and empty nodes ("5.1") carry no tree arc
    if (id.find('-') != std::string::npos || id.find('.') != std::string::npos)
      continue;
    if (!plain_integer(id))
      throw std::runtime_error("conllu line " + std::to_string(line_no) +
                               ": bad token id '" + id + "'");
    if (!plain_integer(cols[6]))
      throw std::runtime_error("conllu line " + std::to_string(line_no) +
                               ": non-integer HEAD '" + cols[6] + "'");
    current.forms.push_back(cols[1]);
    current.upos.push_back(cols[3]);
    current.heads.push_back(std::stoi(cols[6]));
    current.deprels.push_back(cols[7]);
  }
  flush();
  return sentences;
}

}  // namespace rgat
