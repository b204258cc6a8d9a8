#pragma once

#include <istream>
#include <string>
#include <vector>

namespace rgat {

struct ConlluSentence {
  std::vector<std::string> forms;    // column 2
  std::vector<std::string> upos;     // column 4
  std::vector<int> heads;            // column 7, 0 = root
  std::vector<std::string> deprels;  // column 8
};

// CoNLL-U reader: 10 tab-separated columns per token line, blank lines
// separate sentences, '#' lines are comments. Multiword-token ranges
// ("3-4") and empty nodes ("5.1") are skipped. Malformed lines raise with
// the 1-based line number.
std::vector<ConlluSentence> read_conllu(std::istream& in);

}  // namespace rgat
