#include "topicflow/nlu/datasets.hpp"

#include <fstream>
#include <sstream>

#include "topicflow/error.hpp"
#include "topicflow/nlu/iob.hpp"

namespace topicflow::nlu {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    out.push_back(line);
  }
  return out;
}

std::vector<LabeledText> read_labeled_tsv(const std::filesystem::path& path) {
  std::vector<LabeledText> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw ParseError(path.string(), lineno, "expected 'utterance<TAB>label'");
    }
    out.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return out;
}

void write_labeled_tsv(const std::filesystem::path& path, const std::vector<LabeledText>& rows) {
  auto out = open_out(path);
  for (const auto& r : rows) out << r.text << '\t' << r.label << '\n';
}

std::vector<TaggedSentence> read_conll(const std::filesystem::path& path) {
  std::vector<TaggedSentence> out;
  TaggedSentence cur;
  std::size_t first_line = 0, lineno = 0;
  auto flush = [&] {
    if (cur.tokens.empty()) return;
    auto bad = first_iob_violation(cur.tags);
    if (bad != std::string::npos) {
      throw ParseError(path.string(), first_line + bad,
                       "tag " + cur.tags[bad] + " does not continue an entity of the same type");
    }
    out.push_back(std::move(cur));
    cur = {};
  };
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    std::istringstream ls(line);
    std::string token, tag, extra;
    if (!(ls >> token >> tag) || (ls >> extra)) throw ParseError(path.string(), lineno, "expected 'token tag'");
    if (tag != "O" && tag.rfind("B-", 0) != 0 && tag.rfind("I-", 0) != 0) {
      throw ParseError(path.string(), lineno, "tag '" + tag + "' is not O, B-type or I-type");
    }
    if (cur.tokens.empty()) first_line = lineno;
    cur.tokens.push_back(token);
    cur.tags.push_back(tag);
  }
  flush();
  return out;
}

void write_conll(const std::filesystem::path& path, const std::vector<TaggedSentence>& rows) {
  auto out = open_out(path);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.tokens.size(); ++i) out << r.tokens[i] << '\t' << r.tags[i] << '\n';
    out << '\n';
  }
}

std::vector<SentimentText> read_sentiment_tsv(const std::filesystem::path& path) {
  std::vector<SentimentText> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.size() < 3 || (line[0] != '0' && line[0] != '1') || line[1] != '\t') {
      throw ParseError(path.string(), lineno, "expected '0|1<TAB>text'");
    }
    out.push_back({line[0] - '0', line.substr(2)});
  }
  return out;
}

void write_sentiment_tsv(const std::filesystem::path& path, const std::vector<SentimentText>& rows) {
  auto out = open_out(path);
  for (const auto& r : rows) out << r.label << '\t' << r.text << '\n';
}

}  // namespace topicflow::nlu
