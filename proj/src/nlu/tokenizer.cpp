#include "topicflow/nlu/tokenizer.hpp"

namespace topicflow::nlu {

namespace {

bool word_char(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

}  // namespace

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (!word_char(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < n) {
      const auto c = static_cast<unsigned char>(text[i]);
      if (word_char(c)) {
        ++i;
      } else if (c == '\'' && i + 1 < n && word_char(static_cast<unsigned char>(text[i + 1]))) {
        i += 2;
      } else {
        break;
      }
    }
    out.push_back({lowercase(text.substr(begin, i - begin)), begin, i});
  }
  return out;
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text)) out.push_back(std::move(t.text));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace topicflow::nlu
