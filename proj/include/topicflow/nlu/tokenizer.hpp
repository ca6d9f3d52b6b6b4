#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace topicflow::nlu {

struct Token {
  std::string text;  // lowercased
  std::size_t begin = 0;  // byte offsets into the original utterance
  std::size_t end = 0;
};

/// Lowercases and splits on whitespace and punctuation. Punctuation is
/// dropped; an apostrophe between two word characters stays inside the word
/// ("let's"). Non-ASCII bytes count as word characters.
std::vector<Token> tokenize(std::string_view text);
std::vector<std::string> words(std::string_view text);

std::string lowercase(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep = " ");

}  // namespace topicflow::nlu
