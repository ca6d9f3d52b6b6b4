#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "topicflow/tensor/rng.hpp"

namespace topicflow::engine {

/// Pronoun-swapping restatement of the user's message.
class Paraphraser {
 public:
  struct Rule {
    std::vector<std::string> from;  // lowercase tokens
    std::vector<std::string> to;
  };

  Paraphraser() = default;
  explicit Paraphraser(std::vector<Rule> rules);
  /// "from<TAB>to" lines; '#' starts a comment line.
  static Paraphraser parse(const std::string& text, const std::string& source);
  static Paraphraser load(const std::filesystem::path& path);

  /// 2 to 9 words and a word "i" or "you".
  static bool eligible(const std::string& message);
  /// Rules applied left to right, longest match first, whole tokens only.
  /// Unmatched words keep their surface form; punctuation is dropped.
  std::string restate(const std::string& message) const;
  /// Restatement when eligible and a draw with `probability` succeeds. The
  /// draw happens only for eligible messages.
  std::optional<std::string> paraphrase(const std::string& message, tensor::Rng& rng, double probability) const;

 private:
  std::vector<Rule> rules_;  // longest first
};

/// "restatement. response"
std::string prepend_restatement(const std::string& restatement, const std::string& response);

}  // namespace topicflow::engine
