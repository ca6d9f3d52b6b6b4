#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace topicflow::nlu {

/// One labeled utterance; used for intents and dialogue acts.
struct LabeledText {
  std::string text;
  std::string label;
  bool operator==(const LabeledText&) const = default;
};

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  bool operator==(const TaggedSentence&) const = default;
};

struct SentimentText {
  int label = 0;  // 0 negative, 1 positive
  std::string text;
  bool operator==(const SentimentText&) const = default;
};

/// "utterance<TAB>label" lines (intent and dialogue-act data).
std::vector<LabeledText> read_labeled_tsv(const std::filesystem::path& path);
void write_labeled_tsv(const std::filesystem::path& path, const std::vector<LabeledText>& rows);

/// One "token<whitespace>tag" per line, blank line between sentences. Tags
/// are checked for IOB consistency; violations report the line.
std::vector<TaggedSentence> read_conll(const std::filesystem::path& path);
void write_conll(const std::filesystem::path& path, const std::vector<TaggedSentence>& rows);

/// "label<TAB>text" lines with label 0 or 1.
std::vector<SentimentText> read_sentiment_tsv(const std::filesystem::path& path);
void write_sentiment_tsv(const std::filesystem::path& path, const std::vector<SentimentText>& rows);

std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace topicflow::nlu
