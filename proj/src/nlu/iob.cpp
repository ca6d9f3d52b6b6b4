#include "topicflow/nlu/iob.hpp"

#include <string>

#include "topicflow/error.hpp"
#include "topicflow/nlu/tokenizer.hpp"

namespace topicflow::nlu {

TagSet::TagSet(std::vector<std::string> types) : types_(std::move(types)) {
  labels_.push_back("O");
  for (const auto& t : types_) {
    labels_.push_back("B-" + t);
    labels_.push_back("I-" + t);
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second) throw ValidationError("duplicate entity type in tag set");
  }
}

std::size_t TagSet::index(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) throw ValidationError("unknown IOB label '" + label + "'");
  return it->second;
}

namespace {

std::string type_of(const std::string& tag) { return tag.size() > 2 ? tag.substr(2) : std::string(); }

}  // namespace

std::vector<EntitySpan> decode_iob(const std::vector<std::string>& tokens,
                                   const std::vector<std::string>& tags) {
  if (tokens.size() != tags.size()) throw ValidationError("token and tag counts differ");
  std::vector<EntitySpan> spans;
  auto close = [&](std::size_t end) {
    auto& s = spans.back();
    s.end = end;
    std::vector<std::string> parts(tokens.begin() + s.begin, tokens.begin() + end);
    s.text = join(parts);
  };
  bool open = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string& tag = tags[i];
    const bool begin = tag.rfind("B-", 0) == 0;
    const bool inside = tag.rfind("I-", 0) == 0;
    if (inside && open && spans.back().type == type_of(tag)) continue;
    if (open) {
      close(i);
      open = false;
    }
    if (begin || inside) {
      spans.push_back({"", i, i, type_of(tag)});
      open = true;
    }
  }
  if (open) close(tags.size());
  return spans;
}

std::vector<std::string> encode_iob(std::size_t n, const std::vector<EntitySpan>& spans) {
  std::vector<std::string> tags(n, "O");
  for (const auto& s : spans) {
    if (s.begin >= s.end || s.end > n) throw ValidationError("span outside the utterance");
    for (std::size_t i = s.begin; i < s.end; ++i) {
      if (tags[i] != "O") throw ValidationError("overlapping spans");
      tags[i] = (i == s.begin ? "B-" : "I-") + s.type;
    }
  }
  return tags;
}

std::size_t first_iob_violation(const std::vector<std::string>& tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].rfind("I-", 0) != 0) continue;
    if (i == 0 || tags[i - 1] == "O" || type_of(tags[i - 1]) != type_of(tags[i])) return i;
  }
  return std::string::npos;
}

}  // namespace topicflow::nlu
