#pragma once

#include <map>
#include <string>
#include <vector>

namespace topicflow::nlu {

struct EntitySpan {
  std::string text;
  std::size_t begin = 0;  // token range [begin, end)
  std::size_t end = 0;
  std::string type;
  bool operator==(const EntitySpan&) const = default;
};

/// IOB labels over entity types: "O", then "B-t", "I-t" for each type in order.
class TagSet {
 public:
  TagSet() : TagSet(std::vector<std::string>{}) {}
  explicit TagSet(std::vector<std::string> types);

  const std::vector<std::string>& types() const { return types_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  std::size_t index(const std::string& label) const;
  bool contains(const std::string& label) const { return index_.count(label) > 0; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }

 private:
  std::vector<std::string> types_;
  std::vector<std::string> labels_;
  std::map<std::string, std::size_t> index_;
};

/// Groups B-x (I-x)* runs. An I-x that does not continue an x run starts a
/// new span (standard repair), so any label sequence decodes.
std::vector<EntitySpan> decode_iob(const std::vector<std::string>& tokens,
                                   const std::vector<std::string>& tags);

/// Tags for non-overlapping spans over `n` tokens.
std::vector<std::string> encode_iob(std::size_t n, const std::vector<EntitySpan>& spans);

/// Position of the first I-x not preceded by B-x or I-x, or npos when the
/// sequence is well formed.
std::size_t first_iob_violation(const std::vector<std::string>& tags);

}  // namespace topicflow::nlu
