#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "topicflow/nlu/datasets.hpp"

namespace topicflow::synth {

/// Intent rows and CoNLL sentences, aligned index by index.
struct NluCorpus {
  std::vector<nlu::LabeledText> intents;
  std::vector<nlu::TaggedSentence> entities;
  std::size_t size() const { return intents.size(); }
};

const std::vector<std::string>& nlu_intents();
const std::vector<std::string>& nlu_entity_types();
/// Surface values per entity type ("movie" -> {"Matrix", "Titanic", ...}).
const std::map<std::string, std::vector<std::string>>& entity_values();

/// `n` templated utterances with distinct token sequences; intents drawn
/// uniformly, so intents with few surface forms saturate and end up rarer.
NluCorpus generate_nlu_corpus(std::size_t n, std::uint64_t seed);

/// Shuffled split; the utterances are distinct so the parts are disjoint.
std::pair<NluCorpus, NluCorpus> split_corpus(const NluCorpus& c, double train_fraction, std::uint64_t seed);

/// "utterance, label" rows over `classes` dialogue-act labels (at most 6
/// distinct surface families: statement, yes_no_question, wh_question,
/// acknowledge, opinion, greeting).
std::vector<nlu::LabeledText> generate_dialogue_acts(std::size_t n, std::size_t classes, std::uint64_t seed);

/// Balanced IMDB-style reviews (label 1 positive, 0 negative).
std::vector<nlu::SentimentText> generate_reviews(std::size_t n, std::uint64_t seed);

/// Short opinion snippets mentioning named things, searched by entity_sentiment.
std::vector<std::string> generate_evidence_corpus(std::uint64_t seed);

}  // namespace topicflow::synth
