#include "topicflow/synth/corpora.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "topicflow/nlu/tokenizer.hpp"
#include "topicflow/tensor/rng.hpp"

namespace topicflow::synth {

using tensor::Rng;

namespace {

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

struct Template {
  std::string intent;
  std::string text;  // slots: {movie} {music_genre} {writer} {sport} {person_name} {generic}
};

// generic is the GenericEntity slot
const std::map<std::string, std::string> kSlotType = {
    {"movie", "movie"},   {"music_genre", "music_genre"}, {"writer", "writer"},
    {"sport", "sport"},   {"person_name", "person_name"}, {"generic", "GenericEntity"}};

const std::vector<Template>& templates() {
  static const std::vector<Template> t = {
      {"tell_topic", "let's talk about {music_genre}"},
      {"tell_topic", "can we chat about {music_genre}"},
      {"tell_topic", "let's talk about {generic}"},
      {"tell_topic", "i want to talk about {generic}"},
      {"tell_topic", "tell me something about {generic}"},
      {"tell_topic", "what do you know about {generic}"},
      {"tell_topic", "let's discuss {generic}"},
      {"tell_topic", "let's chat about the {movie} movie"},
      {"tell_topic", "can we talk about the movie {movie}"},
      {"tell_topic", "i want to talk about books by {writer}"},
      {"tell_topic", "let's talk about {sport}"},
      {"tell_topic", "can we talk about something else"},
      {"tell_topic", "change the topic please"},
      {"Music", "i like {music_genre}"},
      {"Music", "i love listening to {music_genre}"},
      {"Music", "my favorite music is {music_genre}"},
      {"Music", "i mostly listen to {music_genre}"},
      {"Music", "{music_genre} is the best"},
      {"Music", "do you like {music_genre}"},
      {"Music", "i enjoy {music_genre} a lot"},
      {"Music", "i listen to music every day"},
      {"Music", "music makes me happy"},
      {"Music", "let's talk about music"},
      {"Movies", "i watched {movie} yesterday"},
      {"Movies", "have you seen {movie}"},
      {"Movies", "my favorite movie is {movie}"},
      {"Movies", "i really liked the {movie} movie"},
      {"Movies", "{movie} is a great film"},
      {"Movies", "i saw {movie} in the cinema"},
      {"Movies", "i love watching movies"},
      {"Movies", "do you watch movies"},
      {"Movies", "let's talk about movies"},
      {"Movies", "can we talk about films"},
      {"Books", "i am reading a book by {writer}"},
      {"Books", "my favorite writer is {writer}"},
      {"Books", "have you read anything by {writer}"},
      {"Books", "{writer} wrote my favorite novel"},
      {"Books", "do you like books by {writer}"},
      {"Books", "i love books"},
      {"Books", "i like reading novels"},
      {"Books", "let's talk about books"},
      {"Sports", "i play {sport}"},
      {"Sports", "i like watching {sport}"},
      {"Sports", "my favorite sport is {sport}"},
      {"Sports", "i play {sport} every weekend"},
      {"Sports", "do you follow {sport}"},
      {"Sports", "sports are fun"},
      {"Sports", "i do a lot of sport"},
      {"Sports", "let's talk about sports"},
      {"greeting", "hello"},
      {"greeting", "hi"},
      {"greeting", "hi there"},
      {"greeting", "hello there"},
      {"greeting", "hey"},
      {"greeting", "good morning"},
      {"greeting", "good evening"},
      {"greeting", "good afternoon"},
      {"greeting", "howdy"},
      {"greeting", "hello nice to meet you"},
      {"greeting", "hi how is it going"},
      {"tell_name", "my name is {person_name}"},
      {"tell_name", "call me {person_name}"},
      {"tell_name", "i am {person_name}"},
      {"tell_name", "people call me {person_name}"},
      {"tell_name", "you can call me {person_name}"},
      {"tell_name", "my friends call me {person_name}"},
      {"tell_name", "the name is {person_name}"},
      {"affirm", "yes"},
      {"affirm", "yeah"},
      {"affirm", "sure"},
      {"affirm", "of course"},
      {"affirm", "definitely"},
      {"affirm", "absolutely"},
      {"affirm", "yep"},
      {"affirm", "okay"},
      {"affirm", "yes please"},
      {"affirm", "sure why not"},
      {"affirm", "yeah that sounds good"},
      {"affirm", "yes go ahead"},
      {"affirm", "i think so"},
  };
  return t;
}

const std::vector<std::string> kPrefixes = {"", "", "", "well", "so", "actually", "oh", "um"};
const std::vector<std::string> kEndings = {"", "", ".", "!", "?"};

// Splits a template into literal and slot parts.
std::vector<std::pair<bool, std::string>> parts_of(const std::string& text) {
  std::vector<std::pair<bool, std::string>> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto open = text.find('{', i);
    if (open == std::string::npos) {
      out.push_back({false, text.substr(i)});
      break;
    }
    if (open > i) out.push_back({false, text.substr(i, open - i)});
    const auto close = text.find('}', open);
    out.push_back({true, text.substr(open + 1, close - open - 1)});
    i = close + 1;
  }
  return out;
}

}  // namespace

const std::vector<std::string>& nlu_intents() {
  static const std::vector<std::string> v = {"tell_topic", "Music", "Movies", "Books",
                                             "Sports",     "greeting", "tell_name", "affirm"};
  return v;
}

const std::vector<std::string>& nlu_entity_types() {
  static const std::vector<std::string> v = {"movie", "music_genre", "writer", "sport", "person_name",
                                             "GenericEntity"};
  return v;
}

const std::map<std::string, std::vector<std::string>>& entity_values() {
  static const std::map<std::string, std::vector<std::string>> m = {
      {"movie",
       {"Matrix", "Titanic", "Inception", "Avatar", "Star Wars", "Jaws", "Alien", "Gladiator", "Casablanca",
        "Interstellar", "Frozen", "Rocky", "Amelie", "Psycho", "Vertigo", "Braveheart", "Goodfellas",
        "Memento", "Heat", "Toy Story"}},
      {"music_genre",
       {"rock music", "pop music", "jazz", "hip hop", "classical music", "country music", "heavy metal",
        "blues", "techno", "reggae", "punk rock", "folk music", "soul music", "disco", "rap"}},
      {"writer",
       {"Stephen King", "Agatha Christie", "Ernest Hemingway", "George Orwell", "Jane Austen", "Mark Twain",
        "Leo Tolstoy", "Terry Pratchett", "Neil Gaiman", "Haruki Murakami", "Toni Morrison", "Franz Kafka",
        "Isaac Asimov", "Virginia Woolf", "Charles Dickens", "Karel Capek"}},
      {"sport",
       {"football", "basketball", "tennis", "ice hockey", "baseball", "golf", "volleyball", "swimming",
        "cycling", "table tennis", "rugby", "cricket", "skiing", "boxing"}},
      {"person_name",
       {"John", "Mary", "Peter", "Anna", "Tomas", "Lucy", "David", "Sarah", "Jan", "Petra", "Michael", "Emma",
        "Karel", "Olivia", "James", "Sophie"}},
      {"GenericEntity",
       {"Matrix", "Moon", "Elon Musk", "pizza", "climate change", "Tesla", "Python", "Paris", "Bitcoin",
        "dinosaurs", "volcanoes", "internet", "coffee", "Mars", "chess", "robots", "Prague", "cats", "sharks",
        "Einstein"}},
  };
  return m;
}

NluCorpus generate_nlu_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::map<std::string, std::vector<const Template*>> by_intent;
  for (const auto& t : templates()) by_intent[t.intent].push_back(&t);
  const auto& values = entity_values();

  NluCorpus out;
  std::set<std::string> seen;
  std::size_t attempts = 0;
  while (out.size() < n) {
    if (++attempts > 200 * n + 1000) throw std::runtime_error("nlu corpus: template space exhausted");
    const std::string& intent = nlu_intents()[rng.below(nlu_intents().size())];
    const Template& t = *pick(rng, by_intent[intent]);

    std::string text;
    nlu::TaggedSentence s;
    const std::string& prefix = pick(rng, kPrefixes);
    auto append = [&](const std::string& piece, const std::string& type) {
      if (!text.empty() && text.back() != ' ' && piece.front() != ' ') text += ' ';
      text += piece;
      const auto ws = nlu::words(piece);
      for (std::size_t k = 0; k < ws.size(); ++k) {
        s.tokens.push_back(ws[k]);
        s.tags.push_back(type.empty() ? "O" : (k == 0 ? "B-" : "I-") + type);
      }
    };
    if (!prefix.empty()) append(prefix, "");
    for (const auto& [slot, piece] : parts_of(t.text)) {
      if (slot) {
        const std::string& type = kSlotType.at(piece);
        append(pick(rng, values.at(type)), type);
      } else {
        append(piece, "");
      }
    }
    const std::string key = nlu::join(s.tokens);
    if (!seen.insert(key).second) continue;
    if (rng.bernoulli(0.5)) text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    text += pick(rng, kEndings);
    if (nlu::words(text) != s.tokens) throw std::logic_error("nlu corpus: misaligned template " + t.text);
    out.intents.push_back({text, intent});
    out.entities.push_back(std::move(s));
  }
  return out;
}

std::pair<NluCorpus, NluCorpus> split_corpus(const NluCorpus& c, double train_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(c.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const auto cut = static_cast<std::size_t>(train_fraction * static_cast<double>(c.size()));
  std::pair<NluCorpus, NluCorpus> out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    NluCorpus& dst = k < cut ? out.first : out.second;
    dst.intents.push_back(c.intents[order[k]]);
    dst.entities.push_back(c.entities[order[k]]);
  }
  return out;
}

std::vector<nlu::LabeledText> generate_dialogue_acts(std::size_t n, std::size_t classes, std::uint64_t seed) {
  static const std::vector<std::string> subjects = {"i", "my brother", "my wife", "we", "they", "my friend",
                                                    "the kids", "our neighbor"};
  static const std::vector<std::string> verbs = {"like", "watch", "visit", "cook", "read", "play", "buy", "need"};
  static const std::vector<std::string> objects = {"the news", "pasta", "old movies", "the garden", "a new car",
                                                   "board games", "that show", "the city", "fresh bread"};
  static const std::vector<std::string> times = {"", "yesterday", "every day", "last week", "on sundays",
                                                 "sometimes", "a lot"};
  static const std::vector<std::string> adjectives = {"good", "expensive", "boring", "great", "hard",
                                                      "important", "fun", "strange"};
  static const std::vector<std::string> acks = {"uh-huh", "yeah", "right", "okay", "i see", "mm-hmm",
                                                "got it", "oh really", "sure", "yes", "oh okay", "alright"};
  static const std::vector<std::string> greets = {"hello", "hi", "nice to meet you", "good morning",
                                                  "hi there", "good evening", "hey", "hello there"};
  static const std::vector<std::string> labels = {"statement", "yes_no_question", "wh_question",
                                                  "acknowledge", "opinion", "greeting"};
  if (classes < 2 || classes > labels.size()) throw std::invalid_argument("dialogue acts: classes must be 2..6");
  Rng rng(seed);
  std::vector<nlu::LabeledText> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % classes;
    std::string text;
    const std::string t = pick(rng, times);
    switch (k) {
      case 0:
        text = pick(rng, subjects) + " " + pick(rng, verbs) + " " + pick(rng, objects) + (t.empty() ? "" : " " + t);
        break;
      case 1:
        text = pick(rng, std::vector<std::string>{"do you", "did you", "can you", "would you"}) + " " +
               pick(rng, verbs) + " " + pick(rng, objects) + (t.empty() ? "" : " " + t);
        break;
      case 2:
        text = pick(rng, std::vector<std::string>{"what do you", "why do you", "where do you", "how do you",
                                                  "when do you"}) +
               " " + pick(rng, verbs) + (rng.bernoulli(0.5) ? " " + pick(rng, objects) : "");
        break;
      case 3:
        text = pick(rng, acks);
        break;
      case 4:
        text = pick(rng, std::vector<std::string>{"i think", "in my opinion", "i believe", "i guess"}) + " " +
               pick(rng, objects) + " " + pick(rng, std::vector<std::string>{"is", "are", "seems"}) + " " +
               pick(rng, adjectives);
        break;
      default:
        text = pick(rng, greets);
        break;
    }
    out.push_back({text, labels[k]});
  }
  return out;
}

namespace {

const std::vector<std::string> kPositive = {"wonderful", "amazing", "brilliant", "great", "excellent",
                                            "superb", "touching", "beautiful", "delightful", "fantastic",
                                            "enjoyable", "charming", "moving", "clever", "perfect", "gripping"};
const std::vector<std::string> kNegative = {"terrible", "boring", "awful", "horrible", "dull", "bad",
                                            "stupid", "disappointing", "poor", "predictable", "weak",
                                            "annoying", "pointless", "ugly", "messy", "lifeless"};
const std::vector<std::string> kAspects = {"acting", "plot", "story", "script", "cast", "ending",
                                           "soundtrack", "direction", "dialogue", "pacing", "camera work"};
const std::vector<std::string> kTopics = {"a family", "a war", "a murder", "two friends", "a small town",
                                          "love", "a heist", "terrorism", "a journey", "a school",
                                          "a robbery", "an old man"};

std::string review_sentence(Rng& rng, bool positive) {
  const auto& adj = positive ? kPositive : kNegative;
  switch (rng.below(6)) {
    case 0:
      return "the " + pick(rng, kAspects) + " was " + pick(rng, adj);
    case 1:
      return std::string(positive ? "i loved" : "i hated") + " this " + (rng.bernoulli(0.5) ? "film" : "movie");
    case 2:
      return "a " + pick(rng, adj) + " movie with " + pick(rng, adj) + " " + pick(rng, kAspects);
    case 3:
      return "overall " + pick(rng, adj);
    case 4:
      return std::string(positive ? "i would watch it again" : "a complete waste of time");
    default:
      return "the " + pick(rng, kAspects) + " is " + pick(rng, adj) + " and " + pick(rng, adj);
  }
}

}  // namespace

std::vector<nlu::SentimentText> generate_reviews(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<nlu::SentimentText> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool positive = i % 2 == 0;
    std::string text = "this is a movie about " + pick(rng, kTopics) + ".";
    const std::size_t sentences = 2 + rng.below(4);
    for (std::size_t k = 0; k < sentences; ++k) {
      // a minority of sentences argue the other way
      const bool polarity = rng.bernoulli(0.8) ? positive : !positive;
      text += " " + review_sentence(rng, polarity) + ".";
    }
    out.push_back({positive ? 1 : 0, text});
  }
  return out;
}

std::vector<std::string> generate_evidence_corpus(std::uint64_t seed) {
  // (thing, share of positive snippets)
  static const std::vector<std::pair<std::string, double>> things = {
      {"Matrix", 0.8},      {"Titanic", 0.6},     {"Star Wars", 0.85}, {"Stephen King", 0.7},
      {"George Orwell", 0.7}, {"pizza", 0.9},     {"coffee", 0.75},    {"Elon Musk", 0.5},
      {"climate change", 0.3}, {"terrorism", 0.1}, {"murder", 0.05},   {"war", 0.15},
      {"puppies", 0.95},    {"football", 0.7},    {"jazz", 0.65},      {"Bitcoin", 0.45}};
  Rng rng(seed);
  std::vector<std::string> out;
  for (const auto& [thing, share] : things) {
    for (int k = 0; k < 12; ++k) {
      const bool positive = rng.bernoulli(share);
      const auto& adj = positive ? kPositive : kNegative;
      switch (rng.below(3)) {
        case 0:
          out.push_back(thing + " is " + pick(rng, adj));
          break;
        case 1:
          out.push_back(std::string(positive ? "i loved" : "i hated") + " everything about " + thing);
          break;
        default:
          out.push_back("people say " + thing + " is " + pick(rng, adj) + " and " + pick(rng, adj));
          break;
      }
    }
  }
  rng.shuffle(out);
  return out;
}

}  // namespace topicflow::synth
