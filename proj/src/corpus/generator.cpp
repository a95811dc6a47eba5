#include <sxtract/corpus/generator.hpp>

#include <sxtract/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace sxtract::corpus {
namespace {

using Rng = std::mt19937_64;
using Template = std::vector<std::string>;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Template words(const std::string& s) {
  std::istringstream in(s);
  Template out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::vector<Template> templates(std::initializer_list<const char*> lines) {
  std::vector<Template> out;
  for (const char* l : lines) out.push_back(words(l));
  return out;
}

const std::vector<Template>& explicit_templates(Status s) {
  static const std::vector<Template> experienced = templates({
      "i have been having {sx} for a few days",
      "my {sx} is getting worse",
      "yes i have {sx}",
      "the {sx} started last week",
      "i keep getting {sx} at night",
  });
  static const std::vector<Template> negated = templates({
      "no {sx} at all",
      "i do not have any {sx}",
      "i have never had {sx}",
      "no i have not noticed any {sx}",
  });
  static const std::vector<Template> other = templates({
      "my mother had {sx}",
      "i am not sure if it is {sx}",
      "the {sx} was a long time ago",
      "my husband gets {sx}",
  });
  switch (s) {
    case Status::kExperienced:
      return experienced;
    case Status::kNotExperienced:
      return negated;
    case Status::kOther:
      return other;
  }
  return experienced;
}

const std::vector<Template>& question_templates() {
  static const std::vector<Template> t = templates({
      "any trouble with your {sx} ?",
      "how is your {sx} ?",
      "what about your {sx} ?",
  });
  return t;
}

const std::vector<Template>& answer_templates(Status s) {
  static const std::vector<Template> experienced = templates({
      "well sort of",
      "yes a little bit",
      "yeah it has been bothering me",
  });
  static const std::vector<Template> negated = templates({
      "no not really",
      "no it is fine",
      "nope all good",
  });
  static const std::vector<Template> other = templates({
      "i am not sure",
      "hard to say",
      "my sister has trouble with that",
  });
  switch (s) {
    case Status::kExperienced:
      return experienced;
    case Status::kNotExperienced:
      return negated;
    case Status::kOther:
      return other;
  }
  return experienced;
}

const std::vector<Template>& filler_templates(Speaker s) {
  static const std::vector<Template> doctor = templates({
      "how are you doing today",
      "let me take a look",
      "any other questions for me",
      "we will check your blood work",
      "take this twice a day with food",
      "let us talk about your medications",
      "how has work been",
      "okay sounds good",
      "i will send the prescription to your pharmacy",
      "come back in two weeks",
  });
  static const std::vector<Template> patient = templates({
      "i am doing okay",
      "thank you doctor",
      "that sounds good",
      "i have been busy with work",
      "i ran out of my pills",
      "my daughter drove me here",
      "okay",
      "sure",
      "i walk every morning",
      "i have been eating better",
  });
  static const std::vector<Template> other = templates({
      "she has been taking her medicine",
      "i am her daughter",
      "he sleeps most of the day",
      "we came in together",
  });
  switch (s) {
    case Speaker::kDoctor:
      return doctor;
    case Speaker::kPatient:
      return patient;
    case Speaker::kOther:
      return other;
  }
  return doctor;
}

std::set<std::string> template_vocabulary() {
  std::set<std::string> v;
  auto absorb = [&](const std::vector<Template>& ts) {
    for (const auto& t : ts) v.insert(t.begin(), t.end());
  };
  for (Status s : {Status::kExperienced, Status::kNotExperienced, Status::kOther}) {
    absorb(explicit_templates(s));
    absorb(answer_templates(s));
  }
  absorb(question_templates());
  for (Speaker s : {Speaker::kDoctor, Speaker::kPatient, Speaker::kOther}) absorb(filler_templates(s));
  return v;
}

std::string pseudo_word(Rng& rng) {
  static const char* onsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "ch"};
  static const char* vowels[] = {"a", "e", "i", "o", "u"};
  std::uniform_int_distribution<int> syllables(2, 3);
  std::uniform_int_distribution<int> onset(0, 15);
  std::uniform_int_distribution<int> vowel(0, 4);
  std::string w;
  const int n = syllables(rng);
  for (int i = 0; i < n; ++i) {
    w += onsets[onset(rng)];
    w += vowels[vowel(rng)];
  }
  return w;
}

template <typename T>
const T& choose(const std::vector<T>& items, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
  return items[d(rng)];
}

int sample_index(const std::vector<double>& weights, Rng& rng) {
  std::discrete_distribution<int> d(weights.begin(), weights.end());
  return d(rng);
}

struct Mention {
  int symptom;
  Status status;
};

// Appends a turn realised from a template, returning the span of {sx} if present.
int append_turn(Conversation& conv, Speaker speaker, const Template& tpl, const std::vector<std::string>& fill,
                int* span_start, int* span_end) {
  Turn turn;
  turn.speaker = speaker;
  for (const std::string& w : tpl) {
    if (w == "{sx}") {
      if (span_start) *span_start = static_cast<int>(turn.tokens.size());
      turn.tokens.insert(turn.tokens.end(), fill.begin(), fill.end());
      if (span_end) *span_end = static_cast<int>(turn.tokens.size());
    } else {
      turn.tokens.push_back(w);
    }
  }
  conv.turns.push_back(std::move(turn));
  return static_cast<int>(conv.turns.size()) - 1;
}

}  // namespace

void GeneratorConfig::validate() const {
  auto rate = [](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ConfigError(std::string("generator: ") + name + " must be in [0,1], got " + std::to_string(v));
    }
  };
  rate("implied_rate", implied_rate);
  rate("negation_rate", negation_rate);
  rate("other_rate", other_rate);
  rate("status_skew", status_skew);
  rate("repeat_rate", repeat_rate);
  rate("other_speaker_rate", other_speaker_rate);
  rate("disagreement_rate", disagreement_rate);
  if (negation_rate + other_rate > 1.0) throw ConfigError("generator: negation_rate + other_rate must be <= 1");
  if (!(mention_rate >= 0.0)) throw ConfigError("generator: mention_rate must be >= 0");
  if (num_systems < 1 || num_symptoms < num_systems) {
    throw ConfigError("generator: need 1 <= num_systems <= num_symptoms");
  }
  if (paraphrases < 1) throw ConfigError("generator: paraphrases must be >= 1");
  if (conversations < 0 || train_size < 0 || dev_size < 0 || test_size < 0) {
    throw ConfigError("generator: split sizes must be >= 0");
  }
  if (annotators < 1) throw ConfigError("generator: annotators must be >= 1");
  if (min_filler_turns < 0 || max_filler_turns < min_filler_turns) {
    throw ConfigError("generator: need 0 <= min_filler_turns <= max_filler_turns");
  }
  if (!(symptom_zipf >= 0.0)) throw ConfigError("generator: symptom_zipf must be >= 0");
}

SyntheticWorld make_world(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(mix_seed(seed, 0));
  SyntheticWorld world;
  std::set<std::string> used = template_vocabulary();
  auto fresh_word = [&]() {
    for (;;) {
      std::string w = pseudo_word(rng);
      if (used.insert(w).second) return w;
    }
  };
  const auto& names = body_system_names();
  std::vector<std::string> systems;
  for (int s = 0; s < config.num_systems; ++s) {
    systems.push_back(s < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(s)]
                                                          : "system-" + std::to_string(s));
  }
  std::bernoulli_distribution two_words(0.3);
  Lexicon& lex = world.lexicon;
  for (int i = 0; i < config.num_symptoms; ++i) {
    std::vector<std::vector<std::string>> variants;
    for (int v = 0; v < config.paraphrases; ++v) {
      std::vector<std::string> phrase{fresh_word()};
      if (two_words(rng)) phrase.push_back(fresh_word());
      variants.push_back(std::move(phrase));
    }
    std::string name;
    for (const auto& w : variants[0]) name += (name.empty() ? "" : "-") + w;
    world.ontology.add("sym:" + systems[static_cast<std::size_t>(i % config.num_systems)] + ":" + name,
                       systems[static_cast<std::size_t>(i % config.num_systems)]);
    lex.paraphrases.push_back(std::move(variants));
    lex.topics.push_back(fresh_word());
  }
  std::vector<int> rank(static_cast<std::size_t>(config.num_symptoms));
  std::iota(rank.begin(), rank.end(), 0);
  std::shuffle(rank.begin(), rank.end(), rng);
  lex.popularity.resize(rank.size());
  for (std::size_t i = 0; i < rank.size(); ++i) {
    lex.popularity[static_cast<std::size_t>(rank[i])] = 1.0 / std::pow(static_cast<double>(i + 1), config.symptom_zipf);
  }
  const std::vector<double> global = {1.0 - config.negation_rate - config.other_rate, config.negation_rate,
                                      config.other_rate};
  for (int i = 0; i < config.num_symptoms; ++i) {
    const int dominant = sample_index(global, rng);
    std::vector<double> mix(kStatusCount);
    for (int s = 0; s < kStatusCount; ++s) {
      mix[static_cast<std::size_t>(s)] =
          (1.0 - config.status_skew) * global[static_cast<std::size_t>(s)] + (s == dominant ? config.status_skew : 0.0);
    }
    lex.status_mix.push_back(std::move(mix));
  }
  return world;
}

std::vector<SpanLabel> perturb_annotation(const std::vector<SpanLabel>& truth, const Conversation& conversation,
                                          const Ontology& ontology, double rate, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution deviate(rate);
  std::uniform_int_distribution<int> kind(0, 2);
  std::vector<SpanLabel> out;
  for (const SpanLabel& label : truth) {
    if (!deviate(rng)) {
      out.push_back(label);
      continue;
    }
    const int k = kind(rng);
    if (k == 0) continue;  // dropped
    SpanLabel l = label;
    if (k == 1) {
      const int id = ontology.id_of(label.symptom);
      std::vector<int> peers = ontology.symptoms_in_system(ontology.system_of(id));
      std::erase(peers, id);
      if (peers.empty()) continue;
      l.symptom = ontology.symptom(choose(peers, rng));
    } else {
      const auto len = static_cast<int>(conversation.turns[static_cast<std::size_t>(l.turn)].tokens.size());
      if (l.end < len) {
        ++l.end;
      } else if (l.start > 0) {
        --l.start;
      } else if (l.end - l.start > 1) {
        --l.end;
      }
    }
    out.push_back(std::move(l));
  }
  return out;
}

std::vector<AnnotatedConversation> generate_conversations(const SyntheticWorld& world, const GeneratorConfig& config,
                                                          int count, int annotators, std::uint64_t seed,
                                                          const std::string& id_prefix) {
  config.validate();
  const Lexicon& lex = world.lexicon;
  std::vector<AnnotatedConversation> corpus;
  corpus.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int c = 0; c < count; ++c) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
    std::poisson_distribution<int> n_mentions_dist(config.mention_rate);
    std::uniform_int_distribution<int> n_filler_dist(config.min_filler_turns, config.max_filler_turns);
    std::bernoulli_distribution implied(config.implied_rate);
    std::bernoulli_distribution repeat(config.repeat_rate);
    std::bernoulli_distribution other_speaker(config.other_speaker_rate);
    std::bernoulli_distribution coin(0.5);

    const int n_mentions = config.mention_rate > 0 ? n_mentions_dist(rng) : 0;
    const int n_filler = n_filler_dist(rng);

    std::vector<Mention> mentions;
    for (int m = 0; m < n_mentions; ++m) {
      if (!mentions.empty() && repeat(rng)) {
        mentions.push_back(choose(mentions, rng));
        continue;
      }
      const int sym = sample_index(lex.popularity, rng);
      const auto status = static_cast<Status>(sample_index(lex.status_mix[static_cast<std::size_t>(sym)], rng));
      mentions.push_back({sym, status});
    }
    // Segment order: -1 = filler turn, otherwise mention index.
    std::vector<int> segments(static_cast<std::size_t>(n_filler), -1);
    for (int m = 0; m < n_mentions; ++m) segments.push_back(m);
    std::shuffle(segments.begin(), segments.end(), rng);
    if (segments.empty()) segments.push_back(-1);

    AnnotatedConversation ac;
    ac.conversation.id = id_prefix + std::to_string(c);
    std::vector<SpanLabel> truth;
    for (int seg : segments) {
      Conversation& conv = ac.conversation;
      if (seg < 0) {
        Speaker sp = coin(rng) ? Speaker::kDoctor : Speaker::kPatient;
        if (other_speaker(rng)) sp = Speaker::kOther;
        append_turn(conv, sp, choose(filler_templates(sp), rng), {}, nullptr, nullptr);
        continue;
      }
      const Mention& m = mentions[static_cast<std::size_t>(seg)];
      SpanLabel label;
      label.symptom = world.ontology.symptom(m.symptom);
      label.status = m.status;
      if (implied(rng)) {
        const std::vector<std::string> topic{lex.topics[static_cast<std::size_t>(m.symptom)]};
        label.turn = append_turn(conv, Speaker::kDoctor, choose(question_templates(), rng), topic, &label.start,
                                 &label.end);
        append_turn(conv, Speaker::kPatient, choose(answer_templates(m.status), rng), {}, nullptr, nullptr);
      } else {
        const auto& phrase = choose(lex.paraphrases[static_cast<std::size_t>(m.symptom)], rng);
        const Speaker sp = other_speaker(rng) ? Speaker::kOther : Speaker::kPatient;
        label.turn = append_turn(conv, sp, choose(explicit_templates(m.status), rng), phrase, &label.start,
                                 &label.end);
      }
      truth.push_back(std::move(label));
    }
    for (int a = 0; a < annotators; ++a) {
      ac.annotations["a" + std::to_string(a)] =
          perturb_annotation(truth, ac.conversation, world.ontology, config.disagreement_rate, rng());
    }
    ac.truth = std::move(truth);
    corpus.push_back(std::move(ac));
  }
  return corpus;
}

std::vector<AnnotatedConversation> generate_corpus(const GeneratorConfig& config, std::uint64_t seed) {
  SyntheticWorld world = make_world(config, seed);
  return generate_conversations(world, config, config.conversations, config.annotators, mix_seed(seed, 1), "conv-");
}

CorpusSplits generate_splits(const GeneratorConfig& config, std::uint64_t seed) {
  SyntheticWorld world = make_world(config, seed);
  CorpusSplits out;
  out.train = generate_conversations(world, config, config.train_size, 1, mix_seed(seed, 11), "train-");
  out.dev = generate_conversations(world, config, config.dev_size, 3, mix_seed(seed, 12), "dev-");
  out.test = generate_conversations(world, config, config.test_size, 3, mix_seed(seed, 13), "test-");
  out.ontology = std::move(world.ontology);
  return out;
}

}  // namespace sxtract::corpus
