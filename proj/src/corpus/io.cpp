#include <sxtract/corpus/io.hpp>

#include <sxtract/error.hpp>

#include <json.hpp>

#include <fstream>

namespace sxtract::corpus {
namespace {

using nlohmann::json;

json label_json(const SpanLabel& l) {
  return json{{"turn", l.turn},
              {"start", l.start},
              {"end", l.end},
              {"symptom", l.symptom},
              {"status", std::string(to_string(l.status))}};
}

json labels_json(const std::vector<SpanLabel>& labels) {
  json arr = json::array();
  for (const auto& l : labels) arr.push_back(label_json(l));
  return arr;
}

class Reader {
 public:
  Reader(const std::string& source, int line) : prefix_(source + ":" + std::to_string(line) + ": ") {}

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw ParseError(prefix_ + path + ": " + what);
  }

  const json& field(const json& obj, const std::string& path, const char* key) const {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing field");
    return *it;
  }

  std::string str(const json& v, const std::string& path) const {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  int integer(const json& v, const std::string& path) const {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
  }

  const json& array(const json& v, const std::string& path) const {
    if (!v.is_array()) fail(path, "expected an array");
    return v;
  }

  SpanLabel label(const json& v, const std::string& path, const Conversation& conv, const Ontology* ontology) const {
    SpanLabel l;
    l.turn = integer(field(v, path, "turn"), path + ".turn");
    l.start = integer(field(v, path, "start"), path + ".start");
    l.end = integer(field(v, path, "end"), path + ".end");
    l.symptom = str(field(v, path, "symptom"), path + ".symptom");
    try {
      l.status = parse_status(str(field(v, path, "status"), path + ".status"));
    } catch (const ParseError& e) {
      if (std::string(e.what()).starts_with(prefix_)) throw;
      fail(path + ".status", e.what());
    }
    if (l.start < 0) fail(path + ".start", "negative span index");
    if (l.end < 0) fail(path + ".end", "negative span index");
    if (std::string problem = validate_label(l, conv, ontology); !problem.empty()) fail(path, problem);
    return l;
  }

  std::vector<SpanLabel> labels(const json& v, const std::string& path, const Conversation& conv,
                                const Ontology* ontology) const {
    std::vector<SpanLabel> out;
    const json& arr = array(v, path);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(label(arr[i], path + "[" + std::to_string(i) + "]", conv, ontology));
    }
    return out;
  }

 private:
  std::string prefix_;
};

}  // namespace

std::string to_json_line(const AnnotatedConversation& ac) {
  json turns = json::array();
  for (const Turn& t : ac.conversation.turns) {
    turns.push_back(json{{"speaker", std::string(to_string(t.speaker))}, {"tokens", t.tokens}});
  }
  json annotations = json::object();
  json mentions = json::object();
  for (const auto& [annotator, labels] : ac.annotations) {
    annotations[annotator] = labels_json(labels);
    json m = json::array();
    for (const auto& [key, count] : mentions_from_labels(labels)) {
      m.push_back(json{{"symptom", key.symptom}, {"status", std::string(to_string(key.status))}, {"count", count}});
    }
    mentions[annotator] = std::move(m);
  }
  json record{{"id", ac.conversation.id}, {"turns", std::move(turns)}, {"annotations", std::move(annotations)},
              {"mentions", std::move(mentions)}};
  if (ac.truth) record["truth"] = labels_json(*ac.truth);
  return record.dump();
}

AnnotatedConversation from_json_line(std::string_view line, const std::string& source, int line_number,
                                     const Ontology* ontology) {
  Reader r(source, line_number);
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    r.fail("<record>", std::string("invalid JSON: ") + e.what());
  }
  AnnotatedConversation ac;
  ac.conversation.id = r.str(r.field(rec, "<record>", "id"), "id");
  const json& turns = r.array(r.field(rec, "<record>", "turns"), "turns");
  if (turns.empty()) r.fail("turns", "conversation must have at least one turn");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const std::string path = "turns[" + std::to_string(i) + "]";
    Turn t;
    try {
      t.speaker = parse_speaker(r.str(r.field(turns[i], path, "speaker"), path + ".speaker"));
    } catch (const ParseError& e) {
      if (std::string(e.what()).find(path) != std::string::npos) throw;
      r.fail(path + ".speaker", e.what());
    }
    const json& toks = r.array(r.field(turns[i], path, "tokens"), path + ".tokens");
    if (toks.empty()) r.fail(path + ".tokens", "turn must be nonempty");
    for (std::size_t k = 0; k < toks.size(); ++k) {
      t.tokens.push_back(r.str(toks[k], path + ".tokens[" + std::to_string(k) + "]"));
    }
    ac.conversation.turns.push_back(std::move(t));
  }
  const json& annotations = r.field(rec, "<record>", "annotations");
  if (!annotations.is_object()) r.fail("annotations", "expected an object");
  for (const auto& [annotator, labels] : annotations.items()) {
    ac.annotations[annotator] = r.labels(labels, "annotations." + annotator, ac.conversation, ontology);
  }
  if (auto it = rec.find("mentions"); it != rec.end()) {
    if (!it->is_object()) r.fail("mentions", "expected an object");
    for (const auto& [annotator, stored] : it->items()) {
      const std::string path = "mentions." + annotator;
      auto a = ac.annotations.find(annotator);
      if (a == ac.annotations.end()) r.fail(path, "no annotations for this annotator");
      MentionSet declared;
      const json& arr = r.array(stored, path);
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        MentionKey key;
        key.symptom = r.str(r.field(arr[i], p, "symptom"), p + ".symptom");
        try {
          key.status = parse_status(r.str(r.field(arr[i], p, "status"), p + ".status"));
        } catch (const ParseError& e) {
          if (std::string(e.what()).find(p) != std::string::npos) throw;
          r.fail(p + ".status", e.what());
        }
        const int count = r.integer(r.field(arr[i], p, "count"), p + ".count");
        if (count < 1) r.fail(p + ".count", "count must be >= 1");
        declared.add(key, count);
      }
      if (!(declared == mentions_from_labels(a->second))) {
        r.fail(path, "stored mention set does not match the span labels");
      }
    }
  }
  if (auto it = rec.find("truth"); it != rec.end()) {
    ac.truth = r.labels(*it, "truth", ac.conversation, ontology);
  }
  return ac;
}

void write_corpus(const std::filesystem::path& path, const std::vector<AnnotatedConversation>& corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& ac : corpus) out << to_json_line(ac) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

std::vector<AnnotatedConversation> read_corpus(const std::filesystem::path& path, const Ontology* ontology) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<AnnotatedConversation> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(from_json_line(line, path.string(), lineno, ontology));
  }
  return out;
}

}  // namespace sxtract::corpus
