#include <sxtract/corpus/ontology.hpp>

#include <sxtract/error.hpp>

#include <fstream>
#include <sstream>

namespace sxtract::corpus {

const std::vector<std::string>& body_system_names() {
  static const std::vector<std::string> names = {
      "musculo-skeletal", "respiratory",   "gastrointestinal", "cardiovascular", "constitutional",
      "neurological",     "eyes",          "ent",              "genitourinary",  "skin",
      "psychiatric",      "endocrine",     "hematologic",      "allergic-immunologic"};
  return names;
}

int Ontology::add(std::string symptom, std::string body_system) {
  if (symptom.empty() || body_system.empty()) throw Error("ontology: empty symptom or body system");
  if (symptom_index_.contains(symptom)) throw Error("ontology: duplicate symptom '" + symptom + "'");
  int sys = 0;
  if (auto it = system_index_.find(body_system); it != system_index_.end()) {
    sys = it->second;
  } else {
    sys = static_cast<int>(systems_.size());
    system_index_.emplace(body_system, sys);
    systems_.push_back(std::move(body_system));
  }
  const int id = size();
  symptom_index_.emplace(symptom, id);
  symptoms_.push_back(std::move(symptom));
  symptom_system_.push_back(sys);
  return id;
}

int Ontology::id_of(std::string_view symptom) const {
  auto it = symptom_index_.find(std::string(symptom));
  return it == symptom_index_.end() ? -1 : it->second;
}

const std::string& Ontology::body_system(std::string_view symptom) const {
  const int id = id_of(symptom);
  if (id < 0) throw Error("ontology: unknown symptom '" + std::string(symptom) + "'");
  return systems_[static_cast<std::size_t>(symptom_system_[static_cast<std::size_t>(id)])];
}

std::vector<int> Ontology::symptoms_in_system(int system) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (symptom_system_[static_cast<std::size_t>(i)] == system) out.push_back(i);
  }
  return out;
}

std::string Ontology::to_tsv() const {
  std::string out;
  for (int i = 0; i < size(); ++i) {
    out += symptom(i);
    out += '\t';
    out += system_name(system_of(i));
    out += '\n';
  }
  return out;
}

Ontology Ontology::from_tsv(std::string_view text, const std::string& source) {
  Ontology o;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size() ||
        line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": expected 'symptom<TAB>body_system'");
    }
    try {
      o.add(line.substr(0, tab), line.substr(tab + 1));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return o;
}

void Ontology::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << to_tsv();
}

Ontology Ontology::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_tsv(ss.str(), path.string());
}

}  // namespace sxtract::corpus
