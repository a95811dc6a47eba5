#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sxtract::corpus {

/// Symptom inventory; each symptom is owned by exactly one body system.
/// Symptom ids look like "sym:musculo-skeletal:pain" and are indexed densely
/// in insertion order.
class Ontology {
 public:
  /// Registers a symptom under a body system, creating the system if needed.
  int add(std::string symptom, std::string body_system);

  int size() const { return static_cast<int>(symptoms_.size()); }
  int system_count() const { return static_cast<int>(systems_.size()); }
  const std::string& symptom(int id) const { return symptoms_.at(static_cast<std::size_t>(id)); }
  /// -1 when unknown.
  int id_of(std::string_view symptom) const;
  bool contains(std::string_view symptom) const { return id_of(symptom) >= 0; }
  int system_of(int id) const { return symptom_system_.at(static_cast<std::size_t>(id)); }
  const std::string& system_name(int system) const { return systems_.at(static_cast<std::size_t>(system)); }
  /// Body system of a symptom id; throws Error for unknown symptoms.
  const std::string& body_system(std::string_view symptom) const;
  std::vector<int> symptoms_in_system(int system) const;

  /// One "symptom<TAB>body_system" line per symptom.
  std::string to_tsv() const;
  static Ontology from_tsv(std::string_view text, const std::string& source = "<ontology>");
  void write(const std::filesystem::path& path) const;
  static Ontology read(const std::filesystem::path& path);

  friend bool operator==(const Ontology& a, const Ontology& b) {
    return a.symptoms_ == b.symptoms_ && a.symptom_system_ == b.symptom_system_ && a.systems_ == b.systems_;
  }

 private:
  std::vector<std::string> symptoms_;
  std::vector<int> symptom_system_;
  std::vector<std::string> systems_;
  std::unordered_map<std::string, int> symptom_index_;
  std::unordered_map<std::string, int> system_index_;
};

/// Names of the 14 body systems used by the full-size ontology preset.
const std::vector<std::string>& body_system_names();

}  // namespace sxtract::corpus
