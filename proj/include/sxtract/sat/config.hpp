#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sxtract {

/// "key = value" text. Blank lines and lines starting with '#' are ignored.
struct KeyValues {
  std::vector<std::pair<std::string, std::string>> entries;

  /// Throws ParseError("<source>:<line>: ...") for lines without '='.
  static KeyValues parse(std::string_view text, const std::string& source = "<config>");
  static KeyValues read(const std::filesystem::path& path);
};

// Strict scalar parsing; ConfigError names the key.
int parse_int_value(const std::string& key, const std::string& value);
std::int64_t parse_int64_value(const std::string& key, const std::string& value);
double parse_double_value(const std::string& key, const std::string& value);

}  // namespace sxtract

namespace sxtract::sat {

enum class Pooling { kMean, kSum, kFinalState };
enum class CurriculumShape { kLinear, kExponential };

std::string_view to_string(Pooling p);
std::string_view to_string(CurriculumShape s);

/// Probability of feeding gold spans to the attribute heads as training progresses.
struct CurriculumSchedule {
  double p_start = 1.0;
  double p_end = 0.1;
  /// 0 means "ten epochs' worth of optimizer steps", resolved by the trainer.
  std::int64_t decay_steps = 0;
  CurriculumShape shape = CurriculumShape::kLinear;

  void validate() const;
};

/// Hyperparameters shared by the SA-T model and the two tagging baselines.
struct SatConfig {
  int word_emb_dim = 256;
  int lstm_hidden = 1024;
  int enc_layers = 1;
  int ff_dim = 256;
  double dropout = 0.4;
  double l2 = 1e-4;
  double weight_noise_std = 1e-3;
  double alpha = 0.01;
  double learning_rate = 1e-2;
  Pooling pooling = Pooling::kMean;
  /// Consecutive turns per input unit; 0 feeds the whole conversation.
  int input_turns = 1;
  CurriculumSchedule curriculum;
  int epochs = 30;
  int batch_size = 8;

  void validate() const;
  /// Throws ConfigError for unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  void apply(const KeyValues& kv);
  /// Every key in a fixed order; parse(to_text()) round-trips.
  std::string to_text() const;
};

}  // namespace sxtract::sat
