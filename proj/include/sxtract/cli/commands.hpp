#pragma once

#include <sxtract/corpus/asr.hpp>
#include <sxtract/corpus/generator.hpp>
#include <sxtract/error.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace sxtract::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitVerification = 2, kExitNumerical = 3 };

/// A verification suite or a report invariant did not hold.
class VerificationError : public Error {
 public:
  using Error::Error;
};

/// Runs a command and maps exceptions to exit codes, printing the message.
int run_guarded(const std::function<int()>& command, std::ostream& err);

/// Output directory assembled under a temporary sibling and renamed into
/// place by commit(). An uncommitted directory is removed on destruction.
class OutputDir {
 public:
  explicit OutputDir(fs::path target);
  ~OutputDir();
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  fs::path path(const std::string& name) const { return staging_ / name; }
  void write(const std::string& name, const std::string& content) const;
  /// Replaces any existing directory at the target.
  void commit();

 private:
  fs::path target_;
  fs::path staging_;
  bool committed_ = false;
};

// Generator and ASR configs share the "key = value" format of the model configs.
void set_generator_option(corpus::GeneratorConfig& config, const std::string& key, const std::string& value);
std::string generator_config_text(const corpus::GeneratorConfig& config);
void set_asr_option(corpus::AsrNoiseConfig& config, const std::string& key, const std::string& value);
std::string asr_config_text(const corpus::AsrNoiseConfig& config);

/// "key=value" command-line overrides, applied after the config file.
struct Overrides {
  fs::path config_file;
  std::vector<std::string> settings;
};

corpus::GeneratorConfig load_generator_config(const Overrides& o);
corpus::AsrNoiseConfig load_asr_config(const Overrides& o);

struct GenerateArgs {
  Overrides config;
  std::uint64_t seed = 0;
  fs::path out;
};

struct TrainArgs {
  /// sat, seq2seq, baseline_crossproduct or baseline_bodysystem.
  std::string model_type;
  fs::path data;
  Overrides config;
  std::uint64_t seed = 0;
  fs::path out;
  fs::path pretrained_encoder;
};

struct PretrainArgs {
  fs::path data;
  Overrides config;
  std::uint64_t seed = 0;
  fs::path out;
};

struct EvaluateArgs {
  fs::path model;
  fs::path data;
  std::string split = "test";
  /// Empty means every mode.
  std::vector<std::string> modes;
  bool project_body_system = false;
  bool asr_sim = false;
  Overrides asr;
  /// Seeds the single-annotator draw and the ASR simulation.
  std::uint64_t seed = 0;
  fs::path compare;
  bool export_attention = false;
  fs::path out;
};

struct VerifyArgs {
  std::uint64_t seed = 1;
  int grad_seeds = 20;
  int crf_draws = 1000;
};

int cmd_generate(const GenerateArgs& args, std::ostream& log);
int cmd_train(const TrainArgs& args, std::ostream& log);
int cmd_pretrain(const PretrainArgs& args, std::ostream& log);
int cmd_evaluate(const EvaluateArgs& args, std::ostream& log);
/// kExitVerification when any suite fails.
int cmd_verify(const VerifyArgs& args, std::ostream& log);

}  // namespace sxtract::cli
