#include <sxtract/sat/config.hpp>

#include <sxtract/error.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace sxtract {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string num(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text, const std::string& source) {
  KeyValues kv;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ParseError(source + ":" + std::to_string(lineno) + ": empty key");
    kv.entries.emplace_back(std::move(key), trim(std::string_view(line).substr(eq + 1)));
  }
  return kv;
}

KeyValues KeyValues::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

int parse_int_value(const std::string& key, const std::string& value) {
  const std::int64_t v = parse_int64_value(key, value);
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(key + ": value out of range: " + value);
  return static_cast<int>(v);
}

std::int64_t parse_int64_value(const std::string& key, const std::string& value) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": expected an integer, got '" + value + "'");
  }
  return v;
}

double parse_double_value(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
}

}  // namespace sxtract

namespace sxtract::sat {

std::string_view to_string(Pooling p) {
  switch (p) {
    case Pooling::kMean:
      return "mean";
    case Pooling::kSum:
      return "sum";
    case Pooling::kFinalState:
      return "final_state";
  }
  return "?";
}

std::string_view to_string(CurriculumShape s) { return s == CurriculumShape::kLinear ? "linear" : "exponential"; }

void CurriculumSchedule::validate() const {
  if (!(p_start <= 1.0 && p_start >= p_end && p_end >= 0.0)) {
    throw ConfigError("curriculum: need 1 >= p_start >= p_end >= 0, got p_start=" + num(p_start) +
                      " p_end=" + num(p_end));
  }
  if (decay_steps < 0) throw ConfigError("curriculum: decay_steps must be >= 0");
}

void SatConfig::validate() const {
  if (word_emb_dim < 1 || lstm_hidden < 1 || enc_layers < 1 || ff_dim < 1) {
    throw ConfigError("sat config: all dimensions must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("sat config: dropout must be in [0,1)");
  if (!(alpha > 0.0)) throw ConfigError("sat config: alpha must be > 0");
  if (!(learning_rate > 0.0)) throw ConfigError("sat config: learning_rate must be > 0");
  if (l2 < 0 || weight_noise_std < 0) throw ConfigError("sat config: l2 and weight_noise_std must be >= 0");
  if (input_turns < 0) throw ConfigError("sat config: input_turns must be >= 0");
  if (epochs < 0 || batch_size < 1) throw ConfigError("sat config: need epochs >= 0 and batch_size >= 1");
  curriculum.validate();
}

void SatConfig::set(const std::string& key, const std::string& value) {
  if (key == "word_emb_dim") {
    word_emb_dim = parse_int_value(key, value);
  } else if (key == "lstm_hidden") {
    lstm_hidden = parse_int_value(key, value);
  } else if (key == "enc_layers") {
    enc_layers = parse_int_value(key, value);
  } else if (key == "ff_dim") {
    ff_dim = parse_int_value(key, value);
  } else if (key == "dropout") {
    dropout = parse_double_value(key, value);
  } else if (key == "l2") {
    l2 = parse_double_value(key, value);
  } else if (key == "weight_noise_std") {
    weight_noise_std = parse_double_value(key, value);
  } else if (key == "alpha") {
    alpha = parse_double_value(key, value);
  } else if (key == "learning_rate") {
    learning_rate = parse_double_value(key, value);
  } else if (key == "pooling") {
    if (value == "mean") {
      pooling = Pooling::kMean;
    } else if (value == "sum") {
      pooling = Pooling::kSum;
    } else if (value == "final_state") {
      pooling = Pooling::kFinalState;
    } else {
      throw ConfigError("pooling: expected mean, sum or final_state, got '" + value + "'");
    }
  } else if (key == "input_turns") {
    input_turns = parse_int_value(key, value);
  } else if (key == "curriculum.p_start") {
    curriculum.p_start = parse_double_value(key, value);
  } else if (key == "curriculum.p_end") {
    curriculum.p_end = parse_double_value(key, value);
  } else if (key == "curriculum.decay_steps") {
    curriculum.decay_steps = parse_int64_value(key, value);
  } else if (key == "curriculum.shape") {
    if (value == "linear") {
      curriculum.shape = CurriculumShape::kLinear;
    } else if (value == "exponential") {
      curriculum.shape = CurriculumShape::kExponential;
    } else {
      throw ConfigError("curriculum.shape: expected linear or exponential, got '" + value + "'");
    }
  } else if (key == "epochs") {
    epochs = parse_int_value(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_int_value(key, value);
  } else {
    throw ConfigError("unknown sat config key '" + key + "'");
  }
}

void SatConfig::apply(const KeyValues& kv) {
  for (const auto& [k, v] : kv.entries) set(k, v);
  validate();
}

std::string SatConfig::to_text() const {
  std::ostringstream o;
  o << "word_emb_dim = " << word_emb_dim << '\n'
    << "lstm_hidden = " << lstm_hidden << '\n'
    << "enc_layers = " << enc_layers << '\n'
    << "ff_dim = " << ff_dim << '\n'
    << "dropout = " << num(dropout) << '\n'
    << "l2 = " << num(l2) << '\n'
    << "weight_noise_std = " << num(weight_noise_std) << '\n'
    << "alpha = " << num(alpha) << '\n'
    << "learning_rate = " << num(learning_rate) << '\n'
    << "pooling = " << to_string(pooling) << '\n'
    << "input_turns = " << input_turns << '\n'
    << "curriculum.p_start = " << num(curriculum.p_start) << '\n'
    << "curriculum.p_end = " << num(curriculum.p_end) << '\n'
    << "curriculum.decay_steps = " << curriculum.decay_steps << '\n'
    << "curriculum.shape = " << to_string(curriculum.shape) << '\n'
    << "epochs = " << epochs << '\n'
    << "batch_size = " << batch_size << '\n';
  return o.str();
}

}  // namespace sxtract::sat
