#include <sxtract/cli/commands.hpp>

#include <sxtract/cli/verify.hpp>
#include <sxtract/corpus/io.hpp>
#include <sxtract/corpus/references.hpp>
#include <sxtract/corpus/transfer.hpp>
#include <sxtract/metrics/agreement.hpp>
#include <sxtract/metrics/report.hpp>
#include <sxtract/nn/checkpoint.hpp>
#include <sxtract/sat/baseline.hpp>
#include <sxtract/sat/config.hpp>
#include <sxtract/sat/sat_model.hpp>
#include <sxtract/sat/training.hpp>
#include <sxtract/seq2seq/pretrain.hpp>
#include <sxtract/seq2seq/seq2seq_model.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace sxtract::cli {

using metrics::format_double;

int run_guarded(const std::function<int()>& command, std::ostream& err) {
  try {
    return command();
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const VerificationError& e) {
    err << "verification failure: " << e.what() << "\n";
    return kExitVerification;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

OutputDir::OutputDir(fs::path target) : target_(std::move(target)) {
  if (target_.empty()) throw ConfigError("output directory not given");
  const fs::path parent = fs::absolute(target_).parent_path();
  fs::create_directories(parent);
  staging_ = parent / ("." + target_.filename().string() + ".tmp." + std::to_string(::getpid()));
  fs::remove_all(staging_);
  fs::create_directory(staging_);
}

OutputDir::~OutputDir() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void OutputDir::write(const std::string& name, const std::string& content) const {
  std::ofstream out(path(name), std::ios::binary);
  out << content;
  if (!out) throw Error("cannot write " + path(name).string());
}

void OutputDir::commit() {
  const fs::path target = fs::absolute(target_);
  fs::path old;
  if (fs::exists(target)) {
    old = target.parent_path() / ("." + target.filename().string() + ".old." + std::to_string(::getpid()));
    fs::remove_all(old);
    fs::rename(target, old);
  }
  fs::rename(staging_, target);
  committed_ = true;
  if (!old.empty()) fs::remove_all(old);
}

void set_generator_option(corpus::GeneratorConfig& c, const std::string& key, const std::string& value) {
  const std::map<std::string, int*> ints{
      {"num_symptoms", &c.num_symptoms},     {"num_systems", &c.num_systems},
      {"paraphrases", &c.paraphrases},       {"conversations", &c.conversations},
      {"annotators", &c.annotators},         {"train_size", &c.train_size},
      {"dev_size", &c.dev_size},             {"test_size", &c.test_size},
      {"min_filler_turns", &c.min_filler_turns}, {"max_filler_turns", &c.max_filler_turns},
  };
  const std::map<std::string, double*> reals{
      {"mention_rate", &c.mention_rate},         {"implied_rate", &c.implied_rate},
      {"negation_rate", &c.negation_rate},       {"other_rate", &c.other_rate},
      {"status_skew", &c.status_skew},           {"symptom_zipf", &c.symptom_zipf},
      {"repeat_rate", &c.repeat_rate},           {"other_speaker_rate", &c.other_speaker_rate},
      {"disagreement_rate", &c.disagreement_rate},
  };
  if (auto it = ints.find(key); it != ints.end()) {
    *it->second = parse_int_value(key, value);
  } else if (auto jt = reals.find(key); jt != reals.end()) {
    *jt->second = parse_double_value(key, value);
  } else {
    throw ConfigError("unknown generator key '" + key + "'");
  }
}

std::string generator_config_text(const corpus::GeneratorConfig& c) {
  std::ostringstream o;
  o << "num_symptoms = " << c.num_symptoms << "\n"
    << "num_systems = " << c.num_systems << "\n"
    << "paraphrases = " << c.paraphrases << "\n"
    << "conversations = " << c.conversations << "\n"
    << "annotators = " << c.annotators << "\n"
    << "train_size = " << c.train_size << "\n"
    << "dev_size = " << c.dev_size << "\n"
    << "test_size = " << c.test_size << "\n"
    << "mention_rate = " << format_double(c.mention_rate) << "\n"
    << "min_filler_turns = " << c.min_filler_turns << "\n"
    << "max_filler_turns = " << c.max_filler_turns << "\n"
    << "implied_rate = " << format_double(c.implied_rate) << "\n"
    << "negation_rate = " << format_double(c.negation_rate) << "\n"
    << "other_rate = " << format_double(c.other_rate) << "\n"
    << "status_skew = " << format_double(c.status_skew) << "\n"
    << "symptom_zipf = " << format_double(c.symptom_zipf) << "\n"
    << "repeat_rate = " << format_double(c.repeat_rate) << "\n"
    << "other_speaker_rate = " << format_double(c.other_speaker_rate) << "\n"
    << "disagreement_rate = " << format_double(c.disagreement_rate) << "\n";
  return o.str();
}

void set_asr_option(corpus::AsrNoiseConfig& c, const std::string& key, const std::string& value) {
  if (key == "substitution") {
    c.substitution = parse_double_value(key, value);
  } else if (key == "deletion") {
    c.deletion = parse_double_value(key, value);
  } else if (key == "insertion") {
    c.insertion = parse_double_value(key, value);
  } else {
    throw ConfigError("unknown ASR key '" + key + "'");
  }
}

std::string asr_config_text(const corpus::AsrNoiseConfig& c) {
  return "substitution = " + format_double(c.substitution) + "\ndeletion = " + format_double(c.deletion) +
         "\ninsertion = " + format_double(c.insertion) + "\n";
}

namespace {

/// File entries first, then each "key=value" override.
KeyValues collect(const Overrides& o) {
  KeyValues kv;
  if (!o.config_file.empty()) kv = KeyValues::read(o.config_file);
  for (const auto& s : o.settings) {
    const KeyValues one = KeyValues::parse(s, "--set " + s);
    if (one.entries.empty()) throw ConfigError("--set expects key=value, got '" + s + "'");
    kv.entries.insert(kv.entries.end(), one.entries.begin(), one.entries.end());
  }
  return kv;
}

std::string provenance(const std::string& command, std::uint64_t seed, std::uint64_t config_hash,
                       const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  std::ostringstream o;
  o << "command = " << command << "\nseed = " << seed << "\nconfig_hash = " << metrics::hex64(config_hash) << "\n";
  for (const auto& [k, v] : extra) o << k << " = " << v << "\n";
  return o.str();
}

struct DataDir {
  corpus::Ontology ontology;
  std::vector<corpus::AnnotatedConversation> train, dev, test;
};

std::vector<corpus::AnnotatedConversation> read_split(const fs::path& dir, const std::string& split,
                                                      const corpus::Ontology& ontology) {
  const fs::path p = dir / (split + ".jsonl");
  if (!fs::exists(p)) throw ConfigError("missing split file " + p.string());
  return corpus::read_corpus(p, &ontology);
}

corpus::Ontology read_ontology(const fs::path& dir) {
  const fs::path p = dir / "ontology.tsv";
  if (!fs::exists(p)) throw ConfigError("missing ontology file " + p.string());
  return corpus::Ontology::read(p);
}

bool is_tagging_model(const std::string& type) {
  return type == "sat" || type == "baseline_crossproduct" || type == "baseline_bodysystem";
}

void check_encoder_dims(const nn::Checkpoint& enc, int emb, int hidden, int layers) {
  if (enc.meta_at("model_type") != "encoder") throw ConfigError("--pretrained-encoder is not an encoder checkpoint");
  auto expect = [&](const char* key, int want) {
    const int got = parse_int_value(key, enc.meta_at(key));
    if (got != want) {
      throw ConfigError(std::string("pretrained encoder ") + key + " = " + std::to_string(got) +
                        " but the model config has " + std::to_string(want));
    }
  };
  expect("word_emb_dim", emb);
  expect("lstm_hidden", hidden);
  expect("layers", layers);
}

void log_epoch(std::ostream& log, const sat::EpochLog& e) {
  log << "epoch " << e.epoch << "  loss " << format_double(e.mean_loss) << "  p " << format_double(e.p);
  if (e.dev_f1 >= 0) log << "  dev_f1 " << format_double(e.dev_f1) << (e.best ? "  *" : "");
  log << "\n" << std::flush;
}

}  // namespace

corpus::GeneratorConfig load_generator_config(const Overrides& o) {
  corpus::GeneratorConfig c;
  for (const auto& [k, v] : collect(o).entries) set_generator_option(c, k, v);
  c.validate();
  return c;
}

corpus::AsrNoiseConfig load_asr_config(const Overrides& o) {
  corpus::AsrNoiseConfig c;
  for (const auto& [k, v] : collect(o).entries) set_asr_option(c, k, v);
  c.validate();
  return c;
}

int cmd_generate(const GenerateArgs& args, std::ostream& log) {
  const corpus::GeneratorConfig config = load_generator_config(args.config);
  const corpus::CorpusSplits splits = corpus::generate_splits(config, args.seed);
  OutputDir out(args.out);
  out.write("ontology.tsv", splits.ontology.to_tsv());
  corpus::write_corpus(out.path("train.jsonl"), splits.train);
  corpus::write_corpus(out.path("dev.jsonl"), splits.dev);
  corpus::write_corpus(out.path("test.jsonl"), splits.test);
  const std::string text = generator_config_text(config);
  out.write("config.txt", text);

  const metrics::AgreementSummary kappa = metrics::corpus_kappa(splits.test, splits.ontology);
  out.write("provenance.txt", provenance("generate", args.seed, nn::fnv1a64(text),
                                         {{"test_mean_kappa", format_double(kappa.mean_kappa)}}));
  out.commit();
  log << "wrote " << splits.train.size() << "/" << splits.dev.size() << "/" << splits.test.size()
      << " train/dev/test conversations, " << splits.ontology.size() << " symptoms, test kappa "
      << format_double(kappa.mean_kappa) << " to " << args.out.string() << "\n";
  return kExitOk;
}

int cmd_train(const TrainArgs& args, std::ostream& log) {
  const corpus::Ontology ontology = read_ontology(args.data);
  const auto train = read_split(args.data, "train", ontology);
  const auto dev = read_split(args.data, "dev", ontology);

  nn::Checkpoint encoder;
  const bool pretrained = !args.pretrained_encoder.empty();
  if (pretrained) encoder = nn::load_checkpoint(args.pretrained_encoder);
  const sat::Vocab vocab = pretrained ? seq2seq::encoder_vocab(encoder) : sat::Vocab::build(train);

  std::unique_ptr<sat::TrainableModel> model;
  sat::TrainOptions opt;
  opt.seed = args.seed;
  std::string config_text;
  const KeyValues kv = collect(args.config);

  if (is_tagging_model(args.model_type)) {
    sat::SatConfig c;
    c.apply(kv);
    if (pretrained) check_encoder_dims(encoder, c.word_emb_dim, c.lstm_hidden, c.enc_layers);
    config_text = c.to_text();
    opt.epochs = c.epochs;
    opt.batch_size = c.batch_size;
    opt.adam.learning_rate = c.learning_rate;
    opt.adam.l2 = c.l2;
    opt.weight_noise_std = c.weight_noise_std;
    if (args.model_type == "sat") {
      auto m = std::make_unique<sat::SatModel>(c, vocab, ontology, args.seed);
      if (pretrained) m->load_encoder(encoder);
      opt.use_curriculum = true;
      opt.curriculum = c.curriculum;
      model = std::move(m);
    } else if (args.model_type == "baseline_crossproduct") {
      auto m = std::make_unique<sat::CrossProductBaseline>(c, vocab, ontology, args.seed);
      if (pretrained) m->load_encoder(encoder);
      model = std::move(m);
    } else {
      auto m = std::make_unique<sat::BodySystemBaseline>(c, vocab, ontology, args.seed);
      if (pretrained) m->load_encoder(encoder);
      model = std::move(m);
    }
  } else if (args.model_type == "seq2seq") {
    seq2seq::Seq2SeqConfig c;
    c.apply(kv);
    if (pretrained) check_encoder_dims(encoder, c.word_emb_dim, c.lstm_hidden, c.layers);
    config_text = c.to_text();
    opt.epochs = c.epochs;
    opt.batch_size = c.batch_size;
    opt.adam.learning_rate = c.learning_rate;
    opt.adam.l2 = c.l2;
    opt.weight_noise_std = c.weight_noise_std;
    auto m = std::make_unique<seq2seq::Seq2SeqModel>(c, vocab, ontology, args.seed);
    if (pretrained) m->load_encoder(encoder);
    model = std::move(m);
  } else {
    throw ConfigError("unknown model type '" + args.model_type +
                      "' (expected sat, seq2seq, baseline_crossproduct or baseline_bodysystem)");
  }

  log << "training " << args.model_type << " on " << train.size() << " conversations (" << dev.size() << " dev)\n";
  opt.on_epoch = [&log](const sat::EpochLog& e) { log_epoch(log, e); };
  const sat::TrainResult result = sat::train_model(*model, train, dev, opt);

  OutputDir out(args.out);
  const nn::Checkpoint ckpt = model->to_checkpoint();
  nn::save_checkpoint(out.path("model.ckpt"), ckpt);
  out.write("train_log.tsv", sat::format_train_log(result));
  out.write("config.txt", config_text);
  std::vector<std::pair<std::string, std::string>> extra{{"model_type", args.model_type},
                                                         {"best_epoch", std::to_string(result.best_epoch)},
                                                         {"best_dev_f1", format_double(result.best_dev_f1)}};
  if (pretrained) extra.emplace_back("pretrained_encoder", args.pretrained_encoder.string());
  out.write("provenance.txt", provenance("train", args.seed, ckpt.config_hash, extra));
  out.commit();
  log << "best epoch " << result.best_epoch << " dev F1 " << format_double(result.best_dev_f1) << "; wrote "
      << args.out.string() << "\n";
  return kExitOk;
}

int cmd_pretrain(const PretrainArgs& args, std::ostream& log) {
  const corpus::Ontology ontology = read_ontology(args.data);
  const auto train = read_split(args.data, "train", ontology);
  seq2seq::Seq2SeqConfig c;
  c.apply(collect(args.config));
  log << "pre-training the encoder on " << train.size() << " conversations for " << c.pretrain_epochs
      << " epochs\n";
  const seq2seq::PretrainResult result = seq2seq::pretrain_encoder(train, c, args.seed);
  for (const auto& e : result.log.log) log_epoch(log, e);

  OutputDir out(args.out);
  nn::save_checkpoint(out.path("encoder.ckpt"), result.encoder);
  out.write("pretrain_log.tsv", sat::format_train_log(result.log));
  out.write("config.txt", c.to_text());
  out.write("provenance.txt", provenance("pretrain", args.seed, result.encoder.config_hash));
  out.commit();
  log << "wrote " << args.out.string() << "\n";
  return kExitOk;
}

namespace {

struct Evaluated {
  std::string name;
  metrics::MetricsReport report;
  std::string attention;
};

/// Predictions of one checkpoint against the given references, projected
/// into the body-system key space when asked or when the model predicts there.
Evaluated evaluate_checkpoint(const fs::path& path, std::span<const corpus::AnnotatedConversation> data,
                              const metrics::References& refs, const corpus::Ontology& ontology, bool project,
                              std::span<const metrics::RefMode> modes, bool attention) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(path);
  std::unique_ptr<sat::TrainableModel> model = sat::load_model(ckpt);
  Evaluated out;
  out.name = ckpt.meta_at("model_type");

  metrics::Predictions preds = sat::predict_corpus(*model, data);
  const bool native = model->projection_ontology() != nullptr;
  metrics::References projected_refs;
  const metrics::References* r = &refs;
  if (native || project) {
    for (const auto& [id, ref] : refs) projected_refs[id] = metrics::project_to_body_system(ref, ontology);
    r = &projected_refs;
    if (!native) {
      for (auto& [id, p] : preds) p = metrics::project_to_body_system(p, ontology);
    }
  }
  out.report = metrics::evaluate_all(preds, *r, modes);

  if (attention) {
    auto* s2s = dynamic_cast<seq2seq::Seq2SeqModel*>(model.get());
    if (s2s == nullptr) throw ConfigError("--export-attention needs a seq2seq checkpoint");
    out.attention = "conversation\twindow\tstep\tposition\ttoken\tweight\n";
    for (const auto& ac : data) {
      const auto decodes = s2s->decode_conversation(ac.conversation);
      out.attention += seq2seq::format_attention(ac.conversation.id, decodes);
    }
  }
  return out;
}

/// Any-mode credit is a superset of voted-mode credit, so its F1 can never be lower.
void check_report(const std::string& name, const metrics::MetricsReport& report) {
  using metrics::RefMode;
  bool has_any = false, has_voted = false;
  for (const auto& e : report.entries) {
    has_any |= e.mode == RefMode::kAny;
    has_voted |= e.mode == RefMode::kVoted;
  }
  if (!has_any || !has_voted) return;
  for (auto w : {metrics::Weighting::kUnweighted, metrics::Weighting::kWeighted}) {
    for (auto v : {metrics::View::kSx, metrics::View::kSxStatus}) {
      const double any = report.at(RefMode::kAny, w, v).f1;
      const double voted = report.at(RefMode::kVoted, w, v).f1;
      if (any + 1e-12 < voted) {
        throw VerificationError(name + ": any-mode F1 " + format_double(any) + " below voted-mode F1 " +
                                format_double(voted) + " (" + std::string(metrics::to_string(w)) + ", " +
                                std::string(metrics::to_string(v)) + ")");
      }
    }
  }
}

}  // namespace

int cmd_evaluate(const EvaluateArgs& args, std::ostream& log) {
  const corpus::Ontology ontology = read_ontology(args.data);
  std::vector<corpus::AnnotatedConversation> data = read_split(args.data, args.split, ontology);
  std::vector<metrics::RefMode> modes;
  for (const auto& m : args.modes) modes.push_back(metrics::parse_ref_mode(m));

  std::vector<std::pair<std::string, std::string>> notes{{"split", args.split},
                                                         {"project_body_system", args.project_body_system ? "1" : "0"}};
  std::string asr_text;
  if (args.asr_sim) {
    const corpus::AsrNoiseConfig noise = load_asr_config(args.asr);
    corpus::TransferReport transfer;
    std::size_t ref_tokens = 0, errors = 0;
    for (auto& ac : data) {
      const std::uint64_t seed = args.seed ^ nn::fnv1a64(ac.conversation.id);
      const corpus::AsrResult asr = corpus::simulate_asr(ac.conversation, noise, seed);
      ref_tokens += asr.reference_tokens;
      errors += asr.substitutions + asr.deletions + asr.insertions;
      ac = corpus::transfer_labels(ac, asr.conversation, transfer);
    }
    const double wer = ref_tokens == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(ref_tokens);
    asr_text = asr_config_text(noise) + "word_error_rate = " + format_double(wer) +
               "\nlabels = " + std::to_string(transfer.total) + "\ntransferred = " +
               std::to_string(transfer.transferred) + "\ndiscarded = " + std::to_string(transfer.discarded) +
               "\ndiscard_rate = " + format_double(transfer.discard_rate()) + "\n";
    notes.emplace_back("asr_word_error_rate", format_double(wer));
    notes.emplace_back("asr_discard_rate", format_double(transfer.discard_rate()));
    log << "simulated ASR: WER " << format_double(wer) << ", " << transfer.discarded << " of " << transfer.total
        << " labels discarded\n";
  }

  metrics::References refs;
  for (const auto& ac : data) refs[ac.conversation.id] = corpus::build_references(ac, args.seed);

  std::vector<Evaluated> evals;
  evals.push_back(evaluate_checkpoint(args.model, data, refs, ontology, args.project_body_system, modes,
                                      args.export_attention));
  if (!args.compare.empty()) {
    evals.push_back(evaluate_checkpoint(args.compare, data, refs, ontology, args.project_body_system, modes, false));
    if (evals[0].name == evals[1].name) {
      evals[0].name += " (" + args.model.filename().string() + ")";
      evals[1].name += " (" + args.compare.filename().string() + ")";
    }
  }

  std::vector<metrics::ReportRow> rows;
  for (const auto& e : evals) {
    check_report(e.name, e.report);
    rows.push_back({e.name, e.report});
  }
  const nn::Checkpoint ckpt = nn::load_checkpoint(args.model);
  metrics::ReportProvenance prov;
  prov.config_hash = ckpt.config_hash;
  prov.seed = args.seed;
  prov.note = args.data.filename().string() + "/" + args.split + (args.asr_sim ? ", simulated ASR" : "") +
              (args.project_body_system ? ", projected to body systems" : "");

  OutputDir out(args.out);
  const std::string table = metrics::format_table(rows, prov);
  out.write("report.txt", table);
  out.write("report.tsv", metrics::format_tsv(rows, prov));
  for (std::size_t i = 0; i < evals.size(); ++i) {
    const auto& cell = evals[i].report.at(metrics::RefMode::kVoted, metrics::Weighting::kUnweighted,
                                          metrics::View::kSxStatus);
    out.write(i == 0 ? "per_conversation.tsv" : "per_conversation_compare.tsv",
              metrics::format_per_conversation(cell));
  }
  if (!asr_text.empty()) out.write("asr.txt", asr_text);
  if (args.export_attention) out.write("attention.tsv", evals[0].attention);

  if (evals.size() == 2) {
    std::vector<double> a, b;
    const auto pick = [](const Evaluated& e) {
      return e.report.at(metrics::RefMode::kVoted, metrics::Weighting::kUnweighted, metrics::View::kSxStatus);
    };
    for (const auto& s : pick(evals[0]).per_conversation) a.push_back(s.f1);
    for (const auto& s : pick(evals[1]).per_conversation) b.push_back(s.f1);
    const metrics::MannWhitneyResult mw = metrics::mann_whitney(a, b);
    std::ostringstream c;
    c << "cell = voted unweighted Sx+Status, per-conversation F1\n"
      << "model_a = " << evals[0].name << "\nmodel_b = " << evals[1].name << "\nf1_a = "
      << format_double(pick(evals[0]).f1) << "\nf1_b = " << format_double(pick(evals[1]).f1)
      << "\nconversations = " << a.size() << "\nu = " << format_double(mw.u) << "\nz = " << format_double(mw.z)
      << "\np_two_sided = " << format_double(mw.p_two_sided) << "\n";
    out.write("comparison.txt", c.str());
    log << "Mann-Whitney U " << format_double(mw.u) << ", p = " << format_double(mw.p_two_sided) << "\n";
  }
  out.write("provenance.txt", provenance("evaluate", args.seed, ckpt.config_hash, notes));
  out.commit();
  log << table;
  return kExitOk;
}

int cmd_verify(const VerifyArgs& args, std::ostream& log) {
  VerifyOptions opt;
  opt.seed = args.seed;
  opt.grad_seeds = args.grad_seeds;
  opt.crf_draws = args.crf_draws;
  const auto results = run_verify(opt);
  log << format_verify(results);
  for (const auto& r : results) {
    if (!r.passed) return kExitVerification;
  }
  return kExitOk;
}

}  // namespace sxtract::cli
