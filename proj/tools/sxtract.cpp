// sxtract: corpus generation, training, evaluation and verification.

#include <sxtract/cli/commands.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace sxtract::cli;

void add_config(CLI::App* cmd, Overrides& o, const std::string& what = "config") {
  cmd->add_option("--" + what, o.config_file, "key = value file")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.settings, "key=value override, applied after the file (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symptom and status extraction from clinical conversations"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write synthetic train/dev/test splits");
  add_config(generate, gen.config);
  generate->add_option("--seed", gen.seed);
  generate->add_option("--out", gen.out, "output directory")->required();

  TrainArgs train;
  auto* tr = app.add_subcommand("train", "Train a model and write its checkpoint");
  tr->add_option("--model", train.model_type, "sat | seq2seq | baseline_crossproduct | baseline_bodysystem")
      ->required()
      ->check(CLI::IsMember({"sat", "seq2seq", "baseline_crossproduct", "baseline_bodysystem"}));
  tr->add_option("--data", train.data, "directory written by generate")->required()->check(CLI::ExistingDirectory);
  add_config(tr, train.config);
  tr->add_option("--seed", train.seed);
  tr->add_option("--pretrained-encoder", train.pretrained_encoder, "encoder.ckpt from pretrain")
      ->check(CLI::ExistingFile);
  tr->add_option("--out", train.out)->required();

  PretrainArgs pre;
  auto* pt = app.add_subcommand("pretrain", "Next-turn prediction pre-training of the encoder");
  pt->add_option("--data", pre.data)->required()->check(CLI::ExistingDirectory);
  add_config(pt, pre.config);
  pt->add_option("--seed", pre.seed);
  pt->add_option("--out", pre.out)->required();

  EvaluateArgs eval;
  auto* ev = app.add_subcommand("evaluate", "Score a checkpoint on a split");
  ev->add_option("--model", eval.model, "model.ckpt")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", eval.data)->required()->check(CLI::ExistingDirectory);
  ev->add_option("--split", eval.split)->check(CLI::IsMember({"train", "dev", "test"}));
  ev->add_option("--mode", eval.modes, "single | voted | any (repeatable; default all)");
  ev->add_flag("--project-body-system", eval.project_body_system, "collapse symptoms to body systems");
  ev->add_flag("--asr-sim", eval.asr_sim, "evaluate on simulated recogniser output");
  add_config(ev, eval.asr, "asr-config");
  ev->add_option("--seed", eval.seed);
  ev->add_option("--compare", eval.compare, "second checkpoint for a Mann-Whitney comparison")
      ->check(CLI::ExistingFile);
  ev->add_flag("--export-attention", eval.export_attention, "write seq2seq attention weights");
  ev->add_option("--out", eval.out)->required();

  VerifyArgs ver;
  auto* vf = app.add_subcommand("verify", "Run the oracle suites");
  vf->add_option("--seed", ver.seed);
  vf->add_option("--grad-seeds", ver.grad_seeds)->check(CLI::PositiveNumber);
  vf->add_option("--crf-draws", ver.crf_draws)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  return run_guarded(
      [&]() -> int {
        if (*generate) return cmd_generate(gen, std::cout);
        if (*tr) return cmd_train(train, std::cout);
        if (*pt) return cmd_pretrain(pre, std::cout);
        if (*ev) return cmd_evaluate(eval, std::cout);
        return cmd_verify(ver, std::cout);
      },
      std::cerr);
}
