#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace avcount;
using namespace avcount::cli;

namespace {

std::optional<RewardWeights> parse_weights(const std::string& s) {
  RewardWeights w;
  char comma = 0;
  std::istringstream in(s);
  if (!(in >> w.format >> comma >> w.task) || comma != ',' || !in.eof()) return std::nullopt;
  return w;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counting benchmark evaluation, reward and curriculum engine"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  Config cfg;
  const int config_status = guarded([&] { cfg = load_config(); }, std::cerr);
  if (config_status != kExitOk) return config_status;

  // eval-blackbox
  EvalOptions bb;
  std::string setting = "long";
  auto* eval_bb = app.add_subcommand("eval-blackbox", "Acc/OBOA/MAE/RMSE for count answers");
  eval_bb->add_option("annotations", bb.annotations, "Annotation JSONL")->required();
  eval_bb->add_option("predictions", bb.predictions, "Prediction JSONL")->required();
  eval_bb->add_option("--setting", setting, "long or ref")
      ->check(CLI::IsMember({"long", "ref"}))
      ->capture_default_str();
  eval_bb->add_option("--fallback", cfg.fallback, "Count charged for unparseable answers");
  eval_bb->add_option("-o,--out-dir", bb.out_dir, "Output directory")->required();

  // eval-whitebox
  EvalOptions wb;
  auto* eval_wb = app.add_subcommand("eval-whitebox", "WCS and IFA for grounded answers");
  eval_wb->add_option("annotations", wb.annotations, "Annotation JSONL")->required();
  eval_wb->add_option("predictions", wb.predictions, "Prediction JSONL")->required();
  eval_wb->add_option("-o,--out-dir", wb.out_dir, "Output directory")->required();

  // rewards
  std::string rw_in = "-", rw_out = "-", weights;
  std::optional<std::string> rw_manifest;
  auto* rewards = app.add_subcommand("rewards", "Score reward requests (JSONL in, JSONL out)");
  rewards->add_option("input", rw_in, "Request JSONL, - for stdin")->capture_default_str();
  rewards->add_option("-o,--output", rw_out, "Output JSONL, - for stdout")->capture_default_str();
  rewards->add_option("--weights", weights, "format,task weights, e.g. 1,1");
  rewards->add_option("--manifest", rw_manifest, "Run manifest path");

  // curriculum
  auto* curriculum = app.add_subcommand("curriculum", "Offline data pipeline");
  curriculum->require_subcommand(1);

  std::string cf_in, cf_out;
  auto* cfilter = curriculum->add_subcommand("filter", "Drop samples the model already solves");
  cfilter->add_option("rollouts", cf_in, "Rollout JSONL")->required();
  cfilter->add_option("-o,--output", cf_out, "Kept samples JSONL")->required();
  cfilter->add_option("--iou-discard-above", cfg.iou_discard_above, "Grounding mean-IoU cut");
  cfilter->add_option("--threads", cfg.threads, "Worker threads");

  std::string cs_new, cs_hist, cs_out, cs_name = "stage";
  int cs_epoch = 1;
  auto* cstage = curriculum->add_subcommand("stage", "Mix review samples into a stage");
  cstage->add_option("new", cs_new, "New samples JSONL")->required();
  cstage->add_option("--history", cs_hist, "Earlier-stage samples JSONL");
  cstage->add_option("-o,--output", cs_out, "Stage manifest JSONL")->required();
  cstage->add_option("--review-fraction", cfg.review_fraction, "Review share of |new|")
      ->check(CLI::Range(0.0, 1.0));
  cstage->add_option("--seed", cfg.seed, "RNG seed");
  cstage->add_option("--name", cs_name, "Stage name")->capture_default_str();
  cstage->add_option("--epoch", cs_epoch, "Epoch tag")->capture_default_str();

  std::string ct_in, ct_out;
  auto* cfull = curriculum->add_subcommand("fulltask", "Balanced draw over difficulty buckets");
  cfull->add_option("rollouts", ct_in, "Rollout JSONL")->required();
  cfull->add_option("-o,--output", ct_out, "Manifest JSONL")->required();
  cfull->add_option("--quota", cfg.quota, "Samples per task");
  cfull->add_option("--pass-threshold", cfg.pass_threshold, "IoU that counts as a pass");
  cfull->add_option("--iou-discard-above", cfg.iou_discard_above, "Grounding mean-IoU cut");
  cfull->add_option("--seed", cfg.seed, "RNG seed");
  cfull->add_option("--threads", cfg.threads, "Worker threads");

  // random-baseline
  std::string rb_in, rb_out;
  auto* random = app.add_subcommand("random-baseline", "Uniform random predictions");
  random->add_option("annotations", rb_in, "Annotation JSONL")->required();
  random->add_option("-o,--output", rb_out, "Prediction JSONL")->required();
  random->add_option("--max", cfg.max_count, "Largest count drawn")->check(CLI::PositiveNumber);
  random->add_option("--seed", cfg.seed, "RNG seed");

  // validate
  std::string va_in;
  auto* validate = app.add_subcommand("validate", "Report annotation consistency violations");
  validate->add_option("annotations", va_in, "Annotation JSONL")->required();

  CLI11_PARSE(app, argc, argv);

  int status = kExitOk;
  if (eval_bb->parsed()) {
    status = guarded(
        [&] {
          cmd_eval_blackbox(bb, setting == "ref" ? Setting::RefAcc : Setting::LongAcc, cfg);
        },
        std::cerr);
  } else if (eval_wb->parsed()) {
    status = guarded([&] { cmd_eval_whitebox(wb, cfg); }, std::cerr);
  } else if (rewards->parsed()) {
    if (!weights.empty()) {
      auto w = parse_weights(weights);
      if (!w) {
        std::cerr << "--weights expects two numbers, e.g. 1,0.5\n";
        return kExitSchema;
      }
      cfg.weights = *w;
    }
    status = guarded([&] { cmd_rewards(rw_in, rw_out, rw_manifest, cfg); }, std::cerr);
  } else if (cfilter->parsed()) {
    status = guarded([&] { cmd_curriculum_filter(cf_in, cf_out, cfg); }, std::cerr);
  } else if (cstage->parsed()) {
    status = guarded(
        [&] { cmd_curriculum_stage(cs_new, cs_hist, cs_out, cs_name, cs_epoch, cfg); },
        std::cerr);
  } else if (cfull->parsed()) {
    status = guarded([&] { cmd_curriculum_fulltask(ct_in, ct_out, cfg); }, std::cerr);
  } else if (random->parsed()) {
    status = guarded([&] { cmd_random_baseline(rb_in, rb_out, cfg); }, std::cerr);
  } else if (validate->parsed()) {
    std::size_t n = 0;
    status = guarded([&] { n = cmd_validate(va_in, std::cout); }, std::cerr);
    if (status == kExitOk) std::cerr << n << " violation(s)\n";
  }
  return status;
}
