// Command-line front end: data generation, staged training, evaluation and
// ablation runs. Every command writes a manifest next to its main output.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "handpose/handmodel/dataset.hpp"
#include "handpose/pipeline/ablation.hpp"
#include "handpose/pipeline/config.hpp"
#include "handpose/pipeline/manifest.hpp"
#include "handpose/pipeline/training.hpp"

namespace {

using namespace handpose;

/// One machine-readable line on stderr: {"error": kind, "message": text}.
int fail(const std::string& kind, const std::string& message, int code) {
  nlohmann::json line = {{"error", kind}, {"message", message}};
  std::cerr << line.dump() << std::endl;
  return code;
}

void log_epoch(const EpochLog& e) {
  std::fprintf(stderr, "stage %s epoch %zu loss %.6f", std::string(to_string(e.stage)).c_str(), e.epoch,
               e.generator_loss);
  if (e.stage == Stage::kIII) std::fprintf(stderr, " critic %.6f", e.critic_loss);
  std::fprintf(stderr, "\n");
}

std::string read_text_or_path(const std::string& arg) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(arg, ec)) return read_file_bytes(arg);
  return arg;
}

struct Options {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  int stage = 1;
  std::string out, config, data, init_checkpoint, checkpoint, pck_out, variants;
  bool quiet = false;
};

int generate_data(const Options& o) {
  save_dataset(o.out, sample_synthetic(o.seed, o.count));
  Manifest m{"generate-data", {{"seed", std::to_string(o.seed)}, {"count", std::to_string(o.count)}}};
  m.add_dataset(o.out);
  m.save(manifest_path_for(o.out));
  return 0;
}

int train(const Options& o) {
  const TrainConfig config = load_config(o.config);
  const std::vector<Sample> data = load_dataset(o.data);
  const ProgressFn progress = o.quiet ? ProgressFn{} : ProgressFn{log_epoch};
  if (o.stage != 1 && o.init_checkpoint.empty()) {
    throw TrainingError("stage " + std::to_string(o.stage) + " needs --init-checkpoint");
  }
  TrainingResult result;
  if (o.stage == 1) {
    result = stage1_pretrain(config, data, progress);
  } else if (o.stage == 2) {
    result = stage2_train_generator(config, load_checkpoint(o.init_checkpoint), data, progress);
  } else {
    result = stage3_adversarial(config, load_checkpoint(o.init_checkpoint), data, progress);
  }
  save_checkpoint(result.checkpoint, o.out);
  Manifest m{"train", {{"stage", std::to_string(o.stage)}}};
  m.add_config(format_config(config));
  m.add_dataset(o.data);
  m.add_checkpoint(o.out);
  if (!o.init_checkpoint.empty()) {
    m.entries["init_checkpoint_git_hash"] = git_blob_hash(read_file_bytes(o.init_checkpoint));
  }
  m.save(manifest_path_for(o.out));
  return 0;
}

int eval(const Options& o) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const EvalReport report = evaluate(ckpt, load_dataset(o.data));
  {
    std::ofstream out(o.pck_out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + o.pck_out + "'");
    write_report(out, report);
  }
  std::ostringstream summary;
  summary << std::setprecision(10) << "mean_error_mm=" << report.mean_error_mm << " auc=" << report.pck.auc
          << " bone_dir_error=" << report.bone_direction_error;
  std::cout << summary.str() << std::endl;
  Manifest m{"eval", {}};
  m.add_config(format_config(ckpt.config));
  m.add_dataset(o.data);
  m.add_checkpoint(o.checkpoint);
  m.add_file("report_sha256", o.pck_out);
  m.save(manifest_path_for(o.pck_out));
  return 0;
}

int ablate(const Options& o) {
  const TrainConfig config = load_config(o.config);
  const auto variants = parse_variants(read_text_or_path(o.variants));
  const ProgressFn progress = o.quiet ? ProgressFn{} : ProgressFn{log_epoch};
  const auto rows = run_ablation(config, variants, make_train_set(config), make_test_set(config), progress);
  {
    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + o.out + "'");
    write_ablation_csv(out, rows);
  }
  Manifest m{"ablate", {}};
  m.add_config(format_config(config));
  m.entries["variants"] = [&] {
    std::string names;
    for (const auto& v : variants) names += (names.empty() ? "" : ",") + v.name();
    return names;
  }();
  m.add_file("table_sha256", o.out);
  m.save(manifest_path_for(o.out));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hand pose estimation: synthetic data, three-stage training, evaluation, ablations"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("generate-data", "Write a synthetic dataset as JSON Lines");
  gen->add_option("--seed", o.seed, "Master seed")->required();
  gen->add_option("--count", o.count, "Number of samples")->required()->check(CLI::PositiveNumber);
  gen->add_option("--out", o.out, "Output .jsonl path")->required();

  auto* tr = app.add_subcommand("train", "Run one training stage");
  tr->add_option("--stage", o.stage, "Stage 1, 2 or 3")->required()->check(CLI::Range(1, 3));
  tr->add_option("--config", o.config, "Config file (key = value)")->required();
  tr->add_option("--data", o.data, "Training set (.jsonl)")->required();
  tr->add_option("--init-checkpoint", o.init_checkpoint, "Checkpoint of the previous stage");
  tr->add_option("--out", o.out, "Output checkpoint path")->required();
  tr->add_flag("--quiet", o.quiet, "No per-epoch log on stderr");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint path")->required();
  ev->add_option("--data", o.data, "Test set (.jsonl)")->required();
  ev->add_option("--pck-out", o.pck_out, "PCK CSV output path")->required();

  auto* ab = app.add_subcommand("ablate", "Train and evaluate ablation variants");
  ab->add_option("--config", o.config, "Base config file")->required();
  ab->add_option("--variants", o.variants, "File or comma-separated list, e.g. gcn/multi,fc/none")->required();
  ab->add_option("--out", o.out, "Output CSV path")->required();
  ab->add_flag("--quiet", o.quiet, "No per-epoch log on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (gen->parsed()) return generate_data(o);
    if (tr->parsed()) return train(o);
    if (ev->parsed()) return eval(o);
    if (ab->parsed()) return ablate(o);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), 3);
  } catch (const CheckpointVersionError& e) {
    return fail("checkpoint_version", e.what(), 4);
  } catch (const CheckpointMissingKeyError& e) {
    return fail("checkpoint_missing_key", e.what(), 4);
  } catch (const CheckpointFormatError& e) {
    return fail("checkpoint_format", e.what(), 4);
  } catch (const CheckpointError& e) {
    return fail("checkpoint", e.what(), 4);
  } catch (const TrainingError& e) {
    return fail("training", e.what(), 5);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
  return fail("usage", "no subcommand", 2);
}
