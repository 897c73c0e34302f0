#include "handpose/pipeline/ablation.hpp"

#include <iomanip>
#include <map>
#include <ostream>

namespace handpose {

std::vector<AblationRow> run_ablation(const TrainConfig& config, const std::vector<AblationVariant>& variants,
                                      const std::vector<Sample>& train, const std::vector<Sample>& test,
                                      const ProgressFn& progress) {
  // Cache keys are the canonical text of the settings each stage depends on.
  std::map<std::string, Checkpoint> stage1_cache, stage2_cache;
  std::vector<AblationRow> rows;
  auto add_row = [&](const AblationVariant& v, const Checkpoint& ckpt) {
    const EvalReport report = evaluate(ckpt, test);
    rows.push_back({v.name(), ckpt.stage, report.mean_error_mm, report.bone_direction_error});
  };

  for (const AblationVariant& variant : variants) {
    const TrainConfig full = variant.apply(config);

    TrainConfig stage1_key = full;
    stage1_key.refinement = RefinementKind::kGcn;
    stage1_key.critic = CriticKind::kMulti;
    auto s1 = stage1_cache.find(format_config(stage1_key));
    if (s1 == stage1_cache.end()) {
      s1 = stage1_cache.emplace(format_config(stage1_key), stage1_pretrain(full, train, progress).checkpoint).first;
    }
    add_row(variant, s1->second);
    if (full.refinement == RefinementKind::kNone) continue;

    TrainConfig stage2_key = full;
    stage2_key.critic = CriticKind::kMulti;
    auto s2 = stage2_cache.find(format_config(stage2_key));
    if (s2 == stage2_cache.end()) {
      s2 = stage2_cache
               .emplace(format_config(stage2_key), stage2_train_generator(full, s1->second, train, progress).checkpoint)
               .first;
    }
    add_row(variant, s2->second);
    if (full.critic == CriticKind::kNone) continue;

    add_row(variant, stage3_adversarial(full, s2->second, train, progress).checkpoint);
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << std::setprecision(10);
  out << "variant,stage,mean_error_mm,bone_dir_error\n";
  for (const AblationRow& r : rows) {
    out << r.variant << ',' << to_string(r.stage) << ',' << r.mean_error_mm << ',' << r.bone_direction_error << '\n';
  }
}

}  // namespace handpose
