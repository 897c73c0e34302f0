#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "handpose/pipeline/training.hpp"

namespace handpose {

struct AblationRow {
  std::string variant;
  Stage stage = Stage::kI;
  double mean_error_mm = 0.0;
  double bone_direction_error = 0.0;
};

/// Trains every variant on the shared data and seed, evaluating on `test`
/// after each stage it reaches. A variant with refinement `none` stops after
/// Stage I; one with critic `none` stops after Stage II. Stages whose
/// effective configuration matches an earlier variant are reused, not
/// retrained, which changes no number because training is deterministic.
std::vector<AblationRow> run_ablation(const TrainConfig& config, const std::vector<AblationVariant>& variants,
                                      const std::vector<Sample>& train, const std::vector<Sample>& test,
                                      const ProgressFn& progress = {});

/// Columns: variant,stage,mean_error_mm,bone_dir_error.
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);

}  // namespace handpose
