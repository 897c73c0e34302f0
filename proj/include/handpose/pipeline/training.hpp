#pragma once

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "handpose/handmodel/dataset.hpp"
#include "handpose/losses/metrics.hpp"
#include "handpose/pipeline/checkpoint.hpp"

namespace handpose {

/// A stage could not proceed, for example because its input checkpoint is
/// from the wrong stage or a loss became non-finite. Messages from inside
/// the loop give the position as "stage II epoch 4 batch 17".
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochLog {
  Stage stage = Stage::kI;
  std::size_t epoch = 0;           ///< running epoch count after this epoch
  double generator_loss = 0.0;     ///< mean total loss over the epoch's batches
  double critic_loss = 0.0;        ///< mean critic loss; 0 outside Stage III
};

using ProgressFn = std::function<void(const EpochLog&)>;

struct TrainingResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

/// Critic loss magnitude beyond which Stage III aborts.
inline constexpr double kCriticDivergenceLimit = 1e6;

/// Trains the hand-model part from scratch on total_loss without the
/// adversarial term.
TrainingResult stage1_pretrain(const TrainConfig& config, const std::vector<Sample>& data,
                               const ProgressFn& progress = {});

/// Loads the hand-model part from a Stage I checkpoint, attaches a fresh
/// refinement part and trains everything with a fresh optimizer.
TrainingResult stage2_train_generator(const TrainConfig& config, const Checkpoint& stage1,
                                      const std::vector<Sample>& data, const ProgressFn& progress = {});

/// Alternates critic and generator updates on top of a Stage II checkpoint.
/// The critic starts fresh; the generator optimizer and epoch count carry on
/// from Stage II, so with lambda_wass = 0 and critic_lr = 0 the generator
/// follows exactly the path of a longer Stage II run.
TrainingResult stage3_adversarial(const TrainConfig& config, const Checkpoint& stage2,
                                  const std::vector<Sample>& data, const ProgressFn& progress = {});

/// The generator as it stands right after Stage II initialization, before
/// any update: Stage I hand model plus a fresh refinement part.
Generator stage2_initial_generator(const TrainConfig& config, const Checkpoint& stage1);

struct EvalReport {
  double mean_error_mm = 0.0;
  double bone_direction_error = 0.0;
  PckCurve pck;
};

std::vector<Pose3D> predict(const Generator& generator, const std::vector<Sample>& data);
EvalReport evaluate_poses(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt);
EvalReport evaluate(const Generator& generator, const std::vector<Sample>& data);
EvalReport evaluate(const Checkpoint& ckpt, const std::vector<Sample>& data);
/// PCK CSV followed by the summary line.
void write_report(std::ostream& out, const EvalReport& report);

/// Train and test sets drawn from the "dataset" seed stream.
std::vector<Sample> make_train_set(const TrainConfig& config);
std::vector<Sample> make_test_set(const TrainConfig& config);

}  // namespace handpose
