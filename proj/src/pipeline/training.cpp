#include "handpose/pipeline/training.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include "handpose/autodiff/ops.hpp"
#include "handpose/losses/losses.hpp"

namespace handpose {
namespace {

/// Whole dataset packed once so batches are row gathers.
struct Packed {
  std::vector<double> images;
  std::vector<double> poses;
  std::size_t size = 0;
};

Packed pack(const std::vector<Sample>& data) {
  Packed p;
  p.size = data.size();
  p.images.reserve(data.size() * kRenderPixels);
  p.poses.reserve(data.size() * kNumJoints * 3);
  for (const Sample& s : data) {
    p.images.insert(p.images.end(), s.rendering.cells.begin(), s.rendering.cells.end());
    const auto flat = s.gt_pose3d.flatten();
    p.poses.insert(p.poses.end(), flat.begin(), flat.end());
  }
  return p;
}

struct Batch {
  ad::Tensor images;
  ad::Tensor poses;
};

Batch gather(const Packed& p, std::span<const std::size_t> indices) {
  std::vector<double> images, poses;
  images.reserve(indices.size() * kRenderPixels);
  poses.reserve(indices.size() * kNumJoints * 3);
  for (std::size_t i : indices) {
    images.insert(images.end(), p.images.begin() + i * kRenderPixels, p.images.begin() + (i + 1) * kRenderPixels);
    const std::size_t stride = kNumJoints * 3;
    poses.insert(poses.end(), p.poses.begin() + i * stride, p.poses.begin() + (i + 1) * stride);
  }
  return {ad::Tensor::from_values({indices.size(), kRenderPixels}, std::move(images)),
          ad::Tensor::from_values({indices.size() * kNumJoints, 3}, std::move(poses))};
}

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

std::uint64_t shuffle_seed(const TrainConfig& config, Stage stage, std::size_t epoch) {
  // Stage I has its own stream; Stages II and III share one keyed by the
  // running epoch count so Stage III continues Stage II's sequence.
  const std::uint64_t base = derive_seed(config.seed, "shuffle");
  return derive_seed(base, stage == Stage::kI ? "hand-model" : "generator", epoch);
}

std::string where(Stage stage, std::size_t epoch, std::size_t batch) {
  return "stage " + std::string(to_string(stage)) + " epoch " + std::to_string(epoch) + " batch " +
         std::to_string(batch);
}

struct Adversary {
  Critic* critic = nullptr;
  ad::Adam* adam = nullptr;
  double lr = 0.0;
  std::size_t steps = 1;
};

/// Shared generator loop of all three stages. `first_epoch` is the running
/// epoch count before this call.
std::vector<EpochLog> train_generator(Stage stage, const TrainConfig& config, const Generator& generator,
                                      ad::Adam& adam, double lr, const LossWeights& weights,
                                      std::size_t first_epoch, std::size_t epochs, const Adversary& adversary,
                                      const std::vector<Sample>& data, const ProgressFn& progress) {
  if (data.empty()) throw TrainingError("stage " + std::string(to_string(stage)) + ": empty training set");
  const Packed packed = pack(data);
  std::vector<EpochLog> log;
  for (std::size_t e = 0; e < epochs; ++e) {
    const std::size_t epoch = first_epoch + e;
    const auto order = shuffled_order(packed.size, shuffle_seed(config, stage, epoch));
    double loss_sum = 0.0, critic_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batches) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const Batch batch = gather(packed, std::span<const std::size_t>(order).subspan(start, end - start));

      ad::Tape tape;
      const ad::Tensor pred = generator.forward(tape, batch.images);

      std::optional<ad::Tensor> fake_scores;
      if (adversary.critic) {
        const ad::Tensor fake_pose = pred.detach();
        for (std::size_t k = 0; k < adversary.steps; ++k) {
          adversary.adam->zero_grad();
          ad::Tape critic_tape;
          const ad::Tensor real = adversary.critic->score(critic_tape, batch.images, batch.poses, true);
          const ad::Tensor fake = adversary.critic->score(critic_tape, batch.images, fake_pose, false);
          const ad::Tensor c_loss = critic_loss(critic_tape, real, fake);
          const double value = c_loss.item();
          if (!std::isfinite(value) || std::abs(value) > kCriticDivergenceLimit) {
            throw TrainingError("critic diverged at " + where(stage, epoch, batches) + ": loss " +
                                std::to_string(value));
          }
          critic_sum += value / static_cast<double>(adversary.steps);
          critic_tape.backward(c_loss);
          adversary.adam->step(adversary.lr);
        }
        adversary.adam->zero_grad();
        if (weights.wass != 0.0) fake_scores = adversary.critic->score(tape, batch.images, pred, false);
      }

      const LossTerms terms = total_loss(tape, pred, batch.poses, fake_scores, weights);
      const double value = terms.total.item();
      if (!std::isfinite(value)) throw TrainingError("non-finite loss at " + where(stage, epoch, batches));
      adam.zero_grad();
      try {
        tape.backward(terms.total);
        adam.step(lr);
      } catch (const std::domain_error& err) {
        throw TrainingError("non-finite gradient at " + where(stage, epoch, batches) + ": " + err.what());
      }
      loss_sum += value;
    }
    log.push_back(EpochLog{stage, epoch + 1, loss_sum / static_cast<double>(batches),
                           adversary.critic ? critic_sum / static_cast<double>(batches) : 0.0});
    if (progress) progress(log.back());
  }
  adam.zero_grad();
  return log;
}

LossWeights without_adversary(LossWeights w) {
  w.wass = 0.0;
  return w;
}

void require_stage(const Checkpoint& ckpt, Stage expected, const char* what) {
  if (ckpt.stage != expected) {
    throw TrainingError(std::string(what) + ": needs a stage " + std::string(to_string(expected)) +
                        " checkpoint, got stage " + std::string(to_string(ckpt.stage)));
  }
}

}  // namespace

TrainingResult stage1_pretrain(const TrainConfig& config, const std::vector<Sample>& data, const ProgressFn& progress) {
  validate(config);
  Generator generator(config);
  ad::Adam adam(generator.parameters());
  TrainingResult result;
  result.log = train_generator(Stage::kI, config, generator, adam, config.stage1_lr,
                               without_adversary(config.effective_weights()), 0, config.stage1_epochs, {}, data,
                               progress);
  Checkpoint& ckpt = result.checkpoint;
  ckpt.config = config;
  ckpt.stage = Stage::kI;
  ckpt.epoch = config.stage1_epochs;
  store_parameters(generator.parameters(), ckpt.parameters);
  ckpt.generator_optimizer = store_optimizer(adam);
  return result;
}

Generator stage2_initial_generator(const TrainConfig& config, const Checkpoint& stage1) {
  require_stage(stage1, Stage::kI, "stage II");
  if (config.refinement == RefinementKind::kNone) {
    throw TrainingError("stage II: configuration has refinement = none");
  }
  Generator generator(config);
  restore_parameters(stage1.parameters, generator.hand_model_parameters());
  generator.attach_refinement();
  return generator;
}

TrainingResult stage2_train_generator(const TrainConfig& config, const Checkpoint& stage1,
                                      const std::vector<Sample>& data, const ProgressFn& progress) {
  validate(config);
  Generator generator = stage2_initial_generator(config, stage1);
  ad::Adam adam(generator.parameters());
  TrainingResult result;
  result.log = train_generator(Stage::kII, config, generator, adam, config.stage2_lr,
                               without_adversary(config.effective_weights()), 0, config.stage2_epochs, {}, data,
                               progress);
  Checkpoint& ckpt = result.checkpoint;
  ckpt.config = config;
  ckpt.stage = Stage::kII;
  ckpt.epoch = config.stage2_epochs;
  store_parameters(generator.parameters(), ckpt.parameters);
  ckpt.generator_optimizer = store_optimizer(adam);
  return result;
}

TrainingResult stage3_adversarial(const TrainConfig& config, const Checkpoint& stage2,
                                  const std::vector<Sample>& data, const ProgressFn& progress) {
  validate(config);
  require_stage(stage2, Stage::kII, "stage III");
  if (config.critic == CriticKind::kNone) throw TrainingError("stage III: configuration has critic = none");
  if (config.refinement == RefinementKind::kNone) {
    throw TrainingError("stage III: configuration has refinement = none");
  }
  Generator generator(config);
  generator.attach_refinement();
  restore_parameters(stage2.parameters, generator.parameters());
  ad::Adam adam(generator.parameters());
  restore_optimizer(stage2.generator_optimizer, adam);

  std::unique_ptr<Critic> critic = make_critic(config);
  ad::NamedParams critic_params;
  critic->collect(critic_params, "critic");
  ad::Adam critic_adam(critic_params);

  TrainingResult result;
  result.log = train_generator(Stage::kIII, config, generator, adam, config.stage3_lr, config.effective_weights(),
                               stage2.epoch, config.stage3_epochs,
                               Adversary{critic.get(), &critic_adam, config.critic_lr, config.critic_steps}, data,
                               progress);
  Checkpoint& ckpt = result.checkpoint;
  ckpt.config = config;
  ckpt.stage = Stage::kIII;
  ckpt.epoch = stage2.epoch + config.stage3_epochs;
  store_parameters(generator.parameters(), ckpt.parameters);
  store_parameters(critic_params, ckpt.parameters);
  ckpt.generator_optimizer = store_optimizer(adam);
  ckpt.critic_optimizer = store_optimizer(critic_adam);
  store_spectral(*critic, ckpt.spectral, "critic");
  return result;
}

std::vector<Pose3D> predict(const Generator& generator, const std::vector<Sample>& data) {
  constexpr std::size_t kEvalBatch = 64;
  const Packed packed = pack(data);
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<Pose3D> out;
  out.reserve(data.size());
  for (std::size_t start = 0; start < all.size(); start += kEvalBatch) {
    const std::size_t end = std::min(all.size(), start + kEvalBatch);
    const Batch batch = gather(packed, std::span<const std::size_t>(all).subspan(start, end - start));
    ad::Tape tape;
    const auto poses = unstack_poses(generator.forward(tape, batch.images));
    out.insert(out.end(), poses.begin(), poses.end());
  }
  return out;
}

EvalReport evaluate_poses(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt) {
  EvalReport r;
  r.mean_error_mm = metric_mean_error(pred, gt);
  r.bone_direction_error = metric_bone_direction_error(pred, gt);
  r.pck = metric_pck(pred, gt);
  return r;
}

EvalReport evaluate(const Generator& generator, const std::vector<Sample>& data) {
  std::vector<Pose3D> gt;
  gt.reserve(data.size());
  for (const Sample& s : data) gt.push_back(s.gt_pose3d);
  return evaluate_poses(predict(generator, data), gt);
}

EvalReport evaluate(const Checkpoint& ckpt, const std::vector<Sample>& data) {
  return evaluate(restore_generator(ckpt), data);
}

void write_report(std::ostream& out, const EvalReport& report) { write_pck_csv(out, report.pck, report.mean_error_mm); }

std::vector<Sample> make_train_set(const TrainConfig& config) {
  return sample_synthetic(derive_seed(config.seed, "dataset", 0), config.train_size);
}

std::vector<Sample> make_test_set(const TrainConfig& config) {
  return sample_synthetic(derive_seed(config.seed, "dataset", 1), config.test_size);
}

}  // namespace handpose
