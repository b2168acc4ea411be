#ifndef UKD_BASELINES_TRAINER_H_
#define UKD_BASELINES_TRAINER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ukd/common/random.h"
#include "ukd/nn/graph.h"

namespace ukd::baselines {

struct TrainingHistory {
  std::vector<double> epoch_loss;                     // mean batch loss
  std::vector<std::optional<double>> validation_score;
  int best_epoch = 0;  // 0 = initial parameters kept
  std::int64_t steps = 0;

  friend bool operator==(const TrainingHistory&,
                         const TrainingHistory&) = default;
};

// What a model contributes to the shared mini-batch loop.
class TrainingTask {
 public:
  virtual ~TrainingTask() = default;
  // Index batches for one epoch, drawn with `rng`.
  virtual std::vector<std::vector<std::size_t>> PlanEpoch(int epoch,
                                                          Rng& rng) = 0;
  // Accumulates gradients for one batch into the graph; returns the loss.
  virtual double RunBatch(std::span<const std::size_t> batch,
                          std::int64_t step) = 0;
  // Higher is better; nullopt disables snapshot selection for the epoch.
  virtual std::optional<double> Validate() { return std::nullopt; }
};

struct TrainLoopConfig {
  int epochs = 1;
  double learning_rate = 0.005;
  std::uint64_t seed = 0;
  std::string label = "model";  // used in divergence diagnostics
};

// Adam over shuffled mini-batches. Keeps the parameters of the epoch with the
// best validation score when any epoch produced one, otherwise the last.
// Throws DivergenceError on a non-finite loss or gradient.
TrainingHistory RunTraining(nn::NetworkGraph& graph, TrainingTask& task,
                            const TrainLoopConfig& config);

std::vector<std::vector<std::size_t>> ShuffledBatches(std::size_t n,
                                                      std::size_t batch_size,
                                                      Rng& rng);

}  // namespace ukd::baselines

#endif  // UKD_BASELINES_TRAINER_H_
