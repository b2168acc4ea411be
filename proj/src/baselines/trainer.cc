#include "ukd/baselines/trainer.h"

#include <cmath>
#include <numeric>

#include "ukd/common/errors.h"
#include "ukd/nn/adam.h"

namespace ukd::baselines {

std::vector<std::vector<std::size_t>> ShuffledBatches(std::size_t n,
                                                      std::size_t batch_size,
                                                      Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

TrainingHistory RunTraining(nn::NetworkGraph& graph, TrainingTask& task,
                            const TrainLoopConfig& config) {
  if (config.epochs < 0) throw ConfigError("epochs must be >= 0");
  nn::AdamOptions adam_options;
  adam_options.learning_rate = config.learning_rate;
  nn::Adam adam(adam_options, graph.Parameters());
  Rng rng(DeriveSeed(config.seed, "batches"));

  TrainingHistory history;
  std::optional<double> best_score;
  std::vector<std::vector<double>> best_snapshot;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (const auto& batch : task.PlanEpoch(epoch, rng)) {
      if (batch.empty()) continue;
      graph.ZeroGrad();
      double loss = task.RunBatch(batch, history.steps);
      if (!std::isfinite(loss)) {
        throw DivergenceError(config.label + ": non-finite loss at epoch " +
                              std::to_string(epoch) + ", step " +
                              std::to_string(history.steps));
      }
      try {
        adam.Step();
      } catch (const Error& e) {
        throw DivergenceError(config.label + " epoch " +
                              std::to_string(epoch) + ": " + e.what());
      }
      loss_sum += loss;
      ++n_batches;
      ++history.steps;
    }
    history.epoch_loss.push_back(
        n_batches ? loss_sum / static_cast<double>(n_batches) : 0.0);
    std::optional<double> score = task.Validate();
    history.validation_score.push_back(score);
    if (score && (!best_score || *score > *best_score)) {
      best_score = score;
      best_snapshot = graph.Snapshot();
      history.best_epoch = epoch;
    }
  }
  if (best_score) {
    graph.Restore(best_snapshot);
  } else {
    history.best_epoch = config.epochs;
  }
  return history;
}

}  // namespace ukd::baselines
