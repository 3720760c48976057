#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ggcam/dataset.hpp"
#include "ggcam/network.hpp"

namespace ggcam {

enum class OptimizerKind { adam, adamax, sgd, sgd_momentum };
enum class TrainMode { baseline, ggcam };

struct TrainConfig {
  TrainMode mode = TrainMode::baseline;
  double learning_rate = 3.0e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  int patience = 8;
  static constexpr double lr_factor = 0.1;
  int max_epochs = 30;
  int batch_size = 16;
  double sigma_sm_init = 2.0e-9;
  double blur_sigma = 500.0;  // source-image pixels
  uint64_t seed = 0;
  int num_classes = 3;
  int num_features = 32;
  int input_size = 64;

  void validate() const;
};

struct EpochLog {
  int epoch;
  double train_loss, val_loss, val_auc;
  double sigma_sm, sigma_ce, alpha;  // NaN in baseline mode
  double lr;
};

struct TrainState {
  TrainConfig config;
  Classifier classifier;
  UncertaintyWeights weights;  // used in ggcam mode only
  std::vector<Value> trainables;
  std::vector<Tensor> moment1, moment2;  // per-trainable optimizer state
  int64_t step_count = 0;
  double lr = 0.0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;
  std::vector<EpochLog> log;
  Classifier best;  // deep copy at the best validation loss so far
};

namespace trainer {

// Named hyper-parameter defaults. "effnet" and "resnet" carry the published
// full-scale values (mode-dependent); "toy" is the desk-scale configuration
// used throughout the test corpus.
TrainConfig preset(const std::string& name, TrainMode mode);

// Flat `key = value` file; unknown keys are errors.
TrainConfig parse_config_file(const std::string& path);
void apply_config_key(TrainConfig& cfg, const std::string& key, const std::string& value);

TrainState init_state(const TrainConfig& cfg);

Classifier clone(const Classifier& c);

// One shuffled pass; returns the mean per-batch training loss.
double train_epoch(TrainState& state, const std::vector<Sample>& train_set, int epoch);

// if val_loss < best - 1e-8: best <- val_loss, counter <- 0; else ++counter;
// at counter == patience: lr *= 0.1, counter <- 0.
void plateau_step(TrainState& state, double val_loss);

struct ValMetrics {
  double loss;
  double auc;
};
ValMetrics evaluate(const TrainState& state, const std::vector<Sample>& val_set);

// Full run to max_epochs; state.best holds the best-validation checkpoint.
TrainState fit(const TrainConfig& cfg, const std::vector<Sample>& train_set,
               const std::vector<Sample>& val_set);

void write_log_csv(const std::string& path, const std::vector<EpochLog>& log);
std::vector<EpochLog> read_log_csv(const std::string& path);

}  // namespace trainer

}  // namespace ggcam
