#include "ggcam/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ggcam/errors.hpp"

namespace ggcam {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (patience < 1) throw UsageError("patience must be >= 1");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (max_epochs < 0) throw UsageError("max_epochs must be >= 0");
  if (!(sigma_sm_init > 0.0)) throw UsageError("sigma_sm_init must be positive");
  if (!(blur_sigma > 0.0)) throw UsageError("blur_sigma must be positive");
  if (num_classes < 2) throw UsageError("num_classes must be >= 2");
  if (input_size < 8 || input_size % 8 != 0)
    throw UsageError("input_size must be a positive multiple of 8");
}

namespace trainer {

TrainConfig preset(const std::string& name, TrainMode mode) {
  TrainConfig cfg;
  cfg.mode = mode;
  if (name == "effnet") {
    if (mode == TrainMode::ggcam) {
      cfg.learning_rate = 6.0e-3;
      cfg.patience = 40;
      cfg.sigma_sm_init = 1.4e-11;
      cfg.blur_sigma = 600.0;
      cfg.max_epochs = 250;
    } else {
      cfg.learning_rate = 1.0e-3;
      cfg.patience = 25;
      cfg.max_epochs = 150;
    }
  } else if (name == "resnet") {
    if (mode == TrainMode::ggcam) {
      cfg.learning_rate = 7.0e-3;
      cfg.patience = 30;
      cfg.sigma_sm_init = 2.0e-9;
      cfg.blur_sigma = 500.0;
      cfg.max_epochs = 250;
    } else {
      cfg.learning_rate = 1.0e-4;
      cfg.patience = 50;
      cfg.max_epochs = 150;
    }
  } else if (name == "toy") {
    cfg.learning_rate = 3.0e-3;
    cfg.patience = 8;
    cfg.max_epochs = 20;
    cfg.batch_size = 16;
    cfg.sigma_sm_init = 0.25;
    cfg.blur_sigma = 0.3 * 64.0 * (600.0 / 1272.0);
  } else {
    throw UsageError("unknown preset '" + name + "' (expected effnet|resnet|toy)");
  }
  return cfg;
}

void apply_config_key(TrainConfig& cfg, const std::string& key, const std::string& value) {
  auto to_double = [&](const char* what) {
    try {
      return std::stod(value);
    } catch (...) {
      throw UsageError(std::string("bad numeric value for ") + what + ": " + value);
    }
  };
  auto to_int = [&](const char* what) {
    try {
      return std::stoi(value);
    } catch (...) {
      throw UsageError(std::string("bad integer value for ") + what + ": " + value);
    }
  };
  if (key == "mode") {
    if (value == "baseline") cfg.mode = TrainMode::baseline;
    else if (value == "ggcam") cfg.mode = TrainMode::ggcam;
    else throw UsageError("mode must be baseline|ggcam");
  } else if (key == "learning_rate") cfg.learning_rate = to_double("learning_rate");
  else if (key == "optimizer") {
    if (value == "adam") cfg.optimizer = OptimizerKind::adam;
    else if (value == "adamax") cfg.optimizer = OptimizerKind::adamax;
    else if (value == "sgd") cfg.optimizer = OptimizerKind::sgd;
    else if (value == "sgd_momentum") cfg.optimizer = OptimizerKind::sgd_momentum;
    else throw UsageError("optimizer must be adam|adamax|sgd|sgd_momentum");
  } else if (key == "patience") cfg.patience = to_int("patience");
  else if (key == "max_epochs") cfg.max_epochs = to_int("max_epochs");
  else if (key == "batch_size") cfg.batch_size = to_int("batch_size");
  else if (key == "sigma_sm_init") cfg.sigma_sm_init = to_double("sigma_sm_init");
  else if (key == "blur_sigma") cfg.blur_sigma = to_double("blur_sigma");
  else if (key == "seed") cfg.seed = static_cast<uint64_t>(std::stoull(value));
  else if (key == "num_classes") cfg.num_classes = to_int("num_classes");
  else if (key == "num_features") cfg.num_features = to_int("num_features");
  else if (key == "input_size") cfg.input_size = to_int("input_size");
  else throw UsageError("unknown config key: " + key);
}

TrainConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  TrainConfig cfg;
  std::string line;
  auto trim = [](std::string s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) + " is not key = value");
    apply_config_key(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

Classifier clone(const Classifier& c) {
  std::mt19937_64 rng(0);
  Classifier out(c.num_classes, c.backbone.features_out, c.input_size, c.head_kind, rng);
  out.backbone.w1->value = c.backbone.w1->value;
  out.backbone.b1->value = c.backbone.b1->value;
  out.backbone.w2->value = c.backbone.w2->value;
  out.backbone.b2->value = c.backbone.b2->value;
  out.backbone.w3->value = c.backbone.w3->value;
  out.backbone.b3->value = c.backbone.b3->value;
  if (c.head_kind == HeadKind::standard) {
    out.std_head.weight->value = c.std_head.weight->value;
    out.std_head.bias->value = c.std_head.bias->value;
  } else {
    out.cam_head.weight->value = c.cam_head.weight->value;
    out.cam_head.bias->value = c.cam_head.bias->value;
    out.cam_head.alpha_raw->value = c.cam_head.alpha_raw->value;
  }
  return out;
}

TrainState init_state(const TrainConfig& cfg) {
  cfg.validate();
  TrainState state;
  state.config = cfg;
  std::mt19937_64 rng(cfg.seed);
  state.classifier = Classifier(cfg.num_classes, cfg.num_features, cfg.input_size,
                                cfg.mode == TrainMode::ggcam ? HeadKind::cam
                                                             : HeadKind::standard,
                                rng);
  state.trainables = network::trainables(state.classifier);
  if (cfg.mode == TrainMode::ggcam) {
    state.weights = UncertaintyWeights(cfg.sigma_sm_init);
    state.trainables.push_back(state.weights.sigma_sm_raw);
    state.trainables.push_back(state.weights.sigma_ce_raw);
  }
  for (const auto& p : state.trainables) {
    state.moment1.emplace_back(p->value.shape());
    state.moment2.emplace_back(p->value.shape());
  }
  state.lr = cfg.learning_rate;
  state.best = clone(state.classifier);
  return state;
}

namespace {

void fisher_yates(std::vector<size_t>& idx, std::mt19937_64& rng) {
  for (size_t i = idx.size(); i > 1; --i) {
    size_t j = rng() % i;
    std::swap(idx[i - 1], idx[j]);
  }
}

void optimizer_step(TrainState& state) {
  ++state.step_count;
  const TrainConfig& cfg = state.config;
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8, momentum = 0.9;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step_count));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step_count));
  for (size_t t = 0; t < state.trainables.size(); ++t) {
    Tensor& p = state.trainables[t]->value;
    const Tensor& g = state.trainables[t]->grad;
    Tensor& m = state.moment1[t];
    Tensor& v = state.moment2[t];
    switch (cfg.optimizer) {
      case OptimizerKind::sgd:
        for (int64_t i = 0; i < p.size(); ++i) p[i] -= state.lr * g[i];
        break;
      case OptimizerKind::sgd_momentum:
        for (int64_t i = 0; i < p.size(); ++i) {
          m[i] = momentum * m[i] + g[i];
          p[i] -= state.lr * m[i];
        }
        break;
      case OptimizerKind::adam:
        for (int64_t i = 0; i < p.size(); ++i) {
          m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
          v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
          p[i] -= state.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
        break;
      case OptimizerKind::adamax:
        for (int64_t i = 0; i < p.size(); ++i) {
          m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
          v[i] = std::max(beta2 * v[i], std::abs(g[i]));
          p[i] -= (state.lr / bc1) * m[i] / (v[i] + eps);
        }
        break;
    }
  }
}

// Mean batch loss node for one minibatch; ce and sm are averaged across the
// batch before the uncertainty combination (equivalent to per-sample
// combination since the sigmas are shared).
Value batch_loss(TrainState& state, const std::vector<Sample>& set,
                 const std::vector<size_t>& idx, size_t begin, size_t end) {
  std::vector<Value> ce_terms, sm_terms;
  for (size_t i = begin; i < end; ++i) {
    const Sample& s = set[idx[i]];
    network::ForwardNodes f = network::forward(state.classifier, s.image);
    ce_terms.push_back(ops::cross_entropy(f.logits, s.label));
    if (state.config.mode == TrainMode::ggcam) {
      if (!s.psi)
        throw DataError("sample '" + s.id + "' lacks a heat map in ggcam mode");
      sm_terms.push_back(ops::selective_mse(f.scaled_cam, *s.psi, s.label));
    }
  }
  Value ce = ops::average(ce_terms);
  if (state.config.mode == TrainMode::baseline) return ce;
  Value sm = ops::average(sm_terms);
  return losses::combined_node(sm, ce, state.weights);
}

}  // namespace

double train_epoch(TrainState& state, const std::vector<Sample>& train_set, int epoch) {
  if (train_set.empty()) throw DataError("train_epoch: empty training set");
  std::vector<size_t> idx(train_set.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(state.config.seed * 0x9e3779b97f4a7c15ULL +
                      static_cast<uint64_t>(epoch));
  fisher_yates(idx, rng);

  double loss_sum = 0.0;
  int batches = 0;
  size_t bs = static_cast<size_t>(state.config.batch_size);
  for (size_t begin = 0; begin < idx.size(); begin += bs) {
    size_t end = std::min(begin + bs, idx.size());
    Value loss;
    try {
      loss = batch_loss(state, train_set, idx, begin, end);
    } catch (const NumericalError& e) {
      throw NumericalError("epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(batches) + ": " + e.what());
    }
    double lv = loss->value[0];
    if (!std::isfinite(lv))
      throw NumericalError("epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(batches) + ": non-finite loss");
    backward(loss);
    optimizer_step(state);
    loss_sum += lv;
    ++batches;
  }
  return loss_sum / batches;
}

void plateau_step(TrainState& state, double val_loss) {
  if (val_loss < state.best_val_loss - 1e-8) {
    state.best_val_loss = val_loss;
    state.epochs_since_improvement = 0;
    return;
  }
  ++state.epochs_since_improvement;
  if (state.epochs_since_improvement == state.config.patience) {
    state.lr *= TrainConfig::lr_factor;
    state.epochs_since_improvement = 0;
  }
}

ValMetrics evaluate(const TrainState& state, const std::vector<Sample>& val_set) {
  if (val_set.empty()) throw DataError("evaluate: empty validation set");
  double ce_sum = 0.0, sm_sum = 0.0;
  std::vector<ScoredPrediction> preds;
  preds.reserve(val_set.size());
  for (const Sample& s : val_set) {
    Prediction p = network::predict(state.classifier, s.image);
    ce_sum += losses::cross_entropy(p.logits, s.label);
    if (state.config.mode == TrainMode::ggcam) {
      if (!s.psi) throw DataError("sample '" + s.id + "' lacks a heat map in ggcam mode");
      sm_sum += losses::selective_mse(*p.scaled_cam, *s.psi, s.label);
    }
    preds.push_back({eval::softmax_vec(p.logits), s.label});
  }
  double n = static_cast<double>(val_set.size());
  double loss = (state.config.mode == TrainMode::ggcam)
                    ? losses::combined(sm_sum / n, ce_sum / n, state.weights.sigma_sm(),
                                       state.weights.sigma_ce())
                    : ce_sum / n;
  return ValMetrics{loss, eval::auc_multiclass(preds)};
}

TrainState fit(const TrainConfig& cfg, const std::vector<Sample>& train_set,
               const std::vector<Sample>& val_set) {
  TrainState state = init_state(cfg);
  double best_seen = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double lr_used = state.lr;
    double train_loss = train_epoch(state, train_set, epoch);
    ValMetrics vm = evaluate(state, val_set);
    bool is_cam = cfg.mode == TrainMode::ggcam;
    double nan = std::numeric_limits<double>::quiet_NaN();
    state.log.push_back(EpochLog{epoch, train_loss, vm.loss, vm.auc,
                                 is_cam ? state.weights.sigma_sm() : nan,
                                 is_cam ? state.weights.sigma_ce() : nan,
                                 is_cam ? state.classifier.cam_head.alpha() : nan,
                                 lr_used});
    if (vm.loss < best_seen) {
      best_seen = vm.loss;
      state.best = clone(state.classifier);
    }
    plateau_step(state, vm.loss);
  }
  return state;
}

void write_log_csv(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write log: " + path);
  out << "epoch,train_loss,val_loss,val_auc,sigma_sm,sigma_ce,alpha,lr\n";
  char buf[256];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  row.epoch, row.train_loss, row.val_loss, row.val_auc, row.sigma_sm,
                  row.sigma_ce, row.alpha, row.lr);
    out << buf << "\n";
  }
  if (!out) throw DataError("log write failed: " + path);
}

std::vector<EpochLog> read_log_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open log: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty log: " + path);
  std::vector<EpochLog> log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochLog row{};
    std::istringstream ss(line);
    std::string f;
    double* fields[] = {&row.train_loss, &row.val_loss, &row.val_auc, &row.sigma_sm,
                        &row.sigma_ce,   &row.alpha,    &row.lr};
    if (!std::getline(ss, f, ',')) throw DataError("malformed log row in " + path);
    row.epoch = std::stoi(f);
    for (double* fp : fields) {
      if (!std::getline(ss, f, ',')) throw DataError("malformed log row in " + path);
      *fp = std::stod(f);
    }
    log.push_back(row);
  }
  return log;
}

}  // namespace trainer

}  // namespace ggcam
