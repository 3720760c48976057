// Command-line front end: data generation, heat-map precomputation,
// training, evaluation, CAM export, and run-group comparison.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ggcam/dataset.hpp"
#include "ggcam/errors.hpp"
#include "ggcam/eval.hpp"
#include "ggcam/gaze_heatmap.hpp"
#include "ggcam/network.hpp"
#include "ggcam/pgm.hpp"
#include "ggcam/synthetic_data.hpp"
#include "ggcam/trainer.hpp"

namespace fs = std::filesystem;
using namespace ggcam;

namespace {

uint64_t fnv1a_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash input file: " + path.string());
  uint64_t h = 1469598103934665603ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string mode_name(TrainMode m) {
  return m == TrainMode::ggcam ? "ggcam" : "baseline";
}

std::string optimizer_name(OptimizerKind o) {
  switch (o) {
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::adamax: return "adamax";
    case OptimizerKind::sgd: return "sgd";
    default: return "sgd_momentum";
  }
}

void write_run_manifest(const fs::path& out_dir, const TrainConfig& cfg,
                        const std::string& data_dir,
                        const std::vector<std::string>& artifacts) {
  std::ofstream out(out_dir / "run_manifest.txt");
  if (!out) throw DataError("cannot write run manifest");
  out << "mode = " << mode_name(cfg.mode) << "\n"
      << "learning_rate = " << cfg.learning_rate << "\n"
      << "optimizer = " << optimizer_name(cfg.optimizer) << "\n"
      << "patience = " << cfg.patience << "\n"
      << "max_epochs = " << cfg.max_epochs << "\n"
      << "batch_size = " << cfg.batch_size << "\n"
      << "sigma_sm_init = " << cfg.sigma_sm_init << "\n"
      << "blur_sigma = " << cfg.blur_sigma << "\n"
      << "seed = " << cfg.seed << "\n"
      << "num_classes = " << cfg.num_classes << "\n"
      << "num_features = " << cfg.num_features << "\n"
      << "input_size = " << cfg.input_size << "\n"
      << "input_hash = " << std::hex << fnv1a_file(fs::path(data_dir) / "manifest.csv")
      << std::dec << "\n";
  for (const auto& a : artifacts) out << "artifact = " << a << "\n";
}

int run_gen_data(const std::string& out_dir, int n, uint64_t seed, double noise,
                 int image_size) {
  SceneSpec spec;
  spec.noise_level = noise;
  spec.image_size = image_size;
  spec.seed = seed;
  synth::generate_corpus(out_dir, n, seed, spec);
  std::cout << "wrote corpus with " << n << " samples/class to " << out_dir << "\n";
  return 0;
}

int run_heatmap(const std::string& data_dir, double blur, int cam_size) {
  fs::path gaze_dir = fs::path(data_dir) / "gaze";
  fs::path img_dir = fs::path(data_dir) / "images";
  if (!fs::is_directory(gaze_dir)) throw DataError("no gaze/ directory in " + data_dir);
  fs::path out_dir = fs::path(data_dir) / "heatmaps";
  fs::create_directories(out_dir);
  int count = 0;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(gaze_dir))
    if (e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::string id = f.stem().string();
    Tensor img = pgm::read((img_dir / (id + ".pgm")).string());
    int h0 = img.extent(0), w0 = img.extent(1);
    double b = blur > 0.0 ? blur : heatmap::default_blur_sigma(w0);
    GazeTrace trace = heatmap::read_gaze_csv(f.string(), w0, h0);
    int target = cam_size > 0 ? cam_size : h0 / 8;
    VisualHeatMap psi = heatmap::make_heatmap(trace, b, target, target);
    heatmap::write_heatmap_csv((out_dir / (id + ".csv")).string(), psi.grid);
    ++count;
  }
  if (count == 0) throw DataError("no gaze traces found in " + gaze_dir.string());
  std::cout << "wrote " << count << " heat maps to " << out_dir << "\n";
  return 0;
}

int run_train(const TrainConfig& cfg, const std::string& data_dir,
              const std::string& out_dir) {
  dataset::LoadOptions opts;
  opts.require_psi = cfg.mode == TrainMode::ggcam;
  auto train_set = dataset::load_split(data_dir, "train", opts);
  auto val_set = dataset::load_split(data_dir, "val", opts);

  TrainState state = trainer::fit(cfg, train_set, val_set);

  fs::create_directories(out_dir);
  fs::path ckpt = fs::path(out_dir) / "checkpoint.bin";
  fs::path log = fs::path(out_dir) / "train_log.csv";
  network::save_checkpoint(ckpt.string(), state.best);
  trainer::write_log_csv(log.string(), state.log);
  write_run_manifest(out_dir, cfg, data_dir, {ckpt.string(), log.string()});
  if (!state.log.empty()) {
    const auto& last = state.log.back();
    std::cout << "final epoch " << last.epoch << " val_loss " << last.val_loss
              << " val_auc " << last.val_auc << "\n";
  }
  std::cout << "checkpoint: " << ckpt.string() << "\n";
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& data_dir,
             const std::string& split, const std::string& out_csv) {
  Classifier c = network::load_checkpoint(checkpoint);
  dataset::LoadOptions opts;
  opts.load_masks = true;
  auto set = dataset::load_split(data_dir, split, opts);

  std::vector<ScoredPrediction> preds;
  // Interpretability tallies for the organ-specific classes (1-based 2, 3).
  std::map<int, std::pair<int, int>> interp;  // label -> (inside, total)
  for (const auto& s : set) {
    Prediction p = network::predict(c, s.image);
    preds.push_back({eval::softmax_vec(p.logits), s.label});
    if (c.head_kind == HeadKind::cam && (s.label == 1 || s.label == 2)) {
      const auto& mask = s.label == 1 ? s.heart_mask : s.lung_mask;
      if (mask) {
        Tensor slice({c.cam_extent(), c.cam_extent()});
        const Tensor& cam = *p.cam;
        for (int64_t i = 0; i < slice.size(); ++i)
          slice[i] = cam[static_cast<int64_t>(s.label) * slice.size() + i];
        bool ok = eval::interpretability(slice, *mask);
        auto& [inside, total] = interp[s.label];
        inside += ok ? 1 : 0;
        ++total;
      }
    }
  }

  double auc = eval::auc_multiclass(preds);
  auto pr = eval::precision_recall(preds, c.num_classes);

  std::ostringstream csv;
  csv << "metric,class,value\n";
  std::cout << "AUC: " << auc << "\n";
  csv << "auc,," << auc << "\n";
  for (int i = 0; i < c.num_classes; ++i) {
    auto fmt = [](const std::optional<double>& v) {
      return v ? std::to_string(*v) : std::string("undefined");
    };
    std::cout << "class " << (i + 1) << ": precision " << fmt(pr[i].precision)
              << " recall " << fmt(pr[i].recall) << "\n";
    csv << "precision," << (i + 1) << "," << fmt(pr[i].precision) << "\n";
    csv << "recall," << (i + 1) << "," << fmt(pr[i].recall) << "\n";
  }
  for (const auto& [label, counts] : interp) {
    double rate = static_cast<double>(counts.first) / counts.second;
    std::cout << "interpretability class " << (label + 1) << ": " << rate << " ("
              << counts.first << "/" << counts.second << ")\n";
    csv << "interpretability," << (label + 1) << "," << rate << "\n";
  }
  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    if (!out) throw DataError("cannot write metrics csv: " + out_csv);
    out << csv.str();
  }
  return 0;
}

int run_export_cam(const std::string& checkpoint, const std::string& data_dir,
                   const std::string& split, const std::string& out_dir, int limit) {
  Classifier c = network::load_checkpoint(checkpoint);
  if (c.head_kind != HeadKind::cam)
    throw DataError("export-cam requires a cam-head checkpoint");
  auto set = dataset::load_split(data_dir, split);
  fs::create_directories(out_dir);
  int n = 0;
  for (const auto& s : set) {
    if (limit > 0 && n >= limit) break;
    Prediction p = network::predict(c, s.image);
    // Input copy alongside the maps for side-by-side viewing.
    Tensor img2d({s.image.extent(1), s.image.extent(2)}, s.image.vec());
    pgm::write8((fs::path(out_dir) / (s.id + "_input.pgm")).string(), img2d);
    int hw = c.cam_extent();
    for (int k = 0; k < c.num_classes; ++k) {
      Tensor slice({hw, hw});
      for (int64_t i = 0; i < slice.size(); ++i)
        slice[i] = (*p.cam)[static_cast<int64_t>(k) * slice.size() + i];
      std::string prefix =
          (fs::path(out_dir) / (s.id + "_class" + std::to_string(k + 1))).string();
      cam::export_map(prefix, slice);
    }
    ++n;
  }
  std::cout << "exported CAMs for " << n << " samples to " << out_dir << "\n";
  return 0;
}

int run_compare(const std::vector<std::string>& group_dirs) {
  std::vector<std::vector<double>> groups;
  for (const auto& dir : group_dirs) {
    std::vector<double> aucs;
    std::vector<fs::path> logs;
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() == "train_log.csv")
        logs.push_back(e.path());
    std::sort(logs.begin(), logs.end());
    for (const auto& log : logs) {
      auto rows = trainer::read_log_csv(log.string());
      if (rows.empty()) throw DataError("empty training log: " + log.string());
      aucs.push_back(rows.back().val_auc);
    }
    if (aucs.size() < 2)
      throw DataError("group '" + dir + "' needs at least two run logs");
    groups.push_back(std::move(aucs));
  }
  if (groups.size() < 2) throw UsageError("compare requires at least two --group dirs");

  for (size_t i = 0; i < groups.size(); ++i)
    std::cout << "group " << group_dirs[i] << ": n=" << groups[i].size()
              << " median_auc=" << eval::median(groups[i]) << "\n";
  eval::AnovaResult r = eval::anova_oneway(groups);
  std::cout << "anova F=" << r.f << " p=" << r.p << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaze-guided class activation mapping toolkit"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
  int gen_n = 100, gen_size = 64;
  uint64_t gen_seed = 0;
  double gen_noise = 0.35;
  std::string gen_out = "corpus";
  gen->add_option("--n", gen_n, "samples per class");
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--noise", gen_noise, "noise level");
  gen->add_option("--image-size", gen_size, "square image size (multiple of 8)");

  // heatmap
  auto* hm = app.add_subcommand("heatmap", "precompute visual heat maps for a corpus");
  std::string hm_data;
  double hm_blur = 0.0;
  int hm_cam = 0;
  hm->add_option("--data", hm_data, "corpus directory")->required();
  hm->add_option("--blur", hm_blur, "Gaussian blur sigma in source pixels (default: width-proportional)");
  hm->add_option("--cam-size", hm_cam, "target grid extent (default: width/8)");

  // train
  auto* tr = app.add_subcommand("train", "train a classifier");
  std::string tr_data, tr_out = "run", tr_mode = "baseline", tr_preset = "toy";
  std::string tr_config;
  std::map<std::string, std::string> tr_overrides;
  tr->add_option("--data", tr_data, "corpus directory")->required();
  tr->add_option("--out", tr_out, "run output directory");
  tr->add_option("--mode", tr_mode, "baseline|ggcam");
  tr->add_option("--preset", tr_preset, "effnet|resnet|toy");
  tr->add_option("--config", tr_config, "key = value config file");
  // flags mirror config-file keys one-to-one; a flag wins on conflict
  for (const char* key : {"learning_rate", "optimizer", "patience", "max_epochs",
                          "batch_size", "sigma_sm_init", "blur_sigma", "seed",
                          "num_classes", "num_features", "input_size"}) {
    tr->add_option("--" + std::string(key), tr_overrides[key]);
  }

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ev_ckpt, ev_data, ev_split = "test", ev_out;
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint path")->required();
  ev->add_option("--data", ev_data, "corpus directory")->required();
  ev->add_option("--split", ev_split, "train|val|test");
  ev->add_option("--out", ev_out, "metrics CSV path");

  // export-cam
  auto* ex = app.add_subcommand("export-cam", "export per-class CAM maps");
  std::string ex_ckpt, ex_data, ex_split = "test", ex_out = "cams";
  int ex_limit = 0;
  ex->add_option("--checkpoint", ex_ckpt, "checkpoint path")->required();
  ex->add_option("--data", ex_data, "corpus directory")->required();
  ex->add_option("--split", ex_split, "train|val|test");
  ex->add_option("--out", ex_out, "output directory");
  ex->add_option("--limit", ex_limit, "max samples (0 = all)");

  // compare
  auto* cp = app.add_subcommand("compare", "ANOVA across groups of run logs");
  std::vector<std::string> cp_groups;
  cp->add_option("--group", cp_groups, "directory of runs (repeat >= 2 times)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << UsageError::prefix << ": " << e.what() << "\n";
    return UsageError::exit_code;
  }

  try {
    if (gen->parsed()) return run_gen_data(gen_out, gen_n, gen_seed, gen_noise, gen_size);
    if (hm->parsed()) return run_heatmap(hm_data, hm_blur, hm_cam);
    if (tr->parsed()) {
      TrainMode mode;
      if (tr_mode == "baseline") mode = TrainMode::baseline;
      else if (tr_mode == "ggcam") mode = TrainMode::ggcam;
      else throw UsageError("--mode must be baseline|ggcam");
      TrainConfig cfg = trainer::preset(tr_preset, mode);
      if (!tr_config.empty()) {
        TrainConfig file_cfg = trainer::parse_config_file(tr_config);
        file_cfg.mode = mode;
        cfg = file_cfg;
      }
      for (const auto& [key, val] : tr_overrides)
        if (!val.empty()) trainer::apply_config_key(cfg, key, val);
      cfg.validate();
      return run_train(cfg, tr_data, tr_out);
    }
    if (ev->parsed()) return run_eval(ev_ckpt, ev_data, ev_split, ev_out);
    if (ex->parsed()) return run_export_cam(ex_ckpt, ex_data, ex_split, ex_out, ex_limit);
    if (cp->parsed()) return run_compare(cp_groups);
  } catch (const UsageError& e) {
    std::cerr << UsageError::prefix << ": " << e.what() << "\n";
    return UsageError::exit_code;
  } catch (const DataError& e) {
    std::cerr << DataError::prefix << ": " << e.what() << "\n";
    return DataError::exit_code;
  } catch (const NumericalError& e) {
    std::cerr << NumericalError::prefix << ": " << e.what() << "\n";
    return NumericalError::exit_code;
  } catch (const std::exception& e) {
    std::cerr << NumericalError::prefix << ": " << e.what() << "\n";
    return NumericalError::exit_code;
  }
  return 0;
}
