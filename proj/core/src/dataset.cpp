#include "ggcam/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ggcam/errors.hpp"
#include "ggcam/gaze_heatmap.hpp"
#include "ggcam/pgm.hpp"

namespace fs = std::filesystem;

namespace ggcam::dataset {

namespace {

struct ManifestRow {
  std::string id;
  int label;  // 0-based
  std::string split;
};

std::vector<ManifestRow> read_manifest(const std::string& corpus_dir) {
  fs::path path = fs::path(corpus_dir) / "manifest.csv";
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty manifest: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,label,split")
    throw DataError("manifest header must be 'id,label,split': " + path.string());
  std::vector<ManifestRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    ManifestRow row;
    std::string label_field;
    if (!std::getline(ss, row.id, ',') || !std::getline(ss, label_field, ',') ||
        !std::getline(ss, row.split))
      throw DataError("malformed manifest row at line " + std::to_string(lineno));
    row.label = std::stoi(label_field) - 1;
    if (row.label < 0) throw DataError("manifest label must be >= 1 at line " +
                                       std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

int manifest_num_classes(const std::string& corpus_dir) {
  int max_label = -1;
  for (const auto& row : read_manifest(corpus_dir))
    max_label = std::max(max_label, row.label);
  return max_label + 1;
}

std::vector<Sample> load_split(const std::string& corpus_dir,
                               const std::string& split, const LoadOptions& opts) {
  std::vector<Sample> out;
  std::vector<std::string> missing_psi;
  for (const auto& row : read_manifest(corpus_dir)) {
    if (row.split != split) continue;
    Sample s;
    s.id = row.id;
    s.label = row.label;
    Tensor img = pgm::read((fs::path(corpus_dir) / "images" / (row.id + ".pgm")).string());
    int h = img.extent(0), w = img.extent(1);
    s.image = Tensor({1, h, w}, img.vec());

    fs::path psi_path = fs::path(corpus_dir) / "heatmaps" / (row.id + ".csv");
    if (fs::exists(psi_path)) {
      s.psi = heatmap::read_heatmap_csv(psi_path.string());
    } else if (opts.require_psi) {
      missing_psi.push_back(row.id);
    }
    if (opts.load_masks) {
      fs::path heart = fs::path(corpus_dir) / "masks" / "heart" / (row.id + ".pgm");
      fs::path lung = fs::path(corpus_dir) / "masks" / "lung" / (row.id + ".pgm");
      if (fs::exists(heart)) s.heart_mask = SegmentationMask{pgm::read(heart.string())};
      if (fs::exists(lung)) s.lung_mask = SegmentationMask{pgm::read(lung.string())};
    }
    out.push_back(std::move(s));
  }
  if (!missing_psi.empty()) {
    std::string msg = "missing heat maps for " + std::to_string(missing_psi.size()) +
                      " sample(s) in split '" + split + "':";
    size_t shown = std::min<size_t>(missing_psi.size(), 20);
    for (size_t i = 0; i < shown; ++i) msg += " " + missing_psi[i];
    if (shown < missing_psi.size()) msg += " ...";
    throw DataError(msg);
  }
  if (out.empty()) throw DataError("split '" + split + "' is empty in " + corpus_dir);
  return out;
}

}  // namespace ggcam::dataset
