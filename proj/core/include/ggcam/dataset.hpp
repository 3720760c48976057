#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ggcam/eval.hpp"
#include "ggcam/tensor.hpp"

namespace ggcam {

struct Sample {
  std::string id;
  Tensor image;  // 1 x S x S, values in [0,1]
  int label;     // 0-based
  std::optional<Tensor> psi;  // H x W heat map, present for gaze-supervised runs
  std::optional<SegmentationMask> heart_mask;  // source resolution
  std::optional<SegmentationMask> lung_mask;
};

namespace dataset {

struct LoadOptions {
  bool require_psi = false;  // error listing missing heat maps when set
  bool load_masks = false;
};

// Reads manifest.csv and the referenced files for one split
// ("train" | "val" | "test"). Heat maps, when present, come from
// `<dir>/heatmaps/<id>.csv`.
std::vector<Sample> load_split(const std::string& corpus_dir,
                               const std::string& split,
                               const LoadOptions& opts = {});

int manifest_num_classes(const std::string& corpus_dir);

}  // namespace dataset

}  // namespace ggcam
