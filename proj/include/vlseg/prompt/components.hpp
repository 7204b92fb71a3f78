#pragma once

#include <vector>

#include "vlseg/image.hpp"
#include "vlseg/prompt/attributes.hpp"

namespace vlseg::prompt {

// One maximal connected foreground region. Components are numbered in
// raster-scan order of their first pixel.
struct Component {
    size_t area = 0;
    double sum_y = 0.0;  // sum of pixel row indices
    double sum_x = 0.0;
    double centroid_y() const { return sum_y / static_cast<double>(area) + 0.5; }
    double centroid_x() const { return sum_x / static_cast<double>(area) + 0.5; }
};

// Labels all foreground components. Throws "degenerate mask" for a 0x0 mask.
std::vector<Component> label_components(const Mask& mask, int connectivity);

int count_components(const Mask& mask, int connectivity);

// Derives number/size/location words from a mask per the extraction config.
MaskDerivedAttributes extract_mask_attributes(const Mask& mask, const ExtractionConfig& config = {});

// Grid-cell name for a centroid on a 3x3 grid ("top left", "center", ...).
std::string location_cell_name(double cy, double cx, int h, int w, int grid_rows, int grid_cols);

}  // namespace vlseg::prompt
