#include "vlseg/prompt/components.hpp"

#include <array>

namespace vlseg::prompt {

std::vector<Component> label_components(const Mask& mask, int connectivity) {
    if (mask.empty()) throw Error("degenerate mask");
    if (connectivity != 4 && connectivity != 8) throw Error("connectivity must be 4 or 8");

    const int h = mask.h, w = mask.w;
    std::vector<int> label(static_cast<size_t>(h) * w, -1);
    std::vector<Component> comps;
    std::vector<int> stack;

    static constexpr std::array<int, 8> dy = {-1, 1, 0, 0, -1, -1, 1, 1};
    static constexpr std::array<int, 8> dx = {0, 0, -1, 1, -1, 1, -1, 1};
    const int ndirs = connectivity == 4 ? 4 : 8;

    for (int start = 0; start < h * w; ++start) {
        if (mask.v[static_cast<size_t>(start)] == 0 || label[static_cast<size_t>(start)] >= 0) continue;
        const int id = static_cast<int>(comps.size());
        comps.emplace_back();
        stack.clear();
        stack.push_back(start);
        label[static_cast<size_t>(start)] = id;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            const int y = p / w, x = p % w;
            Component& c = comps[static_cast<size_t>(id)];
            c.area += 1;
            c.sum_y += y;
            c.sum_x += x;
            for (int d = 0; d < ndirs; ++d) {
                const int ny = y + dy[static_cast<size_t>(d)], nx = x + dx[static_cast<size_t>(d)];
                if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                const int np = ny * w + nx;
                if (mask.v[static_cast<size_t>(np)] != 0 && label[static_cast<size_t>(np)] < 0) {
                    label[static_cast<size_t>(np)] = id;
                    stack.push_back(np);
                }
            }
        }
    }
    return comps;
}

int count_components(const Mask& mask, int connectivity) {
    return static_cast<int>(label_components(mask, connectivity).size());
}

std::string location_cell_name(double cy, double cx, int h, int w, int grid_rows, int grid_cols) {
    if (grid_rows != 3 || grid_cols != 3) throw Error("only the 3x3 location grid is supported");
    int row = static_cast<int>(cy * grid_rows / h);
    int col = static_cast<int>(cx * grid_cols / w);
    row = row < 0 ? 0 : (row >= grid_rows ? grid_rows - 1 : row);
    col = col < 0 ? 0 : (col >= grid_cols ? grid_cols - 1 : col);
    static const char* names[3][3] = {
        {"top left", "top", "top right"},
        {"left", "center", "right"},
        {"bottom left", "bottom", "bottom right"},
    };
    return names[row][col];
}

MaskDerivedAttributes extract_mask_attributes(const Mask& mask, const ExtractionConfig& config) {
    const auto comps = label_components(mask, config.connectivity);
    const double total = static_cast<double>(mask.h) * mask.w;

    size_t foreground = 0;
    for (const Component& c : comps) foreground += c.area;

    MaskDerivedAttributes out;
    out.area_ratio = static_cast<double>(foreground) / total;

    const double min_area = config.min_component_area_frac * total;
    for (const Component& c : comps) {
        if (static_cast<double>(c.area) < min_area) continue;
        out.component_count += 1;
        out.component_areas.push_back(c.area);
        const std::string cell = location_cell_name(c.centroid_y(), c.centroid_x(), mask.h, mask.w,
                                                    config.grid_rows, config.grid_cols);
        bool seen = false;
        for (const std::string& existing : out.location_words) seen |= (existing == cell);
        if (!seen) out.location_words.push_back(cell);
    }

    out.number_word = number_word(out.component_count);
    if (out.component_count == 0) {
        out.size_word = "none";
    } else if (out.area_ratio < config.small_max) {
        out.size_word = "small";
    } else if (out.area_ratio < config.medium_max) {
        out.size_word = "medium";
    } else {
        out.size_word = "large";
    }
    return out;
}

}  // namespace vlseg::prompt
