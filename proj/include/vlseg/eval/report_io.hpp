#pragma once

#include <string>
#include <vector>

#include "vlseg/eval/evaluate.hpp"

namespace vlseg::evaluation {

// CSV with columns model,train_data,test_data,ptype,perturbation,n,dice_mean,dice_std
void write_reports_csv(const std::string& path, const std::vector<EvalReport>& reports);
std::string reports_to_csv(const std::vector<EvalReport>& reports);
void write_reports_json(const std::string& path, const std::vector<EvalReport>& reports);

// Grouped bar chart (one group per prompt type, one bar per model) with
// std-dev whiskers, written as a static SVG image.
struct BarSeries {
    std::string label;
    std::vector<double> values;  // one per group
    std::vector<double> errors;  // same length, may be empty
};

void write_grouped_bar_svg(const std::string& path, const std::string& title,
                           const std::vector<std::string>& group_labels,
                           const std::vector<BarSeries>& series, double y_max = 100.0);

}  // namespace vlseg::evaluation
