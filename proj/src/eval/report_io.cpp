#include "vlseg/eval/report_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace vlseg::evaluation {

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::string reports_to_csv(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    out << "model,train_data,test_data,ptype,perturbation,n,dice_mean,dice_std\n";
    out.setf(std::ios::fixed);
    out.precision(4);
    for (const EvalReport& r : reports) {
        out << csv_escape(r.key.model) << "," << csv_escape(r.key.train_data) << ","
            << csv_escape(r.key.test_data) << "," << csv_escape(r.key.ptype) << ","
            << csv_escape(r.key.perturbation) << "," << r.count() << "," << r.mean_x100() << ","
            << r.std_x100() << "\n";
    }
    return out.str();
}

void write_reports_csv(const std::string& path, const std::vector<EvalReport>& reports) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write report csv: " + path);
    out << reports_to_csv(reports);
}

void write_reports_json(const std::string& path, const std::vector<EvalReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const EvalReport& r : reports) {
        arr.push_back({{"model", r.key.model},
                       {"train_data", r.key.train_data},
                       {"test_data", r.key.test_data},
                       {"ptype", r.key.ptype},
                       {"perturbation", r.key.perturbation},
                       {"n", r.count()},
                       {"dice_mean", r.mean_x100()},
                       {"dice_std", r.std_x100()},
                       {"per_sample", r.per_sample}});
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write report json: " + path);
    out << arr.dump(2) << "\n";
}

void write_grouped_bar_svg(const std::string& path, const std::string& title,
                           const std::vector<std::string>& group_labels,
                           const std::vector<BarSeries>& series, double y_max) {
    const int width = 160 + 110 * static_cast<int>(group_labels.size());
    const int height = 360;
    const double plot_x = 60, plot_y = 40, plot_w = width - plot_x - 20, plot_h = height - plot_y - 60;
    const double group_w = plot_w / std::max<size_t>(1, group_labels.size());
    const size_t nbars = std::max<size_t>(1, series.size());
    const double bar_w = group_w * 0.8 / static_cast<double>(nbars);
    static const char* palette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                                    "#8172b3", "#937860", "#da8bc3", "#8c8c8c"};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title
        << "</text>\n";

    for (int tick = 0; tick <= 5; ++tick) {
        const double v = y_max * tick / 5.0;
        const double y = plot_y + plot_h * (1.0 - tick / 5.0);
        svg << "<line x1=\"" << plot_x << "\" y1=\"" << y << "\" x2=\"" << plot_x + plot_w << "\" y2=\""
            << y << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << plot_x - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << v << "</text>\n";
    }

    for (size_t g = 0; g < group_labels.size(); ++g) {
        const double gx = plot_x + group_w * static_cast<double>(g) + group_w * 0.1;
        for (size_t s = 0; s < series.size(); ++s) {
            if (g >= series[s].values.size()) continue;
            const double v = std::clamp(series[s].values[g], 0.0, y_max);
            const double h = plot_h * v / y_max;
            const double x = gx + bar_w * static_cast<double>(s);
            const double y = plot_y + plot_h - h;
            svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar_w * 0.9 << "\" height=\""
                << h << "\" fill=\"" << palette[s % 8] << "\"/>\n";
            if (g < series[s].errors.size()) {
                const double e = plot_h * series[s].errors[g] / y_max;
                const double cx = x + bar_w * 0.45;
                svg << "<line x1=\"" << cx << "\" y1=\"" << std::max(plot_y, y - e) << "\" x2=\"" << cx
                    << "\" y2=\"" << std::min(plot_y + plot_h, y + e) << "\" stroke=\"#333333\"/>\n";
            }
        }
        svg << "<text x=\"" << plot_x + group_w * (static_cast<double>(g) + 0.5) << "\" y=\""
            << plot_y + plot_h + 16 << "\" text-anchor=\"middle\" font-size=\"11\">" << group_labels[g]
            << "</text>\n";
    }

    double lx = plot_x;
    const double ly = height - 18;
    for (size_t s = 0; s < series.size(); ++s) {
        svg << "<rect x=\"" << lx << "\" y=\"" << ly - 10 << "\" width=\"12\" height=\"12\" fill=\""
            << palette[s % 8] << "\"/>\n";
        svg << "<text x=\"" << lx + 16 << "\" y=\"" << ly << "\" font-size=\"11\">" << series[s].label
            << "</text>\n";
        lx += 24 + 8.0 * static_cast<double>(series[s].label.size());
    }
    svg << "</svg>\n";

    std::ofstream out(path);
    if (!out) throw Error("cannot write chart: " + path);
    out << svg.str();
}

}  // namespace vlseg::evaluation
