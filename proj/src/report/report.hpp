#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/serialization.hpp"
#include "eval/eval.hpp"
#include "refl/refl.hpp"

namespace rewarddance {

// Trailing moving average and population std over up to `window` entries.
std::vector<double> moving_average(const std::vector<double>& xs, std::size_t window);
std::vector<double> moving_std(const std::vector<double>& xs, std::size_t window);

// Smoothed reward line with a ±1 std band. The plotted series are embedded
// as JSON in a <metadata id="series"> element.
std::string reward_curve_svg(const std::vector<double>& rewards, std::size_t smoothing_window, const std::string& title);

// Reads the JSON series back out of an SVG produced above.
Json svg_series(const std::string& svg);

struct BubblePoint {
    std::string label;
    double final_metric = 0.0;  // x
    double late_variance = 0.0; // y
    double width = 1.0;         // bubble size
};

std::string bubble_chart_svg(const std::vector<BubblePoint>& points, const std::string& title);

void write_scaling_csv(const std::filesystem::path& path, const std::vector<ScalingRow>& rows);
std::string scaling_svg(const std::vector<ScalingRow>& rows, const std::string& title);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

} // namespace rewarddance
