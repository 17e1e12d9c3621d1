#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace rewarddance {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 50.0;

struct Axis {
    double lo = 0.0;
    double hi = 1.0;

    double map(double v, double px_lo, double px_hi) const
    {
        const double span = hi - lo;
        const double f = span > 0.0 ? (v - lo) / span : 0.5;
        return px_lo + f * (px_hi - px_lo);
    }
};

Axis axis_for(const std::vector<double>& a, const std::vector<double>& b = {})
{
    Axis ax { 0.0, 0.0 };
    bool first = true;
    for (const auto* v : { &a, &b }) {
        for (double x : *v) {
            if (first) {
                ax.lo = ax.hi = x;
                first = false;
            }
            ax.lo = std::min(ax.lo, x);
            ax.hi = std::max(ax.hi, x);
        }
    }
    if (ax.hi == ax.lo) {
        ax.lo -= 0.5;
        ax.hi += 0.5;
    }
    return ax;
}

std::string fmt(double v)
{
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string header(const std::string& title, const Json& series)
{
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    out << "<metadata id=\"series\">" << escape(series.dump()) << "</metadata>\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
        << escape(title) << "</text>\n";
    out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin << "\" y2=\""
        << kHeight - kMargin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\"" << kHeight - kMargin
        << "\" stroke=\"black\"/>\n";
    return out.str();
}

void axis_labels(std::ostringstream& out, const Axis& x, const Axis& y, const std::string& xlabel, const std::string& ylabel)
{
    out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 16 << "\" font-family=\"sans-serif\" font-size=\"10\">"
        << fmt(x.lo) << "</text>\n";
    out << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 16
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(x.hi) << "</text>\n";
    out << "<text x=\"" << kMargin - 4 << "\" y=\"" << kHeight - kMargin
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(y.lo) << "</text>\n";
    out << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(y.hi) << "</text>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(xlabel) << "</text>\n";
    out << "<text x=\"14\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 14 " << kHeight / 2
        << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(ylabel) << "</text>\n";
}

} // namespace

std::vector<double> moving_average(const std::vector<double>& xs, std::size_t window)
{
    require(window >= 1, ErrorCode::InvalidArgument, "smoothing window must be at least 1");
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::size_t begin = i + 1 > window ? i + 1 - window : 0;
        double s = 0.0;
        for (std::size_t k = begin; k <= i; ++k) {
            s += xs[k];
        }
        out[i] = window == 1 ? xs[i] : s / static_cast<double>(i + 1 - begin);
    }
    return out;
}

std::vector<double> moving_std(const std::vector<double>& xs, std::size_t window)
{
    const auto mean = moving_average(xs, window);
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::size_t begin = i + 1 > window ? i + 1 - window : 0;
        double v = 0.0;
        for (std::size_t k = begin; k <= i; ++k) {
            v += (xs[k] - mean[i]) * (xs[k] - mean[i]);
        }
        out[i] = std::sqrt(v / static_cast<double>(i + 1 - begin));
    }
    return out;
}

std::string reward_curve_svg(const std::vector<double>& rewards, std::size_t smoothing_window, const std::string& title)
{
    require(!rewards.empty(), ErrorCode::Empty, "reward series is empty");
    const auto smooth = moving_average(rewards, smoothing_window);
    const auto sd = moving_std(rewards, smoothing_window);
    std::vector<double> lo(smooth.size()), hi(smooth.size());
    for (std::size_t i = 0; i < smooth.size(); ++i) {
        lo[i] = smooth[i] - sd[i];
        hi[i] = smooth[i] + sd[i];
    }
    const Json series { { "window", smoothing_window }, { "smoothed", smooth }, { "band_low", lo }, { "band_high", hi } };
    const Axis x { 0.0, static_cast<double>(std::max<std::size_t>(1, rewards.size() - 1)) };
    const Axis y = axis_for(lo, hi);
    auto px = [&](std::size_t i) { return x.map(static_cast<double>(i), kMargin, kWidth - kMargin); };
    auto py = [&](double v) { return y.map(v, kHeight - kMargin, kMargin); };

    std::ostringstream out;
    out << header(title, series);
    out << "<polygon fill=\"#1f77b4\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < hi.size(); ++i) {
        out << fmt(px(i)) << ',' << fmt(py(hi[i])) << ' ';
    }
    for (std::size_t i = lo.size(); i-- > 0;) {
        out << fmt(px(i)) << ',' << fmt(py(lo[i])) << ' ';
    }
    out << "\"/>\n<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < smooth.size(); ++i) {
        out << fmt(px(i)) << ',' << fmt(py(smooth[i])) << ' ';
    }
    out << "\"/>\n";
    axis_labels(out, x, y, "iteration", "reward");
    out << "</svg>\n";
    return out.str();
}

Json svg_series(const std::string& svg)
{
    const std::string open = "<metadata id=\"series\">";
    const auto b = svg.find(open);
    const auto e = svg.find("</metadata>", b);
    require(b != std::string::npos && e != std::string::npos, ErrorCode::Parse, "SVG has no embedded series");
    std::string text = svg.substr(b + open.size(), e - b - open.size());
    for (const auto& [from, to] : std::vector<std::pair<std::string, std::string>> {
             { "&quot;", "\"" }, { "&lt;", "<" }, { "&gt;", ">" }, { "&amp;", "&" } }) {
        for (std::size_t p = text.find(from); p != std::string::npos; p = text.find(from, p + to.size())) {
            text.replace(p, from.size(), to);
        }
    }
    return Json::parse(text);
}

std::string bubble_chart_svg(const std::vector<BubblePoint>& points, const std::string& title)
{
    require(!points.empty(), ErrorCode::Empty, "bubble chart needs at least one point");
    std::vector<double> xs, ys, ws;
    Json series = Json::array();
    for (const auto& p : points) {
        xs.push_back(p.final_metric);
        ys.push_back(p.late_variance);
        ws.push_back(p.width);
        series.push_back(Json { { "label", p.label }, { "final_metric", p.final_metric },
            { "late_variance", p.late_variance }, { "width", p.width } });
    }
    const Axis x = axis_for(xs), y = axis_for(ys);
    const double wmax = *std::max_element(ws.begin(), ws.end());
    std::ostringstream out;
    out << header(title, Json { { "bubbles", series } });
    for (const auto& p : points) {
        const double r = 4.0 + 20.0 * std::sqrt(std::max(p.width, 0.0) / (wmax > 0.0 ? wmax : 1.0));
        const double cx = x.map(p.final_metric, kMargin + 20, kWidth - kMargin - 20);
        const double cy = y.map(p.late_variance, kHeight - kMargin - 20, kMargin + 20);
        out << "<circle cx=\"" << fmt(cx) << "\" cy=\"" << fmt(cy) << "\" r=\"" << fmt(r)
            << "\" fill=\"#ff7f0e\" fill-opacity=\"0.5\" stroke=\"#ff7f0e\"/>\n";
        out << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(cy - r - 3)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << escape(p.label) << "</text>\n";
    }
    axis_labels(out, x, y, "final windowed reward", "late-window reward variance");
    out << "</svg>\n";
    return out.str();
}

void write_scaling_csv(const std::filesystem::path& path, const std::vector<ScalingRow>& rows)
{
    std::ostringstream out;
    out.precision(17);
    out << "width,id_accuracy,ood_accuracy\n";
    for (const auto& r : rows) {
        out << r.width << ',' << r.id_accuracy << ',' << r.ood_accuracy << '\n';
    }
    write_text(path, out.str());
}

std::string scaling_svg(const std::vector<ScalingRow>& rows, const std::string& title)
{
    require(!rows.empty(), ErrorCode::Empty, "scaling plot needs at least one row");
    std::vector<double> lw, id, ood;
    Json series = Json::array();
    for (const auto& r : rows) {
        lw.push_back(std::log2(static_cast<double>(std::max<std::size_t>(1, r.width))));
        id.push_back(r.id_accuracy);
        ood.push_back(r.ood_accuracy);
        series.push_back(Json { { "width", r.width }, { "id_accuracy", r.id_accuracy }, { "ood_accuracy", r.ood_accuracy } });
    }
    const Axis x = axis_for(lw), y = axis_for(id, ood);
    std::ostringstream out;
    out << header(title, Json { { "rows", series } });
    for (const auto& [values, color] : { std::pair { &id, "#1f77b4" }, std::pair { &ood, "#d62728" } }) {
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < values->size(); ++i) {
            out << fmt(x.map(lw[i], kMargin, kWidth - kMargin)) << ',' << fmt(y.map((*values)[i], kHeight - kMargin, kMargin))
                << ' ';
        }
        out << "\"/>\n";
    }
    axis_labels(out, x, y, "log2 hidden width", "accuracy (blue ID, red OOD)");
    out << "</svg>\n";
    return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out << text;
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

} // namespace rewarddance
