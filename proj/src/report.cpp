#include "rcm/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace rcm {

namespace {

std::string number(double v)
{
    if (std::isnan(v)) {
        return "";
    }
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c == '"' ? "\"\"" : std::string(1, c);
    }
    return out + "\"";
}

std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '&':
            out += "&amp;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

/// NaN sorts before every number so missing coordinates group together.
bool nan_less(double a, double b)
{
    if (std::isnan(a)) {
        return !std::isnan(b);
    }
    if (std::isnan(b)) {
        return false;
    }
    return a < b;
}

} // namespace

bool ExperimentResult::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::vector<Measurement> canonical_order(std::vector<Measurement> rows)
{
    std::stable_sort(rows.begin(), rows.end(), [](const Measurement& a, const Measurement& b) {
        if (std::tie(a.experiment, a.quantity, a.k, a.m) != std::tie(b.experiment, b.quantity, b.k, b.m)) {
            return std::tie(a.experiment, a.quantity, a.k, a.m) < std::tie(b.experiment, b.quantity, b.k, b.m);
        }
        if (nan_less(a.R, b.R) || nan_less(b.R, a.R)) {
            return nan_less(a.R, b.R);
        }
        if (a.seed != b.seed) {
            return a.seed < b.seed;
        }
        return nan_less(a.t, b.t);
    });
    return rows;
}

std::string to_csv(const std::vector<Measurement>& rows)
{
    std::ostringstream out;
    out << "experiment,quantity,d,alpha,k,m,R,seed,t,value\n";
    for (const Measurement& r : rows) {
        out << csv_field(r.experiment) << ',' << csv_field(r.quantity) << ',' << r.d << ',' << number(r.alpha) << ','
            << (r.k > 0 ? std::to_string(r.k) : "") << ',' << (r.m > 0 ? std::to_string(r.m) : "") << ','
            << number(r.R) << ',' << (r.seed >= 0 ? std::to_string(r.seed) : "") << ',' << number(r.t) << ','
            << number(r.value) << '\n';
    }
    return out.str();
}

std::string to_svg(const Plot& plot)
{
    constexpr double W = 640;
    constexpr double H = 440;
    constexpr double left = 80;
    constexpr double right = 160;
    constexpr double top = 40;
    constexpr double bottom = 60;
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const Series& s : plot.series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (s.x[i] > 0 && s.y[i] > 0 && std::isfinite(s.y[i])) {
                x0 = std::min(x0, std::log10(s.x[i]));
                x1 = std::max(x1, std::log10(s.x[i]));
                y0 = std::min(y0, std::log10(s.y[i]));
                y1 = std::max(y1, std::log10(s.y[i]));
            }
        }
    }
    if (!(x1 >= x0)) {
        x0 = 0;
        x1 = 1;
        y0 = 0;
        y1 = 1;
    }
    const double xpad = std::max(0.05, 0.05 * (x1 - x0));
    const double ypad = std::max(0.05, 0.08 * (y1 - y0));
    x0 -= xpad;
    x1 += xpad;
    y0 -= ypad;
    y1 += ypad;
    auto px = [&](double lx) { return left + (lx - x0) / (x1 - x0) * (W - left - right); };
    auto py = [&](double ly) { return H - bottom - (ly - y0) / (y1 - y0) * (H - top - bottom); };

    std::ostringstream out;
    out.precision(6);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(plot.title)
        << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right << "\" height=\""
        << H - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
    // ticks at integer and half decades
    for (double e = std::ceil(2 * x0) / 2; e <= x1; e += 0.5) {
        out << "<line x1=\"" << px(e) << "\" x2=\"" << px(e) << "\" y1=\"" << H - bottom << "\" y2=\"" << H - bottom + 5
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << px(e) << "\" y=\"" << H - bottom + 18 << "\" text-anchor=\"middle\">" << std::pow(10.0, e)
            << "</text>\n";
    }
    const double ystep = (y1 - y0) > 6 ? 1.0 : 0.5;
    for (double e = std::ceil(y0 / ystep) * ystep; e <= y1; e += ystep) {
        out << "<line x1=\"" << left - 5 << "\" x2=\"" << left << "\" y1=\"" << py(e) << "\" y2=\"" << py(e)
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << left - 8 << "\" y=\"" << py(e) + 4 << "\" text-anchor=\"end\">" << std::pow(10.0, e)
            << "</text>\n";
    }
    out << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
        << xml_escape(plot.x_label) << "</text>\n";
    out << "<text transform=\"translate(18," << (top + H - bottom) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << xml_escape(plot.y_label) << "</text>\n";

    for (std::size_t s = 0; s < plot.series.size(); ++s) {
        const Series& series = plot.series[s];
        const char* color = palette[s % 6];
        std::ostringstream path;
        bool first = true;
        for (std::size_t i = 0; i < series.x.size(); ++i) {
            if (!(series.x[i] > 0 && series.y[i] > 0 && std::isfinite(series.y[i]))) {
                continue;
            }
            const double cx = px(std::log10(series.x[i]));
            const double cy = py(std::log10(series.y[i]));
            out << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"3\" fill=\"" << color << "\"/>\n";
            path << (first ? "M" : " L") << cx << ' ' << cy;
            first = false;
        }
        if (!series.markers_only && !first) {
            out << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << color << "\"/>\n";
        }
        if (series.fit && !series.x.empty()) {
            const auto [lo, hi] = std::minmax_element(series.x.begin(), series.x.end());
            const double la = std::log10(*lo);
            const double lb = std::log10(*hi);
            // the fit is in natural logs; the slope is base independent
            auto fy = [&](double l10x) {
                return (series.fit->first * l10x * std::log(10.0) + series.fit->second) / std::log(10.0);
            };
            out << "<line x1=\"" << px(la) << "\" y1=\"" << py(fy(la)) << "\" x2=\"" << px(lb) << "\" y2=\"" << py(fy(lb))
                << "\" stroke=\"" << color << "\" stroke-dasharray=\"6 4\"/>\n";
        }
        const double ly = top + 16 + 18 * static_cast<double>(s);
        out << "<rect x=\"" << W - right + 12 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\"" << color
            << "\"/>\n";
        std::string label = series.label;
        if (series.fit) {
            std::ostringstream sl;
            sl.precision(3);
            sl << " (slope " << series.fit->first << ")";
            label += sl.str();
        }
        out << "<text x=\"" << W - right + 26 << "\" y=\"" << ly << "\">" << xml_escape(label) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string to_summary_json(const ExperimentResult& result, const std::string& config_echo, double wall_seconds,
                            bool partial)
{
    nlohmann::ordered_json doc;
    doc["experiment"] = result.experiment;
    doc["passed"] = result.passed() && !partial;
    doc["partial"] = partial;
    doc["config"] = config_echo;
    doc["wall_seconds"] = wall_seconds;
    doc["steps"] = result.steps;
    doc["rows"] = result.rows.size();
    auto& checks = doc["checks"] = nlohmann::ordered_json::array();
    for (const Check& c : result.checks) {
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    }
    auto& scalars = doc["summary"] = nlohmann::ordered_json::object();
    for (const auto& [key, value] : result.summary) {
        if (std::isfinite(value)) {
            scalars[key] = value;
        } else {
            scalars[key] = number(value);
        }
    }
    return doc.dump(2) + "\n";
}

void write_atomic(const std::filesystem::path& path, const std::string& text)
{
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out << text;
        out.flush();
        if (!out) {
            throw std::runtime_error("short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

void write_report(const std::filesystem::path& dir, const ExperimentResult& result, const std::string& config_echo,
                  double wall_seconds, bool partial)
{
    std::filesystem::create_directories(dir);
    write_atomic(dir / "measurements.csv", to_csv(canonical_order(result.rows)));
    write_atomic(dir / "summary.json", to_summary_json(result, config_echo, wall_seconds, partial));
    for (const Plot& plot : result.plots) {
        write_atomic(dir / (plot.name + ".svg"), to_svg(plot));
    }
}

} // namespace rcm
