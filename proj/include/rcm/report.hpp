#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rcm {

/// One tidy measurement row. Unused coordinates stay at their defaults
/// (k, m = 0; R, t = NaN; seed = -1) and print as empty cells.
struct Measurement {
    std::string experiment;
    std::string quantity;
    int d = 1;
    double alpha = 0.0;
    int k = 0;
    int m = 0;
    double R = std::numeric_limits<double>::quiet_NaN();
    std::int64_t seed = -1;
    double t = std::numeric_limits<double>::quiet_NaN();
    double value = 0.0;
};

/// One acceptance band evaluated by an experiment.
struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    /// Fitted line log y = slope log x + intercept, drawn over the x range.
    std::optional<std::pair<double, double>> fit;
    bool markers_only = false;
};

/// A log-log figure.
struct Plot {
    std::string name;
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

struct ExperimentResult {
    std::string experiment;
    std::vector<Measurement> rows;
    std::vector<Check> checks;
    std::vector<Plot> plots;
    /// Named scalars for the summary (fitted slopes, bounds, counts).
    std::map<std::string, double> summary;
    std::size_t steps = 0;

    bool passed() const;
};

/// Rows sorted by (experiment, quantity, k, m, R, seed, t); the order used on disk.
std::vector<Measurement> canonical_order(std::vector<Measurement> rows);

std::string to_csv(const std::vector<Measurement>& rows);
std::string to_svg(const Plot& plot);
/// Summary document: config echo, checks, scalars, timing.
std::string to_summary_json(const ExperimentResult& result, const std::string& config_echo, double wall_seconds,
                            bool partial);

/// Writes `text` to `path` through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& text);

/// measurements.csv, summary.json and one SVG per plot under `dir`.
void write_report(const std::filesystem::path& dir, const ExperimentResult& result, const std::string& config_echo,
                  double wall_seconds, bool partial = false);

} // namespace rcm
