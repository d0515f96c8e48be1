#pragma once

#include "rcm/config.hpp"
#include "rcm/report.hpp"

#include <stdexcept>

namespace rcm {

/// A worker failed; `partial` holds the rows of every task that completed.
class ExperimentAborted : public std::runtime_error {
public:
    ExperimentAborted(const std::string& what, ExperimentResult partial)
        : std::runtime_error(what), partial(std::move(partial))
    {
    }
    ExperimentResult partial;
};

/// Dispatches on config.kind. Every experiment evaluates its acceptance bands into result.checks.
ExperimentResult run_experiment(const ExperimentConfig& config);

ExperimentResult homogenization_rate(const ExperimentConfig& config);
ExperimentResult corrector_scaling(const ExperimentConfig& config);
ExperimentResult operator_gaps(const ExperimentConfig& config);
ExperimentResult poincare_suite(const ExperimentConfig& config);
ExperimentResult cutoff_lemma(const ExperimentConfig& config);
ExperimentResult time_change_check(const ExperimentConfig& config);

/// Fitted-slope band for the bar-discrete operator gap:
/// [-2.4, -1.6] for alpha < 1, at most -1.5 at alpha = 1, -2(2-alpha) +- 0.4 above.
struct SlopeBand {
    double lo;
    double hi;
    bool contains(double s) const noexcept { return s >= lo && s <= hi; }
};
SlopeBand bar_gap_band(double alpha);

/// P(Z >= x) for the marginal law.
double exceedance(const MarginalLaw& law, double x);

} // namespace rcm
