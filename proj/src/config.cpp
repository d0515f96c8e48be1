#include "rcm/config.hpp"

#include "rcm/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace rcm {

namespace {

using boost::property_tree::ptree;

const std::map<ExperimentKind, std::pair<std::string, std::string>>& kind_table()
{
    static const std::map<ExperimentKind, std::pair<std::string, std::string>> table{
        {ExperimentKind::homogenization_rate,
         {"homogenization-rate", "sup-in-time L2 error of the random walk equation against the limit, swept over k and seeds"}},
        {ExperimentKind::corrector_scaling,
         {"corrector-scaling", "normalized corrector energy Q(m) on dyadic boxes, swept over m and seeds"}},
        {ExperimentKind::operator_gaps,
         {"operator-gaps", "bar-discrete versus continuum operator gap with the averaging term removed; optional random gaps"}},
        {ExperimentKind::poincare_suite,
         {"poincare-suite", "good-vertex fractions, Poincare ratios and multi-scale constants across scales"}},
        {ExperimentKind::cutoff_lemma, {"cutoff-lemma", "L2 effect of the cutoff psi_R on the limit operator, swept over R"}},
        {ExperimentKind::time_change_check,
         {"time-change-check", "solution against the time-changed solution read at the changed clock"}},
    };
    return table;
}

double parse_double(const std::string& field, const std::string& text)
{
    if (text == "inf" || text == "infinity") {
        return std::numeric_limits<double>::infinity();
    }
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError(field + ": '" + text + "' is not a number");
    }
}

long long parse_integer(const std::string& field, const std::string& text)
{
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(text, &pos);
        if (pos != text.size()) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError(field + ": '" + text + "' is not an integer");
    }
}

bool parse_bool(const std::string& field, const std::string& text)
{
    if (text == "true" || text == "1" || text == "yes") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no") {
        return false;
    }
    throw ConfigError(field + ": '" + text + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) {
            continue;
        }
        out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

template <class T>
std::vector<T> parse_int_list(const std::string& field, const std::string& text)
{
    std::vector<T> out;
    for (const auto& item : split_list(text)) {
        const long long v = parse_integer(field, item);
        if constexpr (std::is_unsigned_v<T>) {
            if (v < 0) {
                throw ConfigError(field + ": entries must be non-negative");
            }
        }
        out.push_back(static_cast<T>(v));
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& field, const std::string& text)
{
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        out.push_back(parse_double(field, item));
    }
    return out;
}

std::string format(double v)
{
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

template <class T>
std::string join(const std::vector<T>& values)
{
    std::ostringstream out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out << ", ";
        }
        if constexpr (std::is_floating_point_v<T>) {
            out << format(values[i]);
        } else {
            out << values[i];
        }
    }
    return out.str();
}

const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"experiment", {"kind", "name"}},
        {"model", {"d", "alpha", "T", "beta", "enforce_theorem_hypotheses"}},
        {"environment", {"kind", "marginal", "q", "lo", "hi", "mean", "K", "A", "rho"}},
        {"lattice", {"half_width", "k_list", "reference_scale"}},
        {"solver", {"cfl", "snapshots", "scheme", "dt"}},
        {"initial", {"radius", "amplitude"}},
        {"source", {"kind", "shift", "a0", "a1"}},
        {"profile", {"kind", "radius", "amplitude", "beta", "omega", "phase"}},
        {"correctors", {"m_list", "T"}},
        {"diagnostics",
         {"radii", "r_list", "multiscale_levels", "multiscale_depth", "samples", "draws", "delta", "random_gaps",
          "grid_points_per_unit"}},
        {"run", {"seeds", "seed_offset", "threads", "output"}},
    };
    return keys;
}

bool is_power_of_two(long long v)
{
    return v > 0 && (v & (v - 1)) == 0;
}

template <class T>
bool strictly_increasing(const std::vector<T>& v)
{
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] > v[i - 1])) {
            return false;
        }
    }
    return true;
}

ExperimentConfig from_tree(const ptree& tree)
{
    for (const auto& [section, body] : tree) {
        const auto it = known_keys().find(section);
        if (it == known_keys().end()) {
            throw ConfigError("unknown section [" + section + "]");
        }
        if (!body.data().empty() && body.empty()) {
            throw ConfigError("key '" + section + "' outside a section");
        }
        for (const auto& [key, value] : body) {
            if (!it->second.count(key)) {
                throw ConfigError("unknown key " + section + "." + key);
            }
        }
    }

    ExperimentConfig c;
    auto get = [&](const std::string& path) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(ptree::path_type(path, '.'))) {
            return *v;
        }
        return std::nullopt;
    };
    auto number = [&](const std::string& path, double& target) {
        if (auto v = get(path)) {
            target = parse_double(path, *v);
        }
    };
    auto integer = [&](const std::string& path, auto& target) {
        if (auto v = get(path)) {
            target = static_cast<std::remove_reference_t<decltype(target)>>(parse_integer(path, *v));
        }
    };

    const auto kind = get("experiment.kind");
    if (!kind) {
        throw ConfigError("experiment.kind is required");
    }
    c.kind = experiment_kind_from_string(*kind);
    c.name = get("experiment.name").value_or(to_string(c.kind));

    integer("model.d", c.d);
    number("model.alpha", c.alpha);
    number("model.T", c.T);
    number("model.beta", c.beta);
    if (auto v = get("model.enforce_theorem_hypotheses")) {
        c.enforce_theorem_hypotheses = parse_bool("model.enforce_theorem_hypotheses", *v);
    }

    if (auto v = get("environment.kind")) {
        c.environment = environment_kind_from_string(*v);
    }
    const std::string marginal = get("environment.marginal").value_or("uniform02");
    if (marginal == "uniform02") {
        c.marginal = MarginalLaw::uniform02();
    } else if (marginal == "bernoulli") {
        double q = 0.3;
        number("environment.q", q);
        c.marginal = MarginalLaw::bernoulli(q);
    } else if (marginal == "two_point") {
        double lo = 0.5;
        double hi = 2.0;
        number("environment.lo", lo);
        number("environment.hi", hi);
        c.marginal = MarginalLaw::two_point(lo, hi);
    } else {
        throw ConfigError("environment.marginal: unknown law '" + marginal + "'");
    }
    const std::string mean = get("environment.mean").value_or("constant");
    double K = 1.0;
    number("environment.K", K);
    if (mean == "constant") {
        if (get("environment.A") || get("environment.rho")) {
            throw ConfigError("environment.A and environment.rho need environment.mean = decaying");
        }
        c.profile = MeanProfile::constant(K);
    } else if (mean == "decaying") {
        double A = 0.5;
        double rho = 1.0;
        number("environment.A", A);
        number("environment.rho", rho);
        c.profile = MeanProfile::decaying(K, A, rho);
    } else {
        throw ConfigError("environment.mean: unknown profile '" + mean + "'");
    }

    number("lattice.half_width", c.half_width);
    if (auto v = get("lattice.k_list")) {
        c.k_list = parse_int_list<int>("lattice.k_list", *v);
    }
    integer("lattice.reference_scale", c.reference_scale);

    number("solver.cfl", c.solver.cfl_fraction);
    integer("solver.snapshots", c.solver.snapshots);
    if (auto v = get("solver.scheme")) {
        c.solver.scheme = scheme_from_string(*v);
    }
    if (auto v = get("solver.dt")) {
        c.solver.dt_override = parse_double("solver.dt", *v);
    }

    number("initial.radius", c.g_radius);
    number("initial.amplitude", c.g_amplitude);

    if (auto v = get("source.kind")) {
        c.source = source_kind_from_string(*v);
    }
    number("source.shift", c.source_shift);
    number("source.a0", c.source_a0);
    number("source.a1", c.source_a1);

    if (auto v = get("profile.kind")) {
        c.test_profile.kind = profile_kind_from_string(*v);
    }
    number("profile.radius", c.test_profile.radius);
    number("profile.amplitude", c.test_profile.amplitude);
    number("profile.beta", c.test_profile.beta);
    number("profile.omega", c.test_profile.omega);
    number("profile.phase", c.test_profile.phase);
    c.test_profile.d = c.d;

    if (auto v = get("correctors.m_list")) {
        c.m_list = parse_int_list<int>("correctors.m_list", *v);
    }
    number("correctors.T", c.corrector_T);

    if (auto v = get("diagnostics.radii")) {
        c.radii = parse_double_list("diagnostics.radii", *v);
    }
    if (auto v = get("diagnostics.r_list")) {
        c.r_list = parse_int_list<int>("diagnostics.r_list", *v);
    }
    if (auto v = get("diagnostics.multiscale_levels")) {
        c.multiscale_levels = parse_int_list<int>("diagnostics.multiscale_levels", *v);
    }
    integer("diagnostics.multiscale_depth", c.multiscale_depth);
    integer("diagnostics.samples", c.samples);
    integer("diagnostics.draws", c.draws);
    number("diagnostics.delta", c.delta);
    if (auto v = get("diagnostics.random_gaps")) {
        c.random_gaps = parse_bool("diagnostics.random_gaps", *v);
    }
    integer("diagnostics.grid_points_per_unit", c.grid_points_per_unit);

    if (auto v = get("run.seeds")) {
        c.seeds = parse_int_list<std::uint64_t>("run.seeds", *v);
    }
    integer("run.seed_offset", c.seed_offset);
    integer("run.threads", c.threads);
    if (auto v = get("run.output")) {
        c.output = *v;
    }
    validate(c);
    return c;
}

} // namespace

std::string to_string(ExperimentKind kind)
{
    return kind_table().at(kind).first;
}

ExperimentKind experiment_kind_from_string(const std::string& name)
{
    for (const auto& [kind, entry] : kind_table()) {
        if (entry.first == name) {
            return kind;
        }
    }
    throw ConfigError("experiment.kind: unknown experiment '" + name + "'");
}

std::vector<ExperimentKind> all_experiment_kinds()
{
    std::vector<ExperimentKind> out;
    for (const auto& entry : kind_table()) {
        out.push_back(entry.first);
    }
    return out;
}

std::string describe(ExperimentKind kind)
{
    return kind_table().at(kind).second;
}

std::string to_string(SourceKind kind)
{
    switch (kind) {
    case SourceKind::zero:
        return "zero";
    case SourceKind::modulated:
        return "modulated";
    case SourceKind::cutoff_duhamel:
        return "cutoff_duhamel";
    }
    return "unknown";
}

SourceKind source_kind_from_string(const std::string& name)
{
    if (name == "zero") {
        return SourceKind::zero;
    }
    if (name == "modulated") {
        return SourceKind::modulated;
    }
    if (name == "cutoff_duhamel") {
        return SourceKind::cutoff_duhamel;
    }
    throw ConfigError("source.kind: unknown source '" + name + "'");
}

ExperimentConfig parse_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::stringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str());
}

ExperimentConfig parse_config_text(const std::string& text)
{
    ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return from_tree(tree);
}

void validate(const ExperimentConfig& c)
{
    if (c.d < 1 || c.d > 3) {
        throw ConfigError("model.d must be 1, 2 or 3");
    }
    if (!(c.alpha > 0.0 && c.alpha < 2.0)) {
        throw ConfigError("model.alpha must lie in (0,2)");
    }
    if (c.enforce_theorem_hypotheses && !(c.d > c.alpha)) {
        throw ConfigError("model.alpha: d > alpha is required (set model.enforce_theorem_hypotheses = false to override)");
    }
    if (!(c.T > 0.0) || !std::isfinite(c.T)) {
        throw ConfigError("model.T must be positive and finite");
    }
    if (!(c.beta > 0.0)) {
        throw ConfigError("model.beta must be positive (inf for compact sources)");
    }
    if (!(c.half_width > 0.0)) {
        throw ConfigError("lattice.half_width must be positive");
    }
    if (c.k_list.empty()) {
        throw ConfigError("lattice.k_list must not be empty");
    }
    for (int k : c.k_list) {
        if (!is_power_of_two(k)) {
            throw ConfigError("lattice.k_list: entries must be powers of two");
        }
        const double sites = 2.0 * c.half_width * k;
        if (std::abs(sites - std::round(sites)) > 1e-9) {
            throw ConfigError("lattice.half_width: 2 R k must be an integer for every k");
        }
    }
    if (!strictly_increasing(c.k_list)) {
        throw ConfigError("lattice.k_list must be sorted and free of repeats");
    }
    if (c.reference_scale < 1 || std::any_of(c.k_list.begin(), c.k_list.end(), [&](int k) { return c.reference_scale % k; })) {
        throw ConfigError("lattice.reference_scale must be a multiple of every k");
    }
    if (!(c.solver.cfl_fraction > 0.0 && c.solver.cfl_fraction <= 1.0)) {
        throw ConfigError("solver.cfl must lie in (0,1]");
    }
    if (c.solver.snapshots < 1) {
        throw ConfigError("solver.snapshots must be positive");
    }
    if (c.solver.dt_override && !(*c.solver.dt_override > 0.0)) {
        throw ConfigError("solver.dt must be positive");
    }
    if (!(c.g_radius > 0.0)) {
        throw ConfigError("initial.radius must be positive");
    }
    if (c.source == SourceKind::cutoff_duhamel && std::isfinite(c.beta)) {
        throw ConfigError("source.kind: cutoff_duhamel sources are compactly supported and need model.beta = inf");
    }
    if (c.source == SourceKind::modulated && !std::isfinite(c.beta)) {
        throw ConfigError("source.kind: modulated sources decay polynomially and need a finite model.beta");
    }
    if (c.source == SourceKind::cutoff_duhamel && !(c.source_shift + 2.0 < c.half_width)) {
        throw ConfigError("source.shift: the cutoff support shift + 2 must stay inside the torus");
    }
    if (!(c.test_profile.radius > 0.0) || !(c.test_profile.beta > 0.0)) {
        throw ConfigError("profile.radius and profile.beta must be positive");
    }
    if (c.m_list.empty() || c.m_list.front() < 1 || !strictly_increasing(c.m_list)) {
        throw ConfigError("correctors.m_list must be increasing levels >= 1");
    }
    if (!(c.corrector_T > 0.0)) {
        throw ConfigError("correctors.T must be positive");
    }
    if (c.radii.empty() || c.radii.front() < 1.0 || !strictly_increasing(c.radii)) {
        throw ConfigError("diagnostics.radii must be increasing and >= 1");
    }
    if (c.r_list.empty() || c.r_list.front() < 1 || !strictly_increasing(c.r_list)) {
        throw ConfigError("diagnostics.r_list must be increasing and >= 1");
    }
    if (c.multiscale_levels.empty() || !strictly_increasing(c.multiscale_levels) ||
        c.multiscale_levels.front() < c.multiscale_depth || c.multiscale_depth < 0) {
        throw ConfigError("diagnostics.multiscale_levels must be increasing and at least multiscale_depth");
    }
    if (c.samples < 1 || c.draws < 1) {
        throw ConfigError("diagnostics.samples and diagnostics.draws must be positive");
    }
    if (!(c.delta > 0.0)) {
        throw ConfigError("diagnostics.delta must be positive");
    }
    if (c.grid_points_per_unit < 1) {
        throw ConfigError("diagnostics.grid_points_per_unit must be positive");
    }
    if (c.seeds.empty()) {
        throw ConfigError("run.seeds is required (no ambient randomness)");
    }
    std::set<std::uint64_t> distinct(c.seeds.begin(), c.seeds.end());
    if (distinct.size() != c.seeds.size()) {
        throw ConfigError("run.seeds must be distinct");
    }
    if (c.threads < 1) {
        throw ConfigError("run.threads must be at least 1");
    }
}

std::string echo_config(const ExperimentConfig& c)
{
    std::ostringstream out;
    out << "[experiment]\nkind = " << to_string(c.kind) << "\nname = " << c.name << "\n\n";
    out << "[model]\nd = " << c.d << "\nalpha = " << format(c.alpha) << "\nT = " << format(c.T)
        << "\nbeta = " << format(c.beta) << "\nenforce_theorem_hypotheses = "
        << (c.enforce_theorem_hypotheses ? "true" : "false") << "\n\n";
    out << "[environment]\nkind = " << to_string(c.environment) << "\n";
    switch (c.marginal.kind()) {
    case MarginalLaw::Kind::uniform02:
        out << "marginal = uniform02\n";
        break;
    case MarginalLaw::Kind::bernoulli:
        out << "marginal = bernoulli\nq = " << format(c.marginal.q()) << "\n";
        break;
    case MarginalLaw::Kind::two_point:
        out << "marginal = two_point\nlo = " << format(c.marginal.lo()) << "\nhi = " << format(c.marginal.hi()) << "\n";
        break;
    }
    if (c.profile.kind() == MeanProfile::Kind::constant) {
        out << "mean = constant\nK = " << format(c.profile.limit()) << "\n\n";
    } else {
        out << "mean = decaying\nK = " << format(c.profile.limit()) << "\nA = " << format(c.profile.amplitude())
            << "\nrho = " << format(c.profile.rate()) << "\n\n";
    }
    out << "[lattice]\nhalf_width = " << format(c.half_width) << "\nk_list = " << join(c.k_list)
        << "\nreference_scale = " << c.reference_scale << "\n\n";
    out << "[solver]\ncfl = " << format(c.solver.cfl_fraction) << "\nsnapshots = " << c.solver.snapshots
        << "\nscheme = " << to_string(c.solver.scheme) << "\n";
    if (c.solver.dt_override) {
        out << "dt = " << format(*c.solver.dt_override) << "\n";
    }
    out << "\n[initial]\nradius = " << format(c.g_radius) << "\namplitude = " << format(c.g_amplitude) << "\n\n";
    out << "[source]\nkind = " << to_string(c.source) << "\nshift = " << format(c.source_shift)
        << "\na0 = " << format(c.source_a0) << "\na1 = " << format(c.source_a1) << "\n\n";
    out << "[profile]\nkind = " << to_string(c.test_profile.kind) << "\nradius = " << format(c.test_profile.radius)
        << "\namplitude = " << format(c.test_profile.amplitude) << "\nbeta = " << format(c.test_profile.beta)
        << "\nomega = " << format(c.test_profile.omega) << "\nphase = " << format(c.test_profile.phase) << "\n\n";
    out << "[correctors]\nm_list = " << join(c.m_list) << "\nT = " << format(c.corrector_T) << "\n\n";
    out << "[diagnostics]\nradii = " << join(c.radii) << "\nr_list = " << join(c.r_list)
        << "\nmultiscale_levels = " << join(c.multiscale_levels) << "\nmultiscale_depth = " << c.multiscale_depth
        << "\nsamples = " << c.samples << "\ndraws = " << c.draws << "\ndelta = " << format(c.delta)
        << "\nrandom_gaps = " << (c.random_gaps ? "true" : "false")
        << "\ngrid_points_per_unit = " << c.grid_points_per_unit << "\n\n";
    out << "[run]\nseeds = " << join(c.seeds) << "\nseed_offset = " << c.seed_offset << "\nthreads = " << c.threads
        << "\noutput = " << c.output << "\n";
    return out.str();
}

EnvironmentSpec environment_spec(const ExperimentConfig& c, std::uint64_t seed)
{
    EnvironmentSpec spec;
    spec.kind = c.environment;
    spec.marginal = c.marginal;
    spec.profile = c.profile;
    spec.seed = seed + c.seed_offset;
    return spec;
}

} // namespace rcm
