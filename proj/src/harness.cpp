#include "fracsub/harness.hpp"

#include "fracsub/errors.hpp"
#include "fracsub/inverse_time.hpp"
#include "fracsub/numerics.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace fracsub {

namespace {

constexpr std::size_t kBlock = 4096;

std::string fmt(double v)
{
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

// Welford accumulator with Chan's merge.
struct Moments {
    double n = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x)
    {
        n += 1.0;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }

    void merge(const Moments& o)
    {
        if (o.n == 0.0) return;
        const double total = n + o.n;
        const double d = o.mean - mean;
        mean += d * o.n / total;
        m2 += o.m2 + d * d * n * o.n / total;
        n = total;
    }

    [[nodiscard]] double std_error() const { return n > 1.0 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0; }
};

// ---- YAML walking ----

[[noreturn]] void bad_key(const std::string& section, const std::string& key)
{
    throw ConfigError("unknown config key '" + (section.empty() ? key : section + "." + key) + "'");
}

template <class T>
T scalar(const YAML::Node& node, const std::string& key)
{
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("config key '" + key + "' has an invalid value");
    }
}

std::vector<double> number_list(const YAML::Node& node, const std::string& key)
{
    if (node.IsScalar()) return {scalar<double>(node, key)};
    if (!node.IsSequence()) throw ConfigError("config key '" + key + "' must be a number or a list of numbers");
    std::vector<double> out;
    for (const auto& item : node) out.push_back(scalar<double>(item, key));
    return out;
}

void require_map(const YAML::Node& node, const std::string& key)
{
    if (!node.IsMap()) throw ConfigError("config key '" + key + "' must be a table");
}

DensityMethod parse_method(const std::string& name)
{
    if (name == "kde") return DensityMethod::kde;
    if (name == "histogram") return DensityMethod::histogram;
    throw ConfigError("density.method must be kde or histogram, got '" + name + "'");
}

void apply_grid(GridSpec& grid, const std::string& section, const std::string& key, const YAML::Node& v)
{
    if (key == "lo")
        grid.lo = scalar<double>(v, section + ".lo");
    else if (key == "hi")
        grid.hi = scalar<double>(v, section + ".hi");
    else if (key == "points")
        grid.points = scalar<std::size_t>(v, section + ".points");
    else
        bad_key(section, key);
}

void apply_node(ExperimentConfig& cfg, const YAML::Node& root)
{
    require_map(root, "<root>");
    for (const auto& entry : root) {
        const auto key = entry.first.as<std::string>();
        const YAML::Node& v = entry.second;
        if (key == "experiment") {
            cfg.kind = parse_experiment_kind(scalar<std::string>(v, key));
        } else if (key == "seed") {
            cfg.scheme.seed = scalar<std::uint64_t>(v, key);
        } else if (key == "threads") {
            cfg.threads = scalar<unsigned>(v, key);
        } else if (key == "out") {
            cfg.out = scalar<std::string>(v, key);
        } else if (key == "golden") {
            cfg.golden_path = scalar<std::string>(v, key);
        } else if (key == "scheme") {
            require_map(v, key);
            for (const auto& e : v) {
                const auto k = e.first.as<std::string>();
                const std::string name = "scheme." + k;
                auto& s = cfg.scheme;
                if (k == "beta") s.beta = scalar<double>(e.second, name);
                else if (k == "alpha") s.alpha = scalar<double>(e.second, name);
                else if (k == "h") s.h = scalar<double>(e.second, name);
                else if (k == "T") s.T = scalar<double>(e.second, name);
                else if (k == "dim") s.dim = scalar<int>(e.second, name);
                else if (k == "n_paths") s.n_paths = static_cast<std::size_t>(scalar<double>(e.second, name));
                else if (k == "x0") s.x0 = number_list(e.second, name);
                else if (k == "epsilon") s.epsilon = scalar<double>(e.second, name);
                else if (k == "clock") {
                    const auto c = scalar<std::string>(e.second, name);
                    if (c == "discrete") cfg.clock = ClockMode::discrete;
                    else if (c == "dyadic") cfg.clock = ClockMode::dyadic;
                    else throw ConfigError("scheme.clock must be discrete or dyadic, got '" + c + "'");
                } else bad_key("scheme", k);
            }
        } else if (key == "field") {
            require_map(v, key);
            for (const auto& e : v) {
                const auto k = e.first.as<std::string>();
                if (k == "name") cfg.field = scalar<std::string>(e.second, "field.name");
                else if (k == "drift") cfg.field_params.drift = scalar<double>(e.second, "field.drift");
                else if (k == "sigma") cfg.field_params.sigma = scalar<double>(e.second, "field.sigma");
                else if (k == "rate") cfg.field_params.rate = scalar<double>(e.second, "field.rate");
                else bad_key("field", k);
            }
        } else if (key == "innovation") {
            require_map(v, key);
            for (const auto& e : v) {
                const auto k = e.first.as<std::string>();
                if (k == "kind") cfg.innovation = scalar<std::string>(e.second, "innovation.kind");
                else if (k == "order_m") cfg.order_m = scalar<int>(e.second, "innovation.order_m");
                else bad_key("innovation", k);
            }
        } else if (key == "solve") {
            require_map(v, key);
            for (const auto& e : v) {
                const auto k = e.first.as<std::string>();
                if (k == "payoff") cfg.solve.payoff = scalar<std::string>(e.second, "solve.payoff");
                else bad_key("solve", k);
            }
        } else if (key == "density") {
            require_map(v, key);
            for (const auto& e : v) {
                const auto k = e.first.as<std::string>();
                if (k == "method") cfg.density.method = parse_method(scalar<std::string>(e.second, "density.method"));
                else if (k == "bandwidth") cfg.density.bandwidth = scalar<double>(e.second, "density.bandwidth");
                else apply_grid(cfg.density.grid, "density", k, e.second);
            }
        } else if (key == "converge") {
            require_map(v, key);
            for (const auto& e : v) {
                const auto k = e.first.as<std::string>();
                if (k == "h_ladder") cfg.converge.h_ladder = number_list(e.second, "converge.h_ladder");
                else if (k == "z") cfg.converge.z_points = number_list(e.second, "converge.z");
                else if (k == "envelope_c") cfg.converge.envelope_c = scalar<double>(e.second, "converge.envelope_c");
                else if (k == "mode") {
                    const auto m = scalar<std::string>(e.second, "converge.mode");
                    if (m == "exact-reference") cfg.converge.exact_reference = true;
                    else if (m == "finest") cfg.converge.exact_reference = false;
                    else throw ConfigError("converge.mode must be exact-reference or finest, got '" + m + "'");
                } else bad_key("converge", k);
            }
        } else if (key == "bounds") {
            require_map(v, key);
            for (const auto& e : v) {
                const auto k = e.first.as<std::string>();
                const std::string name = "bounds." + k;
                auto& b = cfg.bounds;
                if (k == "regime") {
                    const auto r = scalar<std::string>(e.second, name);
                    if (r == "diffusive") b.regime = Regime::diffusive;
                    else if (r == "stable") b.regime = Regime::stable;
                    else throw ConfigError("bounds.regime must be diffusive or stable, got '" + r + "'");
                } else if (k == "c_upper") b.c_upper = scalar<double>(e.second, name);
                else if (k == "c_lower") b.c_lower = scalar<double>(e.second, name);
                else if (k == "ceiling") b.ceiling = scalar<double>(e.second, name);
                else if (k == "r_lo") b.r_lo = scalar<double>(e.second, name);
                else if (k == "r_hi") b.r_hi = scalar<double>(e.second, name);
                else if (k == "points") b.points = scalar<std::size_t>(e.second, name);
                else if (k == "tail_lo") b.tail_lo = scalar<double>(e.second, name);
                else if (k == "tail_hi") b.tail_hi = scalar<double>(e.second, name);
                else bad_key("bounds", k);
            }
        } else if (key == "ctrw") {
            require_map(v, key);
            for (const auto& e : v) {
                const auto k = e.first.as<std::string>();
                if (k == "n") cfg.ctrw.n = scalar<double>(e.second, "ctrw.n");
                else if (k == "samples") cfg.ctrw.samples = static_cast<std::size_t>(scalar<double>(e.second, "ctrw.samples"));
                else apply_grid(cfg.ctrw.grid, "ctrw", k, e.second);
            }
        } else if (key == "residual") {
            require_map(v, key);
            for (const auto& e : v) {
                const auto k = e.first.as<std::string>();
                const std::string name = "residual." + k;
                auto& r = cfg.residual;
                if (k == "t_lo") r.t_lo = scalar<double>(e.second, name);
                else if (k == "t_hi") r.t_hi = scalar<double>(e.second, name);
                else if (k == "dt") r.dt = scalar<double>(e.second, name);
                else if (k == "dz") r.dz = scalar<double>(e.second, name);
                else if (k == "x") r.x_points = number_list(e.second, name);
                else if (k == "t_stride") r.t_stride = scalar<std::size_t>(e.second, name);
                else bad_key("residual", k);
            }
        } else {
            bad_key("", key);
        }
    }
}

// ---- experiment helpers ----

struct ConstantCoefficients {
    double drift = 0.0;
    double sigma = 1.0;
};

ConstantCoefficients constant_coefficients(const SchemeConfig& s)
{
    if (!s.coefficients.constant || s.dim != 1)
        throw ConfigError("this experiment needs constant coefficients in dimension 1");
    const std::vector<double> origin(1, 0.0);
    return {s.coefficients.drift_at(origin)[0], s.coefficients.diffusion_at(origin)[0]};
}

ReferenceDensity make_reference(const SchemeConfig& s)
{
    const auto cc = constant_coefficients(s);
    return ReferenceDensity(s.beta, s.alpha, 1, {cc.drift}, cc.sigma);
}

EnvelopeParams envelope_params(const ExperimentConfig& cfg, double c)
{
    EnvelopeParams p;
    p.c = c;
    p.beta = cfg.scheme.beta;
    p.alpha = cfg.scheme.alpha;
    p.dim = cfg.scheme.dim;
    p.m = cfg.order_m;
    p.epsilon = cfg.scheme.epsilon;
    return p;
}

double envelope_value(const ExperimentConfig& cfg, double T, double r, double h)
{
    const auto e = error_envelopes(envelope_params(cfg, cfg.converge.envelope_c), T, r, h);
    if (cfg.scheme.alpha < 2.0) return e.stable_total();
    if (cfg.scheme.markov_chain()) return e.markov_total();
    return e.euler_total();
}

std::vector<double> sorted_ladder(const ExperimentConfig& cfg)
{
    std::vector<double> ladder = cfg.converge.h_ladder;
    if (ladder.empty()) ladder.push_back(cfg.scheme.h);
    std::sort(ladder.begin(), ladder.end(), std::greater<>());
    for (double h : ladder) {
        SchemeConfig s = cfg.scheme;
        s.h = h;
        try {
            s.validate();
        } catch (const Error& e) {
            throw ConfigError("ladder step h = " + fmt(h) + " is infeasible: " + e.what());
        }
        for (double z : cfg.converge.z_points) check_evaluation_distance(s, std::abs(z));
    }
    return ladder;
}

// Gaussian KDE value and pointwise standard error at z.
std::pair<double, double> kde_at(std::span<const double> sorted, double z, double bandwidth)
{
    const double n = static_cast<double>(sorted.size());
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), z - 8.0 * bandwidth);
    const auto hi = std::upper_bound(sorted.begin(), sorted.end(), z + 8.0 * bandwidth);
    double s1 = 0.0;
    double s2 = 0.0;
    const double norm = 1.0 / (bandwidth * std::sqrt(2.0 * std::numbers::pi));
    for (auto it = lo; it != hi; ++it) {
        const double u = (z - *it) / bandwidth;
        const double k = norm * std::exp(-0.5 * u * u);
        s1 += k;
        s2 += k * k;
    }
    const double mean = s1 / n;
    const double var = std::max(0.0, s2 / n - mean * mean);
    return {mean, std::sqrt(var / n)};
}

std::vector<double> displacements(const ExperimentConfig& cfg, const SchemeConfig& s)
{
    const auto ends = sample_endpoints(s.x0, s, SolveOptions{cfg.threads, cfg.clock});
    const auto d = static_cast<std::size_t>(s.dim);
    std::vector<double> out(s.n_paths);
    for (std::size_t i = 0; i < s.n_paths; ++i) out[i] = ends[i * d] - s.x0[0];
    return out;
}

void fill_running_slopes(ConvergeResult& result, std::size_t nz)
{
    result.slope.assign(nz, std::numeric_limits<double>::quiet_NaN());
    result.slope_std_error.assign(nz, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t j = 0; j < nz; ++j) {
        std::vector<double> hs;
        std::vector<double> errs;
        for (std::size_t r = j; r < result.rows.size(); r += nz) {
            auto& row = result.rows[r];
            hs.push_back(row.h);
            errs.push_back(row.err);
            if (hs.size() >= 2 && std::all_of(errs.begin(), errs.end(), [](double e) { return e > 0.0; })) {
                const auto fit = loglog_slope(hs, errs);
                row.slope_running = fit.slope;
                result.slope[j] = fit.slope;
                result.slope_std_error[j] = fit.std_error;
            }
        }
    }
}

// ---- selftest ----

struct GoldenCase {
    std::string name;
    double tolerance;
    std::function<double()> compute;
};

double reference_mass(double beta, double alpha)
{
    const ReferenceDensity q(beta, alpha, 1, {0.0}, 1.0);
    const double right = numerics::integrate([&](double z) { return q(1.0, z); }, 0.0, 1.0, 1e-12, 1e-15, "mass") +
                         numerics::integrate([&](double t) {
                             const double z = 1.0 / t;
                             return q(1.0, z) / (t * t);
                         }, 1e-6, 1.0, 1e-12, 1e-15, "mass tail");
    return 2.0 * right;
}

SandwichReport reference_sandwich(double alpha)
{
    const ReferenceDensity q(0.5, alpha, 1, {0.0}, 1.0);
    std::vector<double> pts;
    for (int i = 0; i <= 80; ++i) pts.push_back(0.05 * i);
    SandwichParams sp;
    sp.envelope.beta = 0.5;
    sp.envelope.alpha = alpha;
    sp.c_upper = alpha < 2.0 ? 1.0 : 2.0;
    sp.c_lower = sp.c_upper;
    return two_sided_check(reference_density_grid(q, 1.0, pts), alpha < 2.0 ? Regime::stable : Regime::diffusive, sp);
}

std::vector<GoldenCase> golden_cases()
{
    std::vector<GoldenCase> cases;
    cases.push_back({"reference_origin_beta_half", 1e-10, [] { return reference_density(0.5, 2.0, 1.0, 0.0); }});
    cases.push_back({"reference_mass_beta_0.3", 1e-9, [] { return reference_mass(0.3, 2.0); }});
    cases.push_back({"reference_mass_stable_1.5", 1e-9, [] { return reference_mass(0.5, 1.5); }});
    cases.push_back({"reference_beta_0.7_z1", 1e-10, [] { return reference_density(0.7, 2.0, 1.0, 1.0); }});
    cases.push_back({"inverse_density_beta_half_u1", 1e-12, [] { return inverse_density(0.5, 1.0, 1.0); }});
    cases.push_back({"inverse_density_beta_0.25_u0.5", 1e-10, [] { return inverse_density(0.25, 1.0, 0.5); }});
    cases.push_back({"subordinator_cdf_beta_half_v1", 1e-12, [] { return stable_subordinator_cdf(0.5, 1.0); }});
    cases.push_back({"subordinator_density_beta_0.7_v1", 1e-10, [] { return stable_subordinator_density(0.7, 1.0); }});
    cases.push_back({"stable_density_alpha_1.5_x1", 1e-10, [] { return symmetric_stable_density(1.5, 1.0); }});
    cases.push_back({"hitting_time_density_a1_u1", 1e-14, [] { return hitting_time_density(1.0, 1.0); }});
    cases.push_back({"theta_upper_beta_half", 1e-6, [] {
                         std::vector<double> u;
                         for (int i = 0; i <= 20; ++i) u.push_back(0.25 * i);
                         return fit_theta_constants(0.5, 1.0, u).upper;
                     }});
    cases.push_back({"theta_lower_beta_half", 1e-6, [] {
                         std::vector<double> u;
                         for (int i = 0; i <= 20; ++i) u.push_back(0.25 * i);
                         return fit_theta_constants(0.5, 1.0, u).lower;
                     }});
    cases.push_back({"sandwich_diffusive_c_up", 1e-9, [] { return reference_sandwich(2.0).c_up; }});
    cases.push_back({"sandwich_diffusive_c_low", 1e-9, [] { return reference_sandwich(2.0).c_low; }});
    cases.push_back({"sandwich_stable_c_up", 1e-9, [] { return reference_sandwich(1.5).c_up; }});
    cases.push_back({"sandwich_stable_c_low", 1e-9, [] { return reference_sandwich(1.5).c_low; }});
    cases.push_back({"stable_tail_slope", 1e-8, [] {
                         const ReferenceDensity q(0.5, 1.5, 1, {0.0}, 1.0);
                         return stable_tail_slope(q, 1.0, 10.0, 100.0).slope;
                     }});
    cases.push_back({"laplace_mc_beta_half_seed1", 1e-13, [] {
                         Stream rng(1, 0);
                         Moments m;
                         for (int i = 0; i < 100'000; ++i) m.add(std::exp(-sample_positive_stable(0.5, rng)));
                         return m.mean;
                     }});
    return cases;
}

// Closed forms checked on every run, independent of the golden file.
std::vector<SelftestCase> invariant_cases()
{
    std::vector<SelftestCase> out;
    auto add = [&](std::string name, double expected, double actual, double tol) {
        out.push_back({std::move(name), expected, actual, tol, std::abs(actual - expected) <= tol});
    };
    add("invariant_origin_gamma_quarter", std::tgamma(0.25) / (2.0 * std::numbers::pi),
        reference_density(0.5, 2.0, 1.0, 0.0), 1e-8);
    add("invariant_inverse_density_half", std::exp(-0.25) / std::sqrt(std::numbers::pi), inverse_density(0.5, 1.0, 1.0),
        1e-10);
    add("invariant_subordinator_cdf_half", std::erfc(0.5), stable_subordinator_cdf(0.5, 1.0), 1e-10);
    add("invariant_hitting_time", std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi), hitting_time_density(1.0, 1.0),
        1e-14);
    add("invariant_hat_d3", 1.0, hat_p_beta_diffusive(EnvelopeParams{1.0, 0.5, 2.0, 3, 4, 0.1}, 1.0, 1.0), 1e-14);
    add("invariant_tilde_d1_origin", std::numbers::e,
        tilde_p_beta_diffusive(EnvelopeParams{1.0, 0.5, 2.0, 1, 4, 0.1}, 1.0, 0.0), 1e-14);

    // Thread-count independence of a Monte Carlo solve.
    SchemeConfig s;
    s.n_paths = 20'000;
    s.seed = 7;
    const auto f = [](std::span<const double> x) { return std::cos(x[0]); };
    const double one = solve_fractional_cauchy(f, s.x0, s, SolveOptions{1, ClockMode::discrete}).mean;
    const double three = solve_fractional_cauchy(f, s.x0, s, SolveOptions{3, ClockMode::discrete}).mean;
    add("invariant_thread_independence", one, three, 0.0);
    return out;
}

std::map<std::string, std::pair<double, double>> read_golden(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read golden file '" + path + "'");
    std::map<std::string, std::pair<double, double>> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string name;
        double value = 0.0;
        double tol = 0.0;
        if (!(row >> name >> value >> tol)) throw ConfigError("malformed golden line: " + line);
        values[name] = {value, tol};
    }
    return values;
}


}  // namespace

std::string to_string(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::solve: return "solve";
    case ExperimentKind::density: return "density";
    case ExperimentKind::converge: return "converge";
    case ExperimentKind::bounds_check: return "bounds-check";
    case ExperimentKind::ctrw_demo: return "ctrw-demo";
    case ExperimentKind::residual: return "residual";
    case ExperimentKind::selftest: return "selftest";
    }
    return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name)
{
    for (auto k : {ExperimentKind::solve, ExperimentKind::density, ExperimentKind::converge,
                   ExperimentKind::bounds_check, ExperimentKind::ctrw_demo, ExperimentKind::residual,
                   ExperimentKind::selftest})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown experiment '" + name + "'");
}

void ExperimentConfig::finalize()
{
    if (threads == 0) throw ConfigError("threads must be >= 1");
    if (scheme.x0.size() != static_cast<std::size_t>(scheme.dim))
        throw ConfigError("scheme.x0 has " + std::to_string(scheme.x0.size()) + " entries, expected dim = " +
                          std::to_string(scheme.dim));
    scheme.coefficients = make_field(field, scheme.dim, field_params);
    if (innovation == "auto")
        scheme.innovation = scheme.alpha < 2.0 ? stable_innovation(scheme.alpha, scheme.dim) : gaussian_innovation(scheme.dim);
    else if (innovation == "gaussian")
        scheme.innovation = gaussian_innovation(scheme.dim);
    else if (innovation == "stable")
        scheme.innovation = stable_innovation(scheme.alpha, scheme.dim);
    else if (innovation == "polynomial_tail")
        scheme.innovation = polynomial_tail_innovation(scheme.dim, order_m);
    else
        throw ConfigError("innovation.kind must be auto, gaussian, stable or polynomial_tail, got '" + innovation + "'");
    if (kind != ExperimentKind::selftest && kind != ExperimentKind::residual) scheme.validate();
}

ExperimentConfig parse_config(const std::string& yaml_text)
{
    ExperimentConfig cfg;
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    if (root.IsNull()) return cfg;
    apply_node(cfg, root);
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key.path=value: " + assignment);
    const std::string path = assignment.substr(0, eq);
    YAML::Node value;
    try {
        value = YAML::Load(assignment.substr(eq + 1));
    } catch (const YAML::Exception&) {
        throw ConfigError("override value for '" + path + "' is not valid YAML");
    }
    YAML::Node root(YAML::NodeType::Map);
    const auto dot = path.find('.');
    if (dot == std::string::npos) {
        root[path] = value;
    } else {
        YAML::Node inner(YAML::NodeType::Map);
        inner[path.substr(dot + 1)] = value;
        root[path.substr(0, dot)] = inner;
    }
    apply_node(cfg, root);
}

std::string canonical_dump(const ExperimentConfig& cfg)
{
    std::map<std::string, std::string> kv;
    auto list = [](const std::vector<double>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
        return s + "]";
    };
    const auto& s = cfg.scheme;
    kv["experiment"] = to_string(cfg.kind);
    kv["seed"] = std::to_string(s.seed);
    kv["scheme.beta"] = fmt(s.beta);
    kv["scheme.alpha"] = fmt(s.alpha);
    kv["scheme.h"] = fmt(s.h);
    kv["scheme.T"] = fmt(s.T);
    kv["scheme.dim"] = std::to_string(s.dim);
    kv["scheme.n_paths"] = std::to_string(s.n_paths);
    kv["scheme.x0"] = list(s.x0);
    kv["scheme.epsilon"] = fmt(s.epsilon);
    kv["scheme.clock"] = cfg.clock == ClockMode::dyadic ? "dyadic" : "discrete";
    kv["field.name"] = cfg.field;
    kv["field.drift"] = fmt(cfg.field_params.drift);
    kv["field.sigma"] = fmt(cfg.field_params.sigma);
    kv["field.rate"] = fmt(cfg.field_params.rate);
    kv["innovation.kind"] = cfg.innovation;
    kv["innovation.order_m"] = std::to_string(cfg.order_m);
    kv["solve.payoff"] = cfg.solve.payoff;
    kv["density.lo"] = fmt(cfg.density.grid.lo);
    kv["density.hi"] = fmt(cfg.density.grid.hi);
    kv["density.points"] = std::to_string(cfg.density.grid.points);
    kv["density.method"] = to_string(cfg.density.method);
    kv["density.bandwidth"] = cfg.density.bandwidth ? fmt(*cfg.density.bandwidth) : "auto";
    kv["converge.h_ladder"] = list(cfg.converge.h_ladder);
    kv["converge.z"] = list(cfg.converge.z_points);
    kv["converge.mode"] = cfg.converge.exact_reference ? "exact-reference" : "finest";
    kv["converge.envelope_c"] = fmt(cfg.converge.envelope_c);
    const auto& b = cfg.bounds;
    kv["bounds.regime"] = b.regime == Regime::stable ? "stable" : "diffusive";
    kv["bounds.c_upper"] = fmt(b.c_upper);
    kv["bounds.c_lower"] = fmt(b.c_lower);
    kv["bounds.ceiling"] = fmt(b.ceiling);
    kv["bounds.r_lo"] = fmt(b.r_lo);
    kv["bounds.r_hi"] = fmt(b.r_hi);
    kv["bounds.points"] = std::to_string(b.points);
    kv["bounds.tail_lo"] = fmt(b.tail_lo);
    kv["bounds.tail_hi"] = fmt(b.tail_hi);
    kv["ctrw.n"] = fmt(cfg.ctrw.n);
    kv["ctrw.samples"] = std::to_string(cfg.ctrw.samples);
    kv["ctrw.lo"] = fmt(cfg.ctrw.grid.lo);
    kv["ctrw.hi"] = fmt(cfg.ctrw.grid.hi);
    kv["ctrw.points"] = std::to_string(cfg.ctrw.grid.points);
    const auto& r = cfg.residual;
    kv["residual.t_lo"] = fmt(r.t_lo);
    kv["residual.t_hi"] = fmt(r.t_hi);
    kv["residual.dt"] = fmt(r.dt);
    kv["residual.dz"] = fmt(r.dz);
    kv["residual.x"] = list(r.x_points);
    kv["residual.t_stride"] = std::to_string(r.t_stride);
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

std::uint64_t config_hash(const ExperimentConfig& cfg)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : canonical_dump(cfg)) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

void write_header_block(std::ostream& out, const ExperimentConfig& cfg)
{
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << config_hash(cfg);
    out << "# fracsub " << kLibraryVersion << '\n'
        << "# experiment=" << to_string(cfg.kind) << '\n'
        << "# config_hash=" << hash.str() << '\n'
        << "# seed=" << cfg.scheme.seed << '\n';
}

Payoff make_payoff(const std::string& name)
{
    if (name == "cos") return [](std::span<const double> x) { return std::cos(x[0]); };
    if (name == "square")
        return [](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return s;
        };
    if (name == "gaussian")
        return [](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return std::exp(-0.5 * s);
        };
    throw ConfigError("unknown payoff '" + name + "' (cos, square, gaussian)");
}

ConvergeResult run_converge(const ExperimentConfig& cfg)
{
    const auto& s = cfg.scheme;
    const auto ladder = sorted_ladder(cfg);
    const auto& zs = cfg.converge.z_points;
    if (zs.empty()) throw ConfigError("converge.z must list at least one point");
    const std::size_t nh = ladder.size();
    const std::size_t nz = zs.size();
    ConvergeResult result;

    if (cfg.converge.exact_reference) {
        if (s.markov_chain()) throw ConfigError("exact-reference mode needs exact driver innovations");
        const ReferenceDensity q = make_reference(s);
        const std::size_t blocks = (s.n_paths + kBlock - 1) / kBlock;
        std::vector<std::vector<Moments>> partial(blocks, std::vector<Moments>(nh * nz));
        for_each_block(s.n_paths, kBlock, cfg.threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
            auto& acc = partial[b];
            for (std::size_t i = begin; i < end; ++i) {
                Stream rng(s.seed, i);
                const double z_exact = sample_inverse_marginal(s.beta, s.T, rng);
                for (std::size_t j = 0; j < nz; ++j) {
                    const double base = q.kernel(z_exact, zs[j]);
                    for (std::size_t k = 0; k < nh; ++k) {
                        const double h = ladder[k];
                        acc[k * nz + j].add(q.kernel(h * std::ceil(z_exact / h), zs[j]) - base);
                    }
                }
            }
        });
        std::vector<Moments> total(nh * nz);
        for (const auto& block : partial)
            for (std::size_t i = 0; i < total.size(); ++i) total[i].merge(block[i]);
        for (std::size_t k = 0; k < nh; ++k)
            for (std::size_t j = 0; j < nz; ++j) {
                const auto& m = total[k * nz + j];
                result.rows.push_back({ladder[k], s.T, zs[j], std::abs(m.mean), 1.96 * m.std_error(),
                                       envelope_value(cfg, s.T, std::abs(zs[j]), ladder[k]), std::nullopt});
            }
    } else {
        if (s.dim != 1) throw ConfigError("finest mode estimates one-dimensional densities");
        std::vector<std::vector<std::pair<double, double>>> values(nh);
        for (std::size_t k = 0; k < nh; ++k) {
            SchemeConfig sk = s;
            sk.h = ladder[k];
            auto x = displacements(cfg, sk);
            std::sort(x.begin(), x.end());
            const double bw = silverman_bandwidth(x);
            for (double z : zs) values[k].push_back(kde_at(x, z, bw));
        }
        const auto& finest = values.back();
        for (std::size_t k = 0; k + 1 < nh; ++k)
            for (std::size_t j = 0; j < nz; ++j) {
                const double err = std::abs(values[k][j].first - finest[j].first);
                const double ci = 1.96 * std::hypot(values[k][j].second, finest[j].second);
                result.rows.push_back({ladder[k], s.T, zs[j], err, ci, envelope_value(cfg, s.T, std::abs(zs[j]), ladder[k]),
                                       std::nullopt});
            }
    }
    fill_running_slopes(result, nz);
    return result;
}

CtrwResult run_ctrw(const ExperimentConfig& cfg)
{
    const auto& s = cfg.scheme;
    const std::size_t n = cfg.ctrw.samples;
    if (n == 0) throw ConfigError("ctrw.samples must be positive");
    CtrwResult out;
    out.ctrw.resize(n);
    out.direct.resize(n);
    for_each_block(n, kBlock, cfg.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Stream a(s.seed, 2 * i);
            Stream b(s.seed, 2 * i + 1);
            out.ctrw[i] = simulate_ctrw(s.beta, s.alpha, s.dim, cfg.ctrw.n, s.T, a)[0];
            out.direct[i] = sample_subordinated_direct(s.beta, s.alpha, s.dim, s.T, b)[0];
        }
    });
    out.ks = ks_distance(out.ctrw, out.direct);
    return out;
}

SlopeFit stable_tail_slope(const ReferenceDensity& q, double T, double lo, double hi, std::size_t points)
{
    if (!(lo > 0.0 && hi > lo) || points < 2) throw ParameterError("tail range needs 0 < lo < hi and >= 2 points");
    const double scale = std::pow(T, q.beta() / q.alpha());
    std::vector<double> r;
    std::vector<double> v;
    for (std::size_t i = 0; i < points; ++i) {
        const double x = scale * lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
        r.push_back(x);
        v.push_back(q(T, x));
    }
    return loglog_slope(r, v);
}

std::vector<SelftestCase> run_selftest(const std::string& golden_path, bool regenerate)
{
    const auto cases = golden_cases();
    std::vector<double> actual;
    actual.reserve(cases.size());
    for (const auto& c : cases) actual.push_back(c.compute());

    if (regenerate) {
        std::ofstream out(golden_path);
        if (!out) throw ConfigError("cannot write golden file '" + golden_path + "'");
        out << "# name value tolerance\n" << std::setprecision(17);
        for (std::size_t i = 0; i < cases.size(); ++i)
            out << cases[i].name << ' ' << actual[i] << ' ' << std::setprecision(6) << cases[i].tolerance
                << std::setprecision(17) << '\n';
    }

    const auto golden = read_golden(golden_path);
    std::vector<SelftestCase> report;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto it = golden.find(cases[i].name);
        if (it == golden.end()) {
            report.push_back({cases[i].name, std::numeric_limits<double>::quiet_NaN(), actual[i], cases[i].tolerance, false});
            continue;
        }
        const auto [expected, tol] = it->second;
        report.push_back({cases[i].name, expected, actual[i], tol, std::abs(actual[i] - expected) <= tol});
    }
    for (auto& c : invariant_cases()) report.push_back(std::move(c));
    return report;
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& out, bool regen_golden)
{
    write_header_block(out, cfg);
    out << std::setprecision(17);
    const auto& s = cfg.scheme;

    switch (cfg.kind) {
    case ExperimentKind::solve: {
        const auto est = solve_fractional_cauchy(make_payoff(cfg.solve.payoff), s.x0, s, SolveOptions{cfg.threads, cfg.clock});
        out << "x,T,mean,std_error,n_paths\n";
        for (std::size_t i = 0; i < s.x0.size(); ++i) out << (i ? ";" : "") << s.x0[i];
        out << ',' << s.T << ',' << est.mean << ',' << est.std_error << ',' << est.n_samples << '\n';
        return 0;
    }
    case ExperimentKind::density: {
        if (s.dim != 1) throw ConfigError("density estimates one-dimensional laws; set scheme.dim = 1");
        const auto x = displacements(cfg, s);
        const auto grid = estimate_density(x, cfg.density.grid, cfg.density.method, cfg.density.bandwidth);
        std::optional<ReferenceDensity> q;
        if (s.coefficients.constant) q = make_reference(s);
        out << "z,density,std_error,reference\n";
        for (std::size_t i = 0; i < grid.points.size(); ++i) {
            out << grid.points[i] << ',' << grid.values[i] << ',' << grid.std_error[i] << ',';
            if (q) {
                try {
                    out << (*q)(s.T, grid.points[i]);
                } catch (const SingularityError&) {
                }
            }
            out << '\n';
        }
        out << "# bandwidth=" << grid.bandwidth << ",tail_mass=" << grid.tail_mass << '\n';
        return 0;
    }
    case ExperimentKind::converge: {
        const auto result = run_converge(cfg);
        out << "h,T,z,err,err_ci,envelope,slope_running\n";
        for (const auto& r : result.rows) {
            out << r.h << ',' << r.T << ',' << r.z << ',' << r.err << ',' << r.err_ci << ',' << r.envelope << ',';
            if (r.slope_running) out << *r.slope_running;
            out << '\n';
        }
        for (std::size_t j = 0; j < cfg.converge.z_points.size(); ++j)
            if (std::isfinite(result.slope[j]))
                out << "# slope z=" << cfg.converge.z_points[j] << ": " << result.slope[j] << " ci95=["
                    << result.slope[j] - 1.96 * result.slope_std_error[j] << ','
                    << result.slope[j] + 1.96 * result.slope_std_error[j] << "]\n";
        return 0;
    }
    case ExperimentKind::bounds_check: {
        const auto& b = cfg.bounds;
        if (b.points < 2 || !(b.r_hi > b.r_lo) || b.r_lo < 0.0) throw ConfigError("bounds grid needs 0 <= r_lo < r_hi, points >= 2");
        const auto q = make_reference(s);
        std::vector<double> pts;
        for (std::size_t i = 0; i < b.points; ++i) pts.push_back(b.r_lo + (b.r_hi - b.r_lo) * i / (b.points - 1));
        SandwichParams sp;
        sp.envelope = envelope_params(cfg, 1.0);
        sp.c_upper = b.c_upper;
        sp.c_lower = b.c_lower;
        sp.T = s.T;
        sp.ceiling = b.ceiling;
        const auto report = two_sided_check(reference_density_grid(q, s.T, pts), b.regime, sp);
        write_sandwich_csv(out, report);
        if (b.regime == Regime::stable) {
            const auto fit = stable_tail_slope(q, s.T, b.tail_lo, b.tail_hi);
            out << "# tail_slope=" << fit.slope << ",expected=" << -(s.dim + s.alpha) << '\n';
        }
        return report.pass ? 0 : 1;
    }
    case ExperimentKind::ctrw_demo: {
        auto result = run_ctrw(cfg);
        std::sort(result.ctrw.begin(), result.ctrw.end());
        std::sort(result.direct.begin(), result.direct.end());
        const auto& g = cfg.ctrw.grid;
        out << "x,ecdf_ctrw,ecdf_direct\n";
        const double nc = static_cast<double>(result.ctrw.size());
        for (std::size_t i = 0; i < g.points; ++i) {
            const double x = g.points == 1 ? g.lo : g.lo + (g.hi - g.lo) * i / (g.points - 1);
            const auto a = std::upper_bound(result.ctrw.begin(), result.ctrw.end(), x) - result.ctrw.begin();
            const auto d = std::upper_bound(result.direct.begin(), result.direct.end(), x) - result.direct.begin();
            out << x << ',' << a / nc << ',' << d / nc << '\n';
        }
        out << "# ks=" << result.ks << '\n';
        return 0;
    }
    case ExperimentKind::residual: {
        const auto cc = constant_coefficients(s);
        if (s.alpha != 2.0) throw ConfigError("residual checks the diffusive operator; set scheme.alpha = 2");
        const auto& r = cfg.residual;
        const auto grid = pde_residual_check(s.beta, r.t_lo, r.t_hi, r.x_points, r.dt, r.dz, cc.drift, cc.sigma, r.t_stride);
        out << "t,x,lhs,residual\n";
        const std::size_t nx = grid.x_points.size();
        for (std::size_t i = 0; i < grid.t_points.size(); ++i)
            for (std::size_t j = 0; j < nx; ++j)
                out << grid.t_points[i] << ',' << grid.x_points[j] << ',' << grid.lhs[i * nx + j] << ','
                    << grid.residual[i * nx + j] << '\n';
        out << "# relative=" << grid.relative() << ",max_abs_residual=" << grid.max_abs_residual << '\n';
        return 0;
    }
    case ExperimentKind::selftest: {
        const auto report = run_selftest(cfg.golden_path, regen_golden);
        out << "case,expected,actual,tolerance,status\n";
        bool ok = true;
        for (const auto& c : report) {
            out << c.name << ',' << c.expected << ',' << c.actual << ',' << c.tolerance << ','
                << (c.pass ? "PASS" : "FAIL") << '\n';
            ok = ok && c.pass;
        }
        return ok ? 0 : 1;
    }
    }
    return 1;
}

}  // namespace fracsub
