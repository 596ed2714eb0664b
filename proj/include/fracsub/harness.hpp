#pragma once

#include "fracsub/bounds.hpp"
#include "fracsub/solver.hpp"
#include "fracsub/spatial.hpp"
#include "fracsub/stats.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fracsub {

inline constexpr const char* kLibraryVersion = "1.0.0";

enum class ExperimentKind { solve, density, converge, bounds_check, ctrw_demo, residual, selftest };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

struct SolveSpec {
    std::string payoff = "cos";  // cos | square | gaussian
};

struct DensitySpec {
    GridSpec grid{-3.0, 3.0, 61};
    DensityMethod method = DensityMethod::kde;
    std::optional<double> bandwidth;
};

struct ConvergeSpec {
    std::vector<double> h_ladder;      // dyadic ladder, largest first
    std::vector<double> z_points{1.5};
    bool exact_reference = true;       // false: compare each h against the finest one
    double envelope_c = 1.0;
};

struct BoundsSpec {
    Regime regime = Regime::diffusive;
    double c_upper = 2.0;
    double c_lower = 2.0;
    double ceiling = 1e6;
    double r_lo = 0.0;
    double r_hi = 4.0;
    std::size_t points = 81;
    double tail_lo = 10.0;  // tail-slope fit range in units of T^{beta/alpha} (stable only)
    double tail_hi = 100.0;
};

struct CtrwSpec {
    double n = 1e4;
    std::size_t samples = 100'000;
    GridSpec grid{-3.0, 3.0, 61};
};

struct ResidualSpec {
    double t_lo = 0.5;
    double t_hi = 2.0;
    double dt = 1e-3;
    double dz = 1e-3;
    std::vector<double> x_points{-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0};
    std::size_t t_stride = 50;
};

/// One experiment. Precedence: built-in defaults, then the config file, then
/// command-line flags.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::solve;
    std::string field = "constant";
    FieldParams field_params;
    std::string innovation = "auto";  // auto | gaussian | stable | polynomial_tail
    int order_m = 4;
    SchemeConfig scheme;
    ClockMode clock = ClockMode::discrete;
    unsigned threads = 1;
    std::string out;  // empty: standard output

    SolveSpec solve;
    DensitySpec density;
    ConvergeSpec converge;
    BoundsSpec bounds;
    CtrwSpec ctrw;
    ResidualSpec residual;

    std::string golden_path = "golden/golden.txt";

    /// Rebuilds scheme.coefficients and scheme.innovation from the named
    /// field and innovation, then validates. Throws ConfigError.
    void finalize();
};

/// Parses YAML text; unknown keys are rejected with ConfigError.
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::string& path);

/// Applies a dotted override such as "scheme.beta=0.3" or "converge.z=[1.5, 2]".
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// Sorted key=value lines of every setting that affects results (not `out`
/// or `threads`).
std::string canonical_dump(const ExperimentConfig& cfg);

/// FNV-1a 64 of canonical_dump.
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// Lines starting with '#': library version, experiment, config hash, seed.
void write_header_block(std::ostream& out, const ExperimentConfig& cfg);

Payoff make_payoff(const std::string& name);

struct ConvergeRow {
    double h = 0.0;
    double T = 0.0;
    double z = 0.0;
    double err = 0.0;
    double err_ci = 0.0;  // 95% half-width
    double envelope = 0.0;
    std::optional<double> slope_running;  // log-log slope over rows so far for this z
};

struct ConvergeResult {
    std::vector<ConvergeRow> rows;
    std::vector<double> slope;           // per z, NaN when fewer than two h
    std::vector<double> slope_std_error;
};

/// Density error over the h ladder. Exact-reference mode (constant
/// coefficients, exact driver innovations) averages the coupled differences
/// p(h ceil(Z/h), z) - p(Z, z) over exact draws of Z, with the same draws for
/// every h. Otherwise KDE densities at each h are compared with the finest h.
ConvergeResult run_converge(const ExperimentConfig& cfg);

struct CtrwResult {
    std::vector<double> ctrw;
    std::vector<double> direct;
    double ks = 0.0;
};

CtrwResult run_ctrw(const ExperimentConfig& cfg);

/// Tail slope of the reference density on [tail_lo, tail_hi] T^{beta/alpha}.
SlopeFit stable_tail_slope(const ReferenceDensity& q, double T, double lo, double hi, std::size_t points = 21);

struct SelftestCase {
    std::string name;
    double expected = 0.0;
    double actual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Golden-value suite. With `regenerate`, the golden file is rewritten from
/// freshly computed values first.
std::vector<SelftestCase> run_selftest(const std::string& golden_path, bool regenerate);

/// Runs the experiment and writes its CSV (header block, column row, data).
/// Returns the process exit code.
int run_experiment(const ExperimentConfig& cfg, std::ostream& out, bool regen_golden = false);

}  // namespace fracsub
