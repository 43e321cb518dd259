#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ksadi/diagnostics.hpp"
#include "ksadi/grid.hpp"
#include "ksadi/schemes.hpp"

namespace ksadi {

enum class ExperimentKind { ConvergenceSpace, ConvergenceTime1, ConvergenceTime2, Benchmark, Simulate };

enum class ReportFormat { Csv, Json };

std::string to_string(ExperimentKind k);
ReportFormat parse_report_format(const std::string& s);

/// Initial data for `simulate`.
enum class InitialKind { Gaussian, Constant, Zero, Random, File, Manufactured };

/// Every experiment parameter. Defaults reproduce the corresponding
/// published protocol; see default_config().
struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Simulate;

    double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;
    int nx = 64, ny = 64;
    BoundaryKind bc = BoundaryKind::NeumannSymmetric;

    SchemeKind scheme = SchemeKind::AdiFirstOrder;
    SecondOrderStart start = SecondOrderStart::PredictorCorrector;
    double epsilon = 1.0;
    double dt = 1e-4;
    double t_final = 0.01;
    double cg_tol = 1e-10;
    int cg_maxiter = 0;

    std::vector<double> dx_list;  ///< convergence-space
    std::vector<double> dt_list;  ///< convergence-time
    double dx = 0.01;             ///< fixed spacing for convergence-time
    std::vector<int> grid_list;   ///< benchmark: intervals per axis
    int repeats = 1;              ///< benchmark: best-of repeats

    int cadence = 1;                     ///< diagnostics every k steps
    std::vector<double> snapshot_times;  ///< simulate

    InitialKind initial = InitialKind::Gaussian;
    double ic_rho_peak = 4.0;
    double ic_rho_width = 0.5;
    double ic_c_peak = 1.0;
    double ic_c_width = 0.5;
    double ic_rho_value = 1.0;  ///< constant initial data
    double ic_c_value = 0.0;
    std::string rho_file;
    std::string c_file;

    int threads = 0;
    std::uint64_t seed = 0;
};

/// Protocol defaults for one experiment (domain, spacing lists, dt, T, scheme).
ExperimentConfig default_config(ExperimentKind kind);

/// Applies `key = value` lines (# comments and blank lines allowed) on top
/// of `base`. Unknown keys, duplicate keys and malformed values throw
/// ConfigError naming the line.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base);
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base);

/// Sorted list of accepted keys.
std::vector<std::string> config_keys();

/// Throws ConfigError when the config cannot describe a valid run.
void validate_experiment(const ExperimentConfig& cfg);

struct ConvergenceRow {
    double resolution = 0.0;  ///< dx (space) or dt (time)
    double error_rho = 0.0;
    double error_c = 0.0;
    std::optional<double> ratio_rho;  ///< error(previous row) / error(this row)
    std::optional<double> ratio_c;
};

struct ConvergenceReport {
    std::string experiment;
    std::string parameter;  ///< "dx" or "dt"
    std::string scheme;
    std::string closure;
    std::vector<ConvergenceRow> rows;
};

/// Fills the ratio columns from the error columns.
void fill_ratios(ConvergenceReport& report);

/// Errors of one manufactured run at t_final.
struct ManufacturedErrors {
    double error_rho = 0.0;
    double error_c = 0.0;
};

/// Integrates the manufactured problem from its exact data at t = 0 with the
/// exact solution as boundary values; returns max-norm errors at t_final.
ManufacturedErrors run_manufactured(const GridSpec& grid, SchemeKind scheme, double epsilon,
                                    double dt, double t_final, int threads = 0,
                                    SecondOrderStart start = SecondOrderStart::PredictorCorrector);

ConvergenceReport run_convergence_space(const ExperimentConfig& cfg);
/// order 1 runs the first-order ADI scheme, order 2 the second-order one.
ConvergenceReport run_convergence_time(const ExperimentConfig& cfg, int order);

struct BenchmarkRow {
    int n = 0;                 ///< intervals per axis
    long long unknowns = 0;    ///< 2 * number of nodes
    int steps = 0;
    double adi_seconds = 0.0;
    double five_point_seconds = 0.0;
    double speedup = 0.0;
    std::optional<double> adi_threaded_seconds;
    double mean_cg_iterations = 0.0;
    double max_diff_rho = 0.0;  ///< between the two final states
    double max_diff_c = 0.0;
};

struct BenchmarkReport {
    std::vector<BenchmarkRow> rows;
    double adi_fit_exponent = 0.0;  ///< slope of log(time) against log(unknowns)
    int threads = 0;
};

/// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

BenchmarkReport run_benchmark(const ExperimentConfig& cfg);

struct SimulationResult {
    std::vector<DiagnosticsRecord> records;
    std::vector<PositivityReport> positivity;  ///< second-order scheme, one per step
    State final_state;
    int steps = 0;
};

/// Receives each diagnostics record, positivity report and snapshot as the
/// run proceeds; all callbacks optional.
struct SimulationSink {
    std::function<void(const DiagnosticsRecord&)> on_record;
    std::function<void(int step, const PositivityReport&)> on_positivity;
    std::function<void(const State&)> on_snapshot;
};

/// Initial state for `simulate`.
State initial_state(const ExperimentConfig& cfg);

/// Steps cfg.scheme to t_final. On a non-finite step, `sink.on_snapshot` is
/// called with the last good state before NumericalAbort propagates.
SimulationResult run_simulation(const ExperimentConfig& cfg, const SimulationSink& sink = {});

GridSpec experiment_grid(const ExperimentConfig& cfg);
SchemeConfig scheme_config(const ExperimentConfig& cfg);

// Report I/O. Numbers use 17 significant digits so that parsing a written
// report reproduces the in-memory values exactly.
void write_report(std::ostream& os, const ConvergenceReport& r, ReportFormat f);
ConvergenceReport read_convergence_report(std::istream& is, ReportFormat f);
void write_report(std::ostream& os, const BenchmarkReport& r, ReportFormat f);

}  // namespace ksadi
