#include "ksadi/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ksadi/errors.hpp"
#include "ksadi/field_io.hpp"
#include "ksadi/manufactured.hpp"

namespace ksadi {

namespace {

constexpr const char* kClosureNote =
    "boundary nodes pinned to the exact solution (Dirichlet closure)";
constexpr const char* kRatioNote =
    "ratio = error(previous row) / error(this row); ~2 means first order, ~4 second order";

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

long long parse_integer(const std::string& text)
{
    const std::string s = trim(text);
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError("cannot parse integer '" + text + "'");
    return v;
}

int parse_int(const std::string& text)
{
    const long long v = parse_integer(text);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ConfigError("integer out of range '" + text + "'");
    return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& text)
{
    const std::string s = trim(text);
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError("cannot parse unsigned integer '" + text + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty())
            throw ConfigError("empty entry in list '" + text + "'");
        out.push_back(trim(item));
    }
    if (!text.empty() && text.back() == ',')
        throw ConfigError("empty entry in list '" + text + "'");
    return out;
}

std::vector<double> parse_double_list(const std::string& text)
{
    std::vector<double> out;
    for (const auto& item : split_list(text))
        out.push_back(parse_double(item));
    return out;
}

std::vector<int> parse_int_list(const std::string& text)
{
    std::vector<int> out;
    for (const auto& item : split_list(text))
        out.push_back(parse_int(item));
    return out;
}

InitialKind parse_initial(const std::string& s)
{
    if (s == "gaussian")
        return InitialKind::Gaussian;
    if (s == "constant")
        return InitialKind::Constant;
    if (s == "zero")
        return InitialKind::Zero;
    if (s == "random")
        return InitialKind::Random;
    if (s == "file")
        return InitialKind::File;
    if (s == "manufactured")
        return InitialKind::Manufactured;
    throw ConfigError("unknown initial data '" + s +
                      "' (expected gaussian|constant|zero|random|file|manufactured)");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"xmin", [](ExperimentConfig& c, const std::string& v) { c.xmin = parse_double(v); }},
        {"xmax", [](ExperimentConfig& c, const std::string& v) { c.xmax = parse_double(v); }},
        {"ymin", [](ExperimentConfig& c, const std::string& v) { c.ymin = parse_double(v); }},
        {"ymax", [](ExperimentConfig& c, const std::string& v) { c.ymax = parse_double(v); }},
        {"nx", [](ExperimentConfig& c, const std::string& v) { c.nx = parse_int(v); }},
        {"ny", [](ExperimentConfig& c, const std::string& v) { c.ny = parse_int(v); }},
        {"bc", [](ExperimentConfig& c, const std::string& v) { c.bc = parse_boundary_kind(v); }},
        {"scheme", [](ExperimentConfig& c, const std::string& v) { c.scheme = parse_scheme_kind(v); }},
        {"second_order_start",
         [](ExperimentConfig& c, const std::string& v) { c.start = parse_second_order_start(v); }},
        {"epsilon", [](ExperimentConfig& c, const std::string& v) { c.epsilon = parse_double(v); }},
        {"dt", [](ExperimentConfig& c, const std::string& v) { c.dt = parse_double(v); }},
        {"t_final", [](ExperimentConfig& c, const std::string& v) { c.t_final = parse_double(v); }},
        {"cg_tol", [](ExperimentConfig& c, const std::string& v) { c.cg_tol = parse_double(v); }},
        {"cg_maxiter", [](ExperimentConfig& c, const std::string& v) { c.cg_maxiter = parse_int(v); }},
        {"dx_list", [](ExperimentConfig& c, const std::string& v) { c.dx_list = parse_double_list(v); }},
        {"dt_list", [](ExperimentConfig& c, const std::string& v) { c.dt_list = parse_double_list(v); }},
        {"dx", [](ExperimentConfig& c, const std::string& v) { c.dx = parse_double(v); }},
        {"grid_list", [](ExperimentConfig& c, const std::string& v) { c.grid_list = parse_int_list(v); }},
        {"repeats", [](ExperimentConfig& c, const std::string& v) { c.repeats = parse_int(v); }},
        {"cadence", [](ExperimentConfig& c, const std::string& v) { c.cadence = parse_int(v); }},
        {"snapshot_times",
         [](ExperimentConfig& c, const std::string& v) { c.snapshot_times = parse_double_list(v); }},
        {"initial", [](ExperimentConfig& c, const std::string& v) { c.initial = parse_initial(v); }},
        {"ic_rho_peak", [](ExperimentConfig& c, const std::string& v) { c.ic_rho_peak = parse_double(v); }},
        {"ic_rho_width", [](ExperimentConfig& c, const std::string& v) { c.ic_rho_width = parse_double(v); }},
        {"ic_c_peak", [](ExperimentConfig& c, const std::string& v) { c.ic_c_peak = parse_double(v); }},
        {"ic_c_width", [](ExperimentConfig& c, const std::string& v) { c.ic_c_width = parse_double(v); }},
        {"ic_rho_value", [](ExperimentConfig& c, const std::string& v) { c.ic_rho_value = parse_double(v); }},
        {"ic_c_value", [](ExperimentConfig& c, const std::string& v) { c.ic_c_value = parse_double(v); }},
        {"rho_file", [](ExperimentConfig& c, const std::string& v) { c.rho_file = v; }},
        {"c_file", [](ExperimentConfig& c, const std::string& v) { c.c_file = v; }},
        {"threads", [](ExperimentConfig& c, const std::string& v) { c.threads = parse_int(v); }},
        {"seed", [](ExperimentConfig& c, const std::string& v) { c.seed = parse_u64(v); }},
    };
    return table;
}

int intervals_for(double length, double spacing)
{
    if (!(spacing > 0.0))
        throw ConfigError("spacing must be positive");
    const double n = length / spacing;
    const long long rounded = std::llround(n);
    if (rounded < 3 || std::abs(n - static_cast<double>(rounded)) > 1e-9 * n)
        throw ConfigError("spacing " + format_double(spacing) +
                          " does not divide the domain into at least 3 whole intervals");
    return static_cast<int>(rounded);
}

int steps_for(double t_final, double dt)
{
    if (!(dt > 0.0) || !(t_final > 0.0))
        throw ConfigError("dt and t_final must be positive");
    const double n = t_final / dt;
    const long long rounded = std::llround(n);
    if (rounded < 1 || std::abs(n - static_cast<double>(rounded)) > 1e-9 * n)
        throw ConfigError("dt " + format_double(dt) + " does not divide t_final " +
                          format_double(t_final) + " into whole steps");
    return static_cast<int>(rounded);
}

GridSpec manufactured_grid(const ExperimentConfig& cfg, double spacing)
{
    return make_grid(cfg.xmin, cfg.xmax, cfg.ymin, cfg.ymax, intervals_for(cfg.xmax - cfg.xmin, spacing),
                     intervals_for(cfg.ymax - cfg.ymin, spacing), BoundaryKind::NeumannSymmetric);
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

nlohmann::json optional_json(const std::optional<double>& v)
{
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j)
{
    if (j.is_null())
        return std::nullopt;
    return j.get<double>();
}

std::string optional_csv(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

std::string to_string(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::ConvergenceSpace:
        return "convergence-space";
    case ExperimentKind::ConvergenceTime1:
        return "convergence-time-1";
    case ExperimentKind::ConvergenceTime2:
        return "convergence-time-2";
    case ExperimentKind::Benchmark:
        return "benchmark";
    case ExperimentKind::Simulate:
        return "simulate";
    }
    return "unknown";
}

ReportFormat parse_report_format(const std::string& s)
{
    if (s == "csv")
        return ReportFormat::Csv;
    if (s == "json")
        return ReportFormat::Json;
    throw ConfigError("unknown format '" + s + "' (expected csv|json)");
}

ExperimentConfig default_config(ExperimentKind kind)
{
    ExperimentConfig c;
    c.experiment = kind;
    switch (kind) {
    case ExperimentKind::ConvergenceSpace:
        c.scheme = SchemeKind::AdiFirstOrder;
        c.dt = 1e-6;
        c.t_final = 1e-5;
        c.dx_list = {0.1, 0.05, 0.025, 0.0125};
        break;
    case ExperimentKind::ConvergenceTime1:
        c.scheme = SchemeKind::AdiFirstOrder;
        c.t_final = 0.1;
        c.dt_list = {0.05, 0.025, 0.0125, 0.00625};
        c.dx = 0.01;
        break;
    case ExperimentKind::ConvergenceTime2:
        c.scheme = SchemeKind::AdiSecondOrder;
        c.t_final = 0.04;
        c.dt_list = {0.01, 0.005, 0.0025, 0.00125};
        c.dx = 0.001;
        break;
    case ExperimentKind::Benchmark:
        c.xmin = c.ymin = -5.0;
        c.xmax = c.ymax = 5.0;
        c.dt = 1e-3;
        c.t_final = 1.0;
        c.grid_list = {80, 160, 320, 640};
        break;
    case ExperimentKind::Simulate:
        c.nx = c.ny = 64;
        c.dt = 1e-4;
        c.t_final = 0.01;
        c.cadence = 10;
        break;
    }
    return c;
}

std::vector<std::string> config_keys()
{
    std::vector<std::string> keys;
    for (const auto& [k, _] : setters())
        keys.push_back(k);
    return keys;
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base)
{
    std::set<std::string> seen;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        const std::string where = "config line " + std::to_string(line_no) + ": ";
        if (eq == std::string::npos)
            throw ConfigError(where + "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError(where + "unknown key '" + key + "'");
        if (!seen.insert(key).second)
            throw ConfigError(where + "duplicate key '" + key + "'");
        if (value.empty())
            throw ConfigError(where + "empty value for '" + key + "'");
        try {
            it->second(base, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path.string() + "'");
    return parse_config(in, std::move(base));
}

void validate_experiment(const ExperimentConfig& cfg)
{
    make_grid(cfg.xmin, cfg.xmax, cfg.ymin, cfg.ymax, std::max(cfg.nx, 3), std::max(cfg.ny, 3),
              cfg.bc);
    if (!(cfg.epsilon > 0.0))
        throw ConfigError("epsilon must be positive");
    if (!(cfg.t_final > 0.0))
        throw ConfigError("t_final must be positive");
    if (!(cfg.cg_tol > 0.0) || cfg.cg_maxiter < 0)
        throw ConfigError("cg_tol must be positive and cg_maxiter nonnegative");
    if (cfg.threads < 0)
        throw ConfigError("threads must be nonnegative");
    if (cfg.cadence < 1 || cfg.repeats < 1)
        throw ConfigError("cadence and repeats must be at least 1");

    const bool manufactured = cfg.experiment != ExperimentKind::Simulate ||
                              cfg.initial == InitialKind::Manufactured;
    if (manufactured && cfg.bc == BoundaryKind::Periodic)
        throw ConfigError("manufactured runs use the Dirichlet closure and need bc = neumann");

    switch (cfg.experiment) {
    case ExperimentKind::ConvergenceSpace:
        if (cfg.dx_list.empty())
            throw ConfigError("dx_list must not be empty");
        for (double dx : cfg.dx_list)
            manufactured_grid(cfg, dx);
        steps_for(cfg.t_final, cfg.dt);
        break;
    case ExperimentKind::ConvergenceTime1:
    case ExperimentKind::ConvergenceTime2:
        if (cfg.dt_list.empty())
            throw ConfigError("dt_list must not be empty");
        manufactured_grid(cfg, cfg.dx);
        for (double dt : cfg.dt_list)
            steps_for(cfg.t_final, dt);
        break;
    case ExperimentKind::Benchmark:
        if (cfg.grid_list.empty())
            throw ConfigError("grid_list must not be empty");
        for (int n : cfg.grid_list)
            if (n < 3)
                throw ConfigError("grid_list entries must be at least 3");
        steps_for(cfg.t_final, cfg.dt);
        break;
    case ExperimentKind::Simulate:
        if (cfg.nx < 3 || cfg.ny < 3)
            throw ConfigError("nx and ny must be at least 3");
        steps_for(cfg.t_final, cfg.dt);
        if (cfg.initial == InitialKind::File && (cfg.rho_file.empty() || cfg.c_file.empty()))
            throw ConfigError("initial = file needs rho_file and c_file");
        break;
    }
}

void fill_ratios(ConvergenceReport& report)
{
    for (std::size_t k = 0; k < report.rows.size(); ++k) {
        auto& row = report.rows[k];
        if (k == 0) {
            row.ratio_rho.reset();
            row.ratio_c.reset();
            continue;
        }
        const auto& prev = report.rows[k - 1];
        row.ratio_rho = prev.error_rho / row.error_rho;
        row.ratio_c = prev.error_c / row.error_c;
    }
}

ManufacturedErrors run_manufactured(const GridSpec& grid, SchemeKind scheme, double epsilon,
                                    double dt, double t_final, int threads,
                                    SecondOrderStart start)
{
    const ManufacturedCase mc = make_manufactured_case(epsilon);
    SchemeConfig sc;
    sc.epsilon = epsilon;
    sc.dt = dt;
    sc.scheme = scheme;
    sc.forcing = mc.forcing();
    sc.dirichlet = mc.dirichlet();
    sc.threads = threads;
    sc.start = start;
    sc.on_warning = [](const std::string&) {};
    Integrator integrator(sc, grid);

    const int steps = steps_for(t_final, dt);
    State s = exact_state(grid, 0.0);
    for (int n = 0; n < steps; ++n)
        s = integrator.step(s);
    return {max_norm_error(s.rho, mc.rho_exact, s.t), max_norm_error(s.c, mc.c_exact, s.t)};
}

ConvergenceReport run_convergence_space(const ExperimentConfig& cfg)
{
    ExperimentConfig c = cfg;
    c.experiment = ExperimentKind::ConvergenceSpace;
    validate_experiment(c);
    ConvergenceReport rep;
    rep.experiment = to_string(ExperimentKind::ConvergenceSpace);
    rep.parameter = "dx";
    rep.scheme = to_string(c.scheme);
    rep.closure = kClosureNote;
    for (double dx : c.dx_list) {
        const auto e = run_manufactured(manufactured_grid(c, dx), c.scheme, c.epsilon, c.dt,
                                        c.t_final, c.threads, c.start);
        rep.rows.push_back({dx, e.error_rho, e.error_c, std::nullopt, std::nullopt});
    }
    fill_ratios(rep);
    return rep;
}

ConvergenceReport run_convergence_time(const ExperimentConfig& cfg, int order)
{
    if (order != 1 && order != 2)
        throw ConfigError("order must be 1 or 2");
    ExperimentConfig c = cfg;
    c.experiment = order == 1 ? ExperimentKind::ConvergenceTime1 : ExperimentKind::ConvergenceTime2;
    validate_experiment(c);
    const SchemeKind scheme = order == 1 ? SchemeKind::AdiFirstOrder : SchemeKind::AdiSecondOrder;
    ConvergenceReport rep;
    rep.experiment = to_string(c.experiment);
    rep.parameter = "dt";
    rep.scheme = to_string(scheme);
    rep.closure = kClosureNote;
    const GridSpec grid = manufactured_grid(c, c.dx);
    for (double dt : c.dt_list) {
        const auto e = run_manufactured(grid, scheme, c.epsilon, dt, c.t_final, c.threads, c.start);
        rep.rows.push_back({dt, e.error_rho, e.error_c, std::nullopt, std::nullopt});
    }
    fill_ratios(rep);
    return rep;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw ConfigError("slope fit needs at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double lx = std::log(x[k]);
        const double ly = std::log(y[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

BenchmarkReport run_benchmark(const ExperimentConfig& cfg)
{
    ExperimentConfig c = cfg;
    c.experiment = ExperimentKind::Benchmark;
    validate_experiment(c);
    const ManufacturedCase mc = make_manufactured_case(c.epsilon);
    const int steps = steps_for(c.t_final, c.dt);

    BenchmarkReport rep;
    rep.threads = c.threads;
    for (int n : c.grid_list) {
        const GridSpec grid =
            make_grid(c.xmin, c.xmax, c.ymin, c.ymax, n, n, BoundaryKind::NeumannSymmetric);
        SchemeConfig sc = scheme_config(c);
        sc.forcing = mc.forcing();
        sc.dirichlet = mc.dirichlet();
        sc.on_warning = [](const std::string&) {};

        auto timed_run = [&](SchemeKind kind, int threads, double& seconds, State& final_state,
                             double* mean_iterations) {
            seconds = std::numeric_limits<double>::infinity();
            for (int r = 0; r < c.repeats; ++r) {
                SchemeConfig run_cfg = sc;
                run_cfg.scheme = kind;
                run_cfg.threads = threads;
                Integrator integrator(run_cfg, grid);
                State s = exact_state(grid, 0.0);
                long long iterations = 0;
                const auto t0 = std::chrono::steady_clock::now();
                for (int k = 0; k < steps; ++k) {
                    s = integrator.step(s);
                    iterations += integrator.five_point_stats().cg_iterations_c +
                                  integrator.five_point_stats().cg_iterations_h;
                }
                seconds = std::min(seconds, seconds_since(t0));
                final_state = std::move(s);
                if (mean_iterations)
                    *mean_iterations = static_cast<double>(iterations) / (2.0 * steps);
            }
        };

        BenchmarkRow row;
        row.n = n;
        row.unknowns = 2LL * static_cast<long long>(grid.size());
        row.steps = steps;
        State adi_state, fp_state;
        timed_run(SchemeKind::AdiFirstOrder, 0, row.adi_seconds, adi_state, nullptr);
        timed_run(SchemeKind::FivePoint, 0, row.five_point_seconds, fp_state,
                  &row.mean_cg_iterations);
        if (c.threads > 1) {
            double threaded = 0.0;
            State unused;
            timed_run(SchemeKind::AdiFirstOrder, c.threads, threaded, unused, nullptr);
            row.adi_threaded_seconds = threaded;
        }
        row.speedup = row.five_point_seconds / row.adi_seconds;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            row.max_diff_rho = std::max(row.max_diff_rho, std::abs(adi_state.rho[k] - fp_state.rho[k]));
            row.max_diff_c = std::max(row.max_diff_c, std::abs(adi_state.c[k] - fp_state.c[k]));
        }
        rep.rows.push_back(row);
    }
    if (rep.rows.size() >= 2) {
        std::vector<double> x, y;
        for (const auto& r : rep.rows) {
            x.push_back(static_cast<double>(r.unknowns));
            y.push_back(r.adi_seconds);
        }
        rep.adi_fit_exponent = fit_loglog_slope(x, y);
    }
    return rep;
}

GridSpec experiment_grid(const ExperimentConfig& cfg)
{
    return make_grid(cfg.xmin, cfg.xmax, cfg.ymin, cfg.ymax, cfg.nx, cfg.ny, cfg.bc);
}

SchemeConfig scheme_config(const ExperimentConfig& cfg)
{
    SchemeConfig sc;
    sc.epsilon = cfg.epsilon;
    sc.dt = cfg.dt;
    sc.scheme = cfg.scheme;
    sc.cg_tol = cfg.cg_tol;
    sc.cg_maxiter = cfg.cg_maxiter;
    sc.threads = cfg.threads;
    sc.start = cfg.start;
    return sc;
}

State initial_state(const ExperimentConfig& cfg)
{
    if (cfg.initial == InitialKind::File) {
        std::ifstream rf(cfg.rho_file), cf(cfg.c_file);
        if (!rf || !cf)
            throw ConfigError("cannot open initial data files");
        State s;
        s.rho = read_field_csv(rf);
        s.c = read_field_csv(cf);
        validate_state(s);
        return s;
    }

    const GridSpec g = experiment_grid(cfg);
    const double xc = 0.5 * (cfg.xmin + cfg.xmax);
    const double yc = 0.5 * (cfg.ymin + cfg.ymax);
    State s;
    switch (cfg.initial) {
    case InitialKind::Gaussian:
        s.rho = sample_field(g, [&](double x, double y) {
            const double r2 = (x - xc) * (x - xc) + (y - yc) * (y - yc);
            return cfg.ic_rho_peak * std::exp(-r2 / (cfg.ic_rho_width * cfg.ic_rho_width));
        });
        s.c = sample_field(g, [&](double x, double y) {
            const double r2 = (x - xc) * (x - xc) + (y - yc) * (y - yc);
            return cfg.ic_c_peak * std::exp(-r2 / (cfg.ic_c_width * cfg.ic_c_width));
        });
        break;
    case InitialKind::Constant:
        s.rho = Field(g, cfg.ic_rho_value);
        s.c = Field(g, cfg.ic_c_value);
        break;
    case InitialKind::Zero:
        s.rho = Field(g, 0.0);
        s.c = Field(g, 0.0);
        break;
    case InitialKind::Random: {
        // A few random low Fourier modes; the density stays positive.
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> amp(-1.0, 1.0), phase(0.0, 2.0 * std::numbers::pi);
        struct Mode {
            int kx, ky;
            double a, b, p;
        };
        std::vector<Mode> modes;
        for (int kx = 0; kx <= 2; ++kx)
            for (int ky = 0; ky <= 2; ++ky)
                modes.push_back({kx, ky, amp(rng), amp(rng), phase(rng)});
        const double lx = cfg.xmax - cfg.xmin;
        const double ly = cfg.ymax - cfg.ymin;
        auto series = [&](double x, double y, bool density) {
            double v = 0.0;
            for (const auto& m : modes) {
                const double arg = 2.0 * std::numbers::pi *
                                       (m.kx * (x - cfg.xmin) / lx + m.ky * (y - cfg.ymin) / ly) +
                                   m.p;
                v += (density ? m.a : m.b) * std::cos(arg);
            }
            return v / static_cast<double>(modes.size());
        };
        s.rho = sample_field(g, [&](double x, double y) {
            return cfg.ic_rho_value * (1.0 + 0.9 * series(x, y, true));
        });
        s.c = sample_field(g, [&](double x, double y) {
            return cfg.ic_c_value + cfg.ic_c_peak * series(x, y, false);
        });
        break;
    }
    case InitialKind::Manufactured:
        s = exact_state(g, 0.0);
        break;
    case InitialKind::File:
        break;
    }
    s.t = 0.0;
    return s;
}

SimulationResult run_simulation(const ExperimentConfig& cfg, const SimulationSink& sink)
{
    ExperimentConfig c = cfg;
    c.experiment = ExperimentKind::Simulate;
    validate_experiment(c);

    State state = initial_state(c);
    const GridSpec grid = state.rho.grid();
    SchemeConfig sc = scheme_config(c);
    if (c.initial == InitialKind::Manufactured) {
        const ManufacturedCase mc = make_manufactured_case(c.epsilon);
        sc.forcing = mc.forcing();
        sc.dirichlet = mc.dirichlet();
    }
    Integrator integrator(sc, grid);
    const int steps = steps_for(c.t_final, c.dt);

    SimulationResult result;
    auto emit = [&](const DiagnosticsRecord& r) {
        result.records.push_back(r);
        if (sink.on_record)
            sink.on_record(r);
    };
    emit(make_record(state, nullptr, sc));

    std::vector<double> pending = c.snapshot_times;
    std::sort(pending.begin(), pending.end());
    std::size_t next_snapshot = 0;
    const double tol = 1e-9 * c.dt;

    for (int n = 1; n <= steps; ++n) {
        State next;
        try {
            next = integrator.step(state);
        } catch (const NumericalAbort&) {
            if (sink.on_snapshot)
                sink.on_snapshot(state);
            throw;
        } catch (const DomainError& e) {
            if (sink.on_snapshot)
                sink.on_snapshot(state);
            throw NumericalAbort(e.what());
        }
        if (c.scheme == SchemeKind::AdiSecondOrder && integrator.workspace().last_positivity) {
            result.positivity.push_back(*integrator.workspace().last_positivity);
            if (sink.on_positivity)
                sink.on_positivity(n, result.positivity.back());
        }
        if (n % c.cadence == 0 || n == steps) {
            try {
                emit(make_record(next, &state, sc));
            } catch (const DomainError& e) {
                if (sink.on_snapshot)
                    sink.on_snapshot(state);
                throw NumericalAbort(e.what());
            }
        }
        while (next_snapshot < pending.size() && pending[next_snapshot] <= next.t + tol) {
            if (sink.on_snapshot)
                sink.on_snapshot(next);
            ++next_snapshot;
        }
        state = std::move(next);
    }
    if (pending.empty() && sink.on_snapshot)
        sink.on_snapshot(state);
    result.final_state = std::move(state);
    result.steps = steps;
    return result;
}

void write_report(std::ostream& os, const ConvergenceReport& r, ReportFormat f)
{
    if (f == ReportFormat::Json) {
        nlohmann::ordered_json j;
        j["experiment"] = r.experiment;
        j["parameter"] = r.parameter;
        j["scheme"] = r.scheme;
        j["closure"] = r.closure;
        j["note"] = kRatioNote;
        j["rows"] = nlohmann::json::array();
        for (const auto& row : r.rows) {
            nlohmann::ordered_json jr;
            jr["resolution"] = row.resolution;
            jr["error_rho"] = row.error_rho;
            jr["error_c"] = row.error_c;
            jr["ratio_rho"] = optional_json(row.ratio_rho);
            jr["ratio_c"] = optional_json(row.ratio_c);
            j["rows"].push_back(jr);
        }
        os << j.dump(2) << '\n';
        return;
    }
    nlohmann::ordered_json meta;
    meta["experiment"] = r.experiment;
    meta["parameter"] = r.parameter;
    meta["scheme"] = r.scheme;
    meta["closure"] = r.closure;
    os << "# " << meta.dump() << '\n';
    os << "# " << kRatioNote << '\n';
    os << "resolution,error_rho,error_c,ratio_rho,ratio_c\n";
    for (const auto& row : r.rows)
        os << format_double(row.resolution) << ',' << format_double(row.error_rho) << ','
           << format_double(row.error_c) << ',' << optional_csv(row.ratio_rho) << ','
           << optional_csv(row.ratio_c) << '\n';
}

ConvergenceReport read_convergence_report(std::istream& is, ReportFormat f)
{
    ConvergenceReport r;
    try {
        if (f == ReportFormat::Json) {
            const auto j = nlohmann::json::parse(is);
            r.experiment = j.at("experiment").get<std::string>();
            r.parameter = j.at("parameter").get<std::string>();
            r.scheme = j.at("scheme").get<std::string>();
            r.closure = j.at("closure").get<std::string>();
            for (const auto& jr : j.at("rows"))
                r.rows.push_back({jr.at("resolution").get<double>(),
                                  jr.at("error_rho").get<double>(), jr.at("error_c").get<double>(),
                                  optional_from(jr.at("ratio_rho")),
                                  optional_from(jr.at("ratio_c"))});
            return r;
        }
        std::string line;
        if (!std::getline(is, line) || line.rfind("# ", 0) != 0)
            throw ConfigError("report: missing metadata line");
        const auto meta = nlohmann::json::parse(line.substr(2));
        r.experiment = meta.at("experiment").get<std::string>();
        r.parameter = meta.at("parameter").get<std::string>();
        r.scheme = meta.at("scheme").get<std::string>();
        r.closure = meta.at("closure").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("report: ") + e.what());
    }

    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        while (cells.size() < 5)
            cells.emplace_back();
        if (cells.size() != 5)
            throw ConfigError("report: row with wrong column count");
        auto opt = [](const std::string& s) -> std::optional<double> {
            if (trim(s).empty())
                return std::nullopt;
            return parse_double(s);
        };
        r.rows.push_back({parse_double(cells[0]), parse_double(cells[1]), parse_double(cells[2]),
                          opt(cells[3]), opt(cells[4])});
    }
    return r;
}

void write_report(std::ostream& os, const BenchmarkReport& r, ReportFormat f)
{
    if (f == ReportFormat::Json) {
        nlohmann::ordered_json j;
        j["adi_fit_exponent"] = r.adi_fit_exponent;
        j["threads"] = r.threads;
        j["rows"] = nlohmann::json::array();
        for (const auto& row : r.rows) {
            nlohmann::ordered_json jr;
            jr["n"] = row.n;
            jr["unknowns"] = row.unknowns;
            jr["steps"] = row.steps;
            jr["adi_seconds"] = row.adi_seconds;
            jr["five_point_seconds"] = row.five_point_seconds;
            jr["speedup"] = row.speedup;
            jr["adi_threaded_seconds"] = optional_json(row.adi_threaded_seconds);
            jr["mean_cg_iterations"] = row.mean_cg_iterations;
            jr["max_diff_rho"] = row.max_diff_rho;
            jr["max_diff_c"] = row.max_diff_c;
            j["rows"].push_back(jr);
        }
        os << j.dump(2) << '\n';
        return;
    }
    os << "# adi_fit_exponent=" << format_double(r.adi_fit_exponent) << " threads=" << r.threads
       << '\n';
    os << "n,unknowns,steps,adi_seconds,five_point_seconds,speedup,adi_threaded_seconds,"
          "mean_cg_iterations,max_diff_rho,max_diff_c\n";
    for (const auto& row : r.rows)
        os << row.n << ',' << row.unknowns << ',' << row.steps << ','
           << format_double(row.adi_seconds) << ',' << format_double(row.five_point_seconds)
           << ',' << format_double(row.speedup) << ',' << optional_csv(row.adi_threaded_seconds)
           << ',' << format_double(row.mean_cg_iterations) << ','
           << format_double(row.max_diff_rho) << ',' << format_double(row.max_diff_c) << '\n';
}

}  // namespace ksadi
