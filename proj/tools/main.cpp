#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ksadi/diagnostics.hpp"
#include "ksadi/errors.hpp"
#include "ksadi/field_io.hpp"
#include "ksadi/harness.hpp"

namespace fs = std::filesystem;
using namespace ksadi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAbort = 1;
constexpr int kExitConfig = 2;

struct SharedOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::string format = "csv";
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
};

ExperimentConfig resolve_config(ExperimentKind kind, const SharedOptions& opts)
{
    ExperimentConfig cfg = default_config(kind);
    if (!opts.config_path.empty())
        cfg = load_config(opts.config_path, cfg);
    cfg.experiment = kind;
    if (opts.threads)
        cfg.threads = *opts.threads;
    if (opts.seed)
        cfg.seed = *opts.seed;
    validate_experiment(cfg);
    return cfg;
}

fs::path prepare_out(const SharedOptions& opts)
{
    fs::path dir(opts.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw ConfigError("cannot create output directory '" + opts.out_dir + "'");
    return dir;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream os(path);
    if (!os)
        throw ConfigError("cannot write '" + path.string() + "'");
    return os;
}

std::string extension(ReportFormat f) { return f == ReportFormat::Json ? ".json" : ".csv"; }

void print_convergence(const ConvergenceReport& r)
{
    std::cout << r.experiment << " (" << r.scheme << ", " << r.closure << ")\n";
    std::cout << r.parameter << "\terror_rho\tratio_rho\terror_c\tratio_c\n";
    for (const auto& row : r.rows) {
        std::cout << row.resolution << '\t' << row.error_rho << '\t'
                  << (row.ratio_rho ? std::to_string(*row.ratio_rho) : "-") << '\t' << row.error_c
                  << '\t' << (row.ratio_c ? std::to_string(*row.ratio_c) : "-") << '\n';
    }
}

void run_convergence(ExperimentKind kind, int order, const SharedOptions& opts)
{
    const ReportFormat fmt = parse_report_format(opts.format);
    const ExperimentConfig cfg = resolve_config(kind, opts);
    const fs::path dir = prepare_out(opts);
    const ConvergenceReport rep =
        kind == ExperimentKind::ConvergenceSpace ? run_convergence_space(cfg)
                                                 : run_convergence_time(cfg, order);
    auto os = open_out(dir / (to_string(kind) + extension(fmt)));
    write_report(os, rep, fmt);
    print_convergence(rep);
}

void run_benchmark_command(const SharedOptions& opts)
{
    const ReportFormat fmt = parse_report_format(opts.format);
    const ExperimentConfig cfg = resolve_config(ExperimentKind::Benchmark, opts);
    const fs::path dir = prepare_out(opts);
    const BenchmarkReport rep = run_benchmark(cfg);
    auto os = open_out(dir / ("benchmark" + extension(fmt)));
    write_report(os, rep, fmt);
    std::cout << "n\tunknowns\tadi_s\tfive_point_s\tspeedup\tmax_diff_rho\n";
    for (const auto& row : rep.rows)
        std::cout << row.n << '\t' << row.unknowns << '\t' << row.adi_seconds << '\t'
                  << row.five_point_seconds << '\t' << row.speedup << '\t' << row.max_diff_rho
                  << '\n';
    std::cout << "adi fit exponent " << rep.adi_fit_exponent << '\n';
}

void run_simulate_command(const SharedOptions& opts)
{
    const ReportFormat fmt = parse_report_format(opts.format);
    const ExperimentConfig cfg = resolve_config(ExperimentKind::Simulate, opts);
    const fs::path dir = prepare_out(opts);

    auto diag = open_out(dir / (fmt == ReportFormat::Json ? "diagnostics.jsonl" : "diagnostics.csv"));
    if (fmt == ReportFormat::Csv)
        diag << diagnostics_csv_header() << '\n';

    std::optional<std::ofstream> positivity;
    if (cfg.scheme == SchemeKind::AdiSecondOrder) {
        positivity = open_out(dir / "positivity.csv");
        *positivity << "step,margin_x,margin_y,margin_epsilon,guaranteed\n";
    }

    int snapshot_index = 0;
    SimulationSink sink;
    sink.on_record = [&](const DiagnosticsRecord& r) {
        diag << (fmt == ReportFormat::Json ? to_json(r) : to_csv_row(r)) << '\n';
        diag.flush();
    };
    sink.on_positivity = [&](int step, const PositivityReport& p) {
        *positivity << step << ',' << format_double(p.margin_x) << ','
                    << format_double(p.margin_y) << ',' << format_double(p.margin_epsilon) << ','
                    << (p.guaranteed ? 1 : 0) << '\n';
    };
    sink.on_snapshot = [&](const State& s) {
        const std::string tag = std::to_string(snapshot_index++);
        auto rho_os = open_out(dir / ("rho_" + tag + ".csv"));
        write_field_csv(rho_os, s.rho, {"rho", s.t});
        auto c_os = open_out(dir / ("c_" + tag + ".csv"));
        write_field_csv(c_os, s.c, {"c", s.t});
    };

    const SimulationResult res = run_simulation(cfg, sink);
    const auto& last = res.records.back();
    std::cout << "steps " << res.steps << ", t " << last.t << ", mass_rho " << last.mass_rho
              << ", min_rho " << last.min_rho << ", energy " << last.energy << '\n';
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Keller-Segel ADI solver toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    SharedOptions opts;
    app.add_option("--config", opts.config_path, "key = value configuration file");
    app.add_option("--out", opts.out_dir, "output directory");
    app.add_option("--format", opts.format, "report format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--threads", opts.threads, "line-solve threads (0 = sequential)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--seed", opts.seed, "seed for random initial data");

    auto* space = app.add_subcommand("convergence-space", "spatial convergence study");
    int order = 1;
    auto* time = app.add_subcommand("convergence-time", "temporal convergence study");
    time->add_option("--order", order, "1 or 2")->required()->check(CLI::IsMember({1, 2}));
    auto* bench = app.add_subcommand("benchmark", "ADI versus five-point timing");
    auto* sim = app.add_subcommand("simulate", "free simulation with diagnostics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (space->parsed())
            run_convergence(ExperimentKind::ConvergenceSpace, 1, opts);
        else if (time->parsed())
            run_convergence(order == 1 ? ExperimentKind::ConvergenceTime1
                                       : ExperimentKind::ConvergenceTime2,
                            order, opts);
        else if (bench->parsed())
            run_benchmark_command(opts);
        else if (sim->parsed())
            run_simulate_command(opts);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const SamplingError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const StateError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kExitAbort;
    } catch (const DomainError& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kExitAbort;
    } catch (const IterationLimitError& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kExitAbort;
    } catch (const SingularSystemError& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return kExitAbort;
    }
    return kExitOk;
}
