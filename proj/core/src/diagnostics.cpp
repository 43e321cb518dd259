#include "ksadi/diagnostics.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "ksadi/errors.hpp"
#include "ksadi/field_io.hpp"
#include "ksadi/operators.hpp"

namespace ksadi {

namespace {

constexpr double kLogFloor = 1e-300;

double rho_log_rho(double r)
{
    if (r < -1e-12)
        throw DomainError("negative density in energy evaluation");
    return r > 0.0 ? r * std::log(r) : 0.0;
}

void require_same_grid(const Field& a, const Field& b)
{
    if (!(a.grid() == b.grid()))
        throw ConfigError("diagnostics: fields live on different grids");
}

// Calls fn(k, kp, half_index) for every half point along d: k and kp are the
// flat indices of its two parent nodes.
template <class Fn>
void for_each_half_point(const GridSpec& g, Direction d, Fn fn)
{
    const int n = line_length(g, d);
    const int halves = d == Direction::X ? g.nx : g.ny;
    for (int l = 0; l < line_count(g, d); ++l)
        for (int k = 0; k < halves; ++k)
            fn(line_index(g, d, l, k), line_index(g, d, l, (k + 1) % n), l, k);
}

constexpr std::array<const char*, 8> kColumns = {
    "t", "mass_rho", "mass_c", "min_rho", "min_c", "energy", "energy_delta", "dissipation_bound"};

std::array<double, 8> as_array(const DiagnosticsRecord& r)
{
    return {r.t,      r.mass_rho,     r.mass_c,           r.min_rho,
            r.min_c,  r.energy,       r.energy_delta,     r.dissipation_bound};
}

DiagnosticsRecord from_array(const std::array<double, 8>& a)
{
    return DiagnosticsRecord{a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
}

}  // namespace

double total_mass(const Field& f)
{
    double sum = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k)
        sum += f[k];
    return f.grid().dx * f.grid().dy * sum;
}

double discrete_energy(const Field& rho, const Field& c)
{
    require_same_grid(rho, c);
    const GridSpec& g = rho.grid();
    double bulk = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k)
        bulk += rho_log_rho(rho[k]) - rho[k] - rho[k] * c[k];

    double grad = 0.0;
    for (Direction d : {Direction::X, Direction::Y}) {
        const double h = g.spacing(d);
        for_each_half_point(g, d, [&](std::size_t k, std::size_t kp, int, int) {
            const double q = (c[kp] - c[k]) / h;
            grad += q * q;
        });
    }
    return g.dx * g.dy * (bulk + 0.5 * grad);
}

double dissipation_bound(const Field& rho_next, const Field& c_n, const Field& c_next,
                         const Field& M_next, const SchemeConfig& cfg)
{
    require_same_grid(rho_next, c_n);
    require_same_grid(rho_next, c_next);
    require_same_grid(rho_next, M_next);
    const GridSpec& g = rho_next.grid();

    double flux_term = 0.0;
    for (Direction d : {Direction::X, Direction::Y}) {
        const HalfPointCoeffs mh = half_point_coeffs(M_next, d);
        const double h = g.spacing(d);
        const int halves = d == Direction::X ? g.nx : g.ny;
        const int lines = line_count(g, d);
        for_each_half_point(g, d, [&](std::size_t k, std::size_t kp, int l, int q) {
            if (rho_next[k] <= kLogFloor || rho_next[kp] <= kLogFloor)
                return;
            const std::size_t hidx = d == Direction::X
                                         ? static_cast<std::size_t>(l) * halves + q
                                         : static_cast<std::size_t>(q) * lines + l;
            const double dq = (rho_next[kp] / M_next[kp] - rho_next[k] / M_next[k]) / h;
            const double du = (std::log(rho_next[kp]) - c_next[kp] -
                               (std::log(rho_next[k]) - c_next[k])) /
                              h;
            flux_term += mh.values[hidx] * dq * du;
        });
    }

    double time_term = 0.0;
    for (std::size_t k = 0; k < c_n.size(); ++k) {
        const double r = (c_next[k] - c_n[k]) / cfg.dt;
        time_term += r * r;
    }
    return -cfg.dt * g.dx * g.dy * (flux_term + cfg.epsilon * time_term);
}

DissipationCheck verify_dissipation_step(const State& before, const State& after,
                                         const Field& M_next, const SchemeConfig& cfg)
{
    const double e0 = discrete_energy(before.rho, before.c);
    const double e1 = discrete_energy(after.rho, after.c);
    DissipationCheck out;
    out.energy_delta = e1 - e0;
    out.bound = dissipation_bound(after.rho, before.c, after.c, M_next, cfg);
    out.satisfied = out.energy_delta <= out.bound + 1e-10 * (1.0 + std::abs(e0));
    return out;
}

DiagnosticsRecord make_record(const State& now, const State* prev, const SchemeConfig& cfg)
{
    DiagnosticsRecord r;
    r.t = now.t;
    r.mass_rho = total_mass(now.rho);
    r.mass_c = total_mass(now.c);
    r.min_rho = now.rho.min();
    r.min_c = now.c.min();
    r.energy = discrete_energy(now.rho, now.c);
    if (prev) {
        r.energy_delta = r.energy - discrete_energy(prev->rho, prev->c);
        Field M(now.c.grid());
        for (std::size_t k = 0; k < M.size(); ++k)
            M[k] = std::exp(now.c[k]);
        r.dissipation_bound = dissipation_bound(now.rho, prev->c, now.c, M, cfg);
    }
    return r;
}

std::string diagnostics_csv_header()
{
    std::string out;
    for (std::size_t k = 0; k < kColumns.size(); ++k) {
        if (k > 0)
            out += ',';
        out += kColumns[k];
    }
    return out;
}

std::string to_csv_row(const DiagnosticsRecord& r)
{
    std::string out;
    const auto values = as_array(r);
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k > 0)
            out += ',';
        out += format_double(values[k]);
    }
    return out;
}

std::string to_json(const DiagnosticsRecord& r)
{
    nlohmann::ordered_json j;
    const auto values = as_array(r);
    for (std::size_t k = 0; k < values.size(); ++k)
        j[kColumns[k]] = values[k];
    return j.dump();
}

DiagnosticsRecord parse_csv_row(const std::string& line)
{
    std::array<double, 8> values{};
    std::stringstream ss(line);
    std::string cell;
    std::size_t k = 0;
    while (std::getline(ss, cell, ',')) {
        if (k >= values.size())
            throw ConfigError("diagnostics row has too many columns");
        values[k++] = parse_double(cell);
    }
    if (k != values.size())
        throw ConfigError("diagnostics row has too few columns");
    return from_array(values);
}

DiagnosticsRecord parse_json_record(const std::string& text)
{
    std::array<double, 8> values{};
    try {
        const auto j = nlohmann::json::parse(text);
        for (std::size_t k = 0; k < values.size(); ++k)
            values[k] = j.at(kColumns[k]).get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("diagnostics json: ") + e.what());
    }
    return from_array(values);
}

}  // namespace ksadi
