#pragma once

#include <string>

#include "ksadi/grid.hpp"
#include "ksadi/schemes.hpp"

namespace ksadi {

/// dx * dy * sum of f over owned nodes.
double total_mass(const Field& f);

/// Discrete free energy
///   dx dy sum [rho log rho - rho - rho c] + 1/2 dx dy sum |delta c / h|^2
/// with the bulk sum over owned nodes and the gradient sums over the half
/// points between owned nodes (wrapping on periodic grids). rho log rho is
/// taken as 0 at rho = 0. Throws DomainError for rho < -1e-12.
double discrete_energy(const Field& rho, const Field& c);

/// Right-hand side of the discrete energy dissipation inequality:
///   -dt <M delta(rho/M), delta(log rho - c)>_m - eps dt <dc/dt, dc/dt>_k
/// with geometric-mean M at half points. Half points touching a node with
/// rho <= 1e-300 are left out of the first term.
double dissipation_bound(const Field& rho_next, const Field& c_n, const Field& c_next,
                         const Field& M_next, const SchemeConfig& cfg);

struct DissipationCheck {
    double energy_delta = 0.0;
    double bound = 0.0;
    bool satisfied = true;
};

/// satisfied iff energy_delta <= bound + 1e-10 (1 + |energy(before)|).
DissipationCheck verify_dissipation_step(const State& before, const State& after,
                                         const Field& M_next, const SchemeConfig& cfg);

struct DiagnosticsRecord {
    double t = 0.0;
    double mass_rho = 0.0;
    double mass_c = 0.0;
    double min_rho = 0.0;
    double min_c = 0.0;
    double energy = 0.0;
    double energy_delta = 0.0;
    double dissipation_bound = 0.0;

    friend bool operator==(const DiagnosticsRecord&, const DiagnosticsRecord&) = default;
};

/// Diagnostics of `now`. With `prev`, also fills energy_delta and the
/// dissipation bound (M taken as exp(now.c)).
DiagnosticsRecord make_record(const State& now, const State* prev, const SchemeConfig& cfg);

/// Column order: t, mass_rho, mass_c, min_rho, min_c, energy, energy_delta, dissipation_bound.
std::string diagnostics_csv_header();
std::string to_csv_row(const DiagnosticsRecord& r);
std::string to_json(const DiagnosticsRecord& r);
DiagnosticsRecord parse_csv_row(const std::string& line);
DiagnosticsRecord parse_json_record(const std::string& text);

}  // namespace ksadi
