#pragma once

#include "ksadi/grid.hpp"
#include "ksadi/schemes.hpp"

namespace ksadi {

/// rho = 4 exp(-(t + x^2 + y^2)),  c = exp(-(t + (x^2 + y^2)/2)).
double exact_rho(double x, double y, double t);
double exact_c(double x, double y, double t);

/// Sources that make the exact pair solve the forced system
///   rho_t = lap rho - div(rho grad c) + F1,   eps c_t = lap c + rho + F2.
double forcing_F1(double x, double y, double t);
double forcing_F2(double x, double y, double t, double epsilon);

struct ManufacturedCase {
    double epsilon = 1.0;
    SpaceTimeFn rho_exact;
    SpaceTimeFn c_exact;
    SpaceTimeFn F1;
    SpaceTimeFn F2;

    Forcing forcing() const { return Forcing{F1, F2}; }
    DirichletData dirichlet() const { return DirichletData{rho_exact, c_exact}; }
};

ManufacturedCase make_manufactured_case(double epsilon);

/// Exact fields sampled on the grid at time t.
State exact_state(const GridSpec& grid, double t);

/// max over owned nodes of |numeric - exact(x, y, t)|.
double max_norm_error(const Field& numeric, const SpaceTimeFn& exact, double t);

}  // namespace ksadi
