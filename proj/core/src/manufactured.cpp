#include "ksadi/manufactured.hpp"

#include <algorithm>
#include <cmath>

namespace ksadi {

double exact_rho(double x, double y, double t) { return 4.0 * std::exp(-(t + x * x + y * y)); }

double exact_c(double x, double y, double t) { return std::exp(-(t + 0.5 * (x * x + y * y))); }

double forcing_F1(double x, double y, double t)
{
    const double r2 = x * x + y * y;
    return (exact_c(x, y, t) * (3.0 * r2 - 2.0) - 4.0 * r2 + 3.0) * exact_rho(x, y, t);
}

double forcing_F2(double x, double y, double t, double epsilon)
{
    const double r2 = x * x + y * y;
    return (2.0 - epsilon - r2) * exact_c(x, y, t) - exact_rho(x, y, t);
}

ManufacturedCase make_manufactured_case(double epsilon)
{
    ManufacturedCase mc;
    mc.epsilon = epsilon;
    mc.rho_exact = exact_rho;
    mc.c_exact = exact_c;
    mc.F1 = forcing_F1;
    mc.F2 = [epsilon](double x, double y, double t) { return forcing_F2(x, y, t, epsilon); };
    return mc;
}

State exact_state(const GridSpec& grid, double t)
{
    State s;
    s.rho = sample_field(grid, [t](double x, double y) { return exact_rho(x, y, t); });
    s.c = sample_field(grid, [t](double x, double y) { return exact_c(x, y, t); });
    s.t = t;
    return s;
}

double max_norm_error(const Field& numeric, const SpaceTimeFn& exact, double t)
{
    const GridSpec& g = numeric.grid();
    double err = 0.0;
    for (int j = 0; j < g.nodes_y(); ++j)
        for (int i = 0; i < g.nodes_x(); ++i)
            err = std::max(err, std::abs(numeric(i, j) - exact(g.x(i), g.y(j), t)));
    return err;
}

}  // namespace ksadi
