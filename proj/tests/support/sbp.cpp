#include "sbp.hpp"

#include <cmath>

#include "ksadi/operators.hpp"

namespace ksadi::testing {

namespace {

double gm(double a, double b) { return std::sqrt(a * b); }

struct Ranges {
    int node_lo_i, node_hi_i, node_lo_j, node_hi_j;  // inclusive node ranges of <>_k
    int line_lo, line_hi_x, line_hi_y;               // interior lines carrying half points
};

Ranges ranges_for(const GridSpec& g)
{
    if (g.periodic())
        return {0, g.nx - 1, 0, g.ny - 1, 0, g.ny - 1, g.nx - 1};
    return {1, g.nx - 1, 1, g.ny - 1, 1, g.ny - 1, g.nx - 1};
}

int wrap(const GridSpec& g, Direction d, int k)
{
    const int n = g.nodes(d);
    return g.periodic() ? (k % n + n) % n : k;
}

}  // namespace

SbpSides flux_identity(const Field& rho, const Field& c, const Field& M, bool boundary_terms)
{
    const GridSpec& g = rho.grid();
    const double dx = g.dx, dy = g.dy;
    Field sqrtM(g), h(g), q(g), u(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        sqrtM[k] = std::sqrt(M[k]);
        h[k] = rho[k] / sqrtM[k];
        q[k] = rho[k] / M[k];
        u[k] = std::log(rho[k]) - c[k];
    }
    const Field tx = apply_tau(M, h, Direction::X);
    const Field ty = apply_tau(M, h, Direction::Y);
    const Ranges r = ranges_for(g);

    SbpSides s;
    for (int j = r.node_lo_j; j <= r.node_hi_j; ++j)
        for (int i = r.node_lo_i; i <= r.node_hi_i; ++i) {
            const double term =
                dx * dy * (sqrtM(i, j) * tx(i, j) / (dx * dx) + sqrtM(i, j) * ty(i, j) / (dy * dy)) *
                u(i, j);
            s.lhs += term;
            s.scale += std::abs(term);
        }

    // x half points i + 1/2 on lines j in [line_lo, line_hi_x]
    for (int j = r.line_lo; j <= r.line_hi_x; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int ip = wrap(g, Direction::X, i + 1);
            const double term = dx * dy * gm(M(i, j), M(ip, j)) * (q(ip, j) - q(i, j)) / dx *
                                (u(ip, j) - u(i, j)) / dx;
            s.rhs -= term;
            s.scale += std::abs(term);
        }
    for (int i = r.line_lo; i <= r.line_hi_y; ++i)
        for (int j = 0; j < g.ny; ++j) {
            const int jp = wrap(g, Direction::Y, j + 1);
            const double term = dx * dy * gm(M(i, j), M(i, jp)) * (q(i, jp) - q(i, j)) / dy *
                                (u(i, jp) - u(i, j)) / dy;
            s.rhs -= term;
            s.scale += std::abs(term);
        }

    if (boundary_terms && !g.periodic()) {
        const int N = g.nx, K = g.ny;
        for (int j = 1; j <= K - 1; ++j) {
            s.rhs -= dy / dx * gm(M(0, j), M(1, j)) * (q(1, j) - q(0, j)) * u(0, j);
            s.rhs += dy / dx * gm(M(N - 1, j), M(N, j)) * (q(N, j) - q(N - 1, j)) * u(N, j);
        }
        for (int i = 1; i <= N - 1; ++i) {
            s.rhs -= dx / dy * gm(M(i, 0), M(i, 1)) * (q(i, 1) - q(i, 0)) * u(i, 0);
            s.rhs += dx / dy * gm(M(i, K - 1), M(i, K)) * (q(i, K) - q(i, K - 1)) * u(i, K);
        }
    }
    return s;
}

SbpSides concentration_identity(const Field& c0, const Field& c1, bool boundary_terms)
{
    const GridSpec& g = c1.grid();
    const double dx = g.dx, dy = g.dy;
    const Ranges r = ranges_for(g);
    auto at = [&](const Field& f, int i, int j) {
        return f(wrap(g, Direction::X, i), wrap(g, Direction::Y, j));
    };
    auto dc = [&](int i, int j) { return at(c1, i, j) - at(c0, i, j); };

    SbpSides s;
    for (int j = r.node_lo_j; j <= r.node_hi_j; ++j)
        for (int i = r.node_lo_i; i <= r.node_hi_i; ++i) {
            const double lap =
                (at(c1, i + 1, j) - 2 * at(c1, i, j) + at(c1, i - 1, j)) / (dx * dx) +
                (at(c1, i, j + 1) - 2 * at(c1, i, j) + at(c1, i, j - 1)) / (dy * dy);
            const double term = dx * dy * dc(i, j) * lap;
            s.lhs += term;
            s.scale += std::abs(term);
        }
    for (int j = r.line_lo; j <= r.line_hi_x; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double term = dx * dy * (at(c1, i + 1, j) - at(c1, i, j)) / dx *
                                (dc(i + 1, j) - dc(i, j)) / dx;
            s.rhs -= term;
            s.scale += std::abs(term);
        }
    for (int i = r.line_lo; i <= r.line_hi_y; ++i)
        for (int j = 0; j < g.ny; ++j) {
            const double term = dx * dy * (at(c1, i, j + 1) - at(c1, i, j)) / dy *
                                (dc(i, j + 1) - dc(i, j)) / dy;
            s.rhs -= term;
            s.scale += std::abs(term);
        }
    if (boundary_terms && !g.periodic()) {
        const int N = g.nx, K = g.ny;
        for (int j = 1; j <= K - 1; ++j) {
            s.rhs -= dy / dx * dc(0, j) * (c1(1, j) - c1(0, j));
            s.rhs += dy / dx * dc(N, j) * (c1(N, j) - c1(N - 1, j));
        }
        for (int i = 1; i <= N - 1; ++i) {
            s.rhs -= dx / dy * dc(i, 0) * (c1(i, 1) - c1(i, 0));
            s.rhs += dx / dy * dc(i, K) * (c1(i, K) - c1(i, K - 1));
        }
    }
    return s;
}

SbpSides flux_identity_full_range(const Field& rho, const Field& c, const Field& M)
{
    const GridSpec& g = rho.grid();
    const double dx = g.dx, dy = g.dy;
    Field h(g), q(g), u(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        h[k] = rho[k] / std::sqrt(M[k]);
        q[k] = rho[k] / M[k];
        u[k] = std::log(rho[k]) - c[k];
    }
    const Field tx = apply_tau(M, h, Direction::X);
    const Field ty = apply_tau(M, h, Direction::Y);
    SbpSides s;
    for (int j = 0; j < g.nodes_y(); ++j)
        for (int i = 0; i < g.nodes_x(); ++i) {
            const double term = dx * dy * std::sqrt(M(i, j)) *
                                (tx(i, j) / (dx * dx) + ty(i, j) / (dy * dy)) * u(i, j);
            s.lhs += term;
            s.scale += std::abs(term);
        }
    for (int j = 0; j < g.nodes_y(); ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int ip = wrap(g, Direction::X, i + 1);
            const double term = dx * dy * gm(M(i, j), M(ip, j)) * (q(ip, j) - q(i, j)) / dx *
                                (u(ip, j) - u(i, j)) / dx;
            s.rhs -= term;
            s.scale += std::abs(term);
        }
    for (int i = 0; i < g.nodes_x(); ++i)
        for (int j = 0; j < g.ny; ++j) {
            const int jp = wrap(g, Direction::Y, j + 1);
            const double term = dx * dy * gm(M(i, j), M(i, jp)) * (q(i, jp) - q(i, j)) / dy *
                                (u(i, jp) - u(i, j)) / dy;
            s.rhs -= term;
            s.scale += std::abs(term);
        }
    return s;
}

void make_neumann_compatible(Field& f)
{
    const GridSpec& g = f.grid();
    const int N = g.nx, K = g.ny;
    for (int j = 1; j <= K - 1; ++j) {
        f(0, j) = f(1, j);
        f(N, j) = f(N - 1, j);
    }
    for (int i = 1; i <= N - 1; ++i) {
        f(i, 0) = f(i, 1);
        f(i, K) = f(i, K - 1);
    }
}

}  // namespace ksadi::testing
