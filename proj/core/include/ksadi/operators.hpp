#pragma once

#include <vector>

#include "ksadi/grid.hpp"
#include "ksadi/linalg.hpp"

namespace ksadi {

/// Geometric-mean weights M_{k+1/2} = sqrt(M_k M_{k+1}) between neighbouring nodes.
///
/// Along the chosen direction there are always n half points per line (n =
/// number of intervals): periodic lines wrap the last one, Neumann lines have
/// no half points outside the domain.
struct HalfPointCoeffs {
    Direction direction = Direction::X;
    GridSpec grid;
    std::vector<double> values;

    /// Half point following node (i, j) in `direction`.
    double operator()(int i, int j) const noexcept;
};

HalfPointCoeffs half_point_coeffs(const Field& M, Direction d);

/// Undivided second difference v_{k+1} - 2 v_k + v_{k-1}.
///
/// Neumann lines use zero flux through the outer half points, so the end row
/// reads v_1 - v_0.
Field apply_delta2(const Field& f, Direction d);

/// Undivided weighted operator (1/sqrt M) delta(M delta(h / sqrt M)).
Field apply_tau(const Field& M, const Field& h, Direction d);

/// tau_x applied to tau_y h.
Field apply_tau_xy(const Field& M, const Field& h);

/// Sum over owned nodes of sqrt(M) * tauh. Vanishes for tauh in the range of tau.
double apply_mass_weighted_sum(const Field& M, const Field& tauh);

/// A 1D operator of the form L v_k = v_{k-1} + v_{k+1} - w_k v_k along every
/// grid line of one direction (missing neighbours at Neumann ends dropped).
///
/// Both delta^2 and tau fit this pattern: with geometric-mean half points the
/// off-diagonal couplings of tau are exactly one.
struct LineOperator {
    Direction direction = Direction::X;
    Field weights;
    /// Positive vector s with L s = 0 in the interior (sqrt M for tau, ones for
    /// delta^2). (a - b L) is diagonally dominant after scaling columns by s.
    Field scale;
};

LineOperator delta2_line_operator(const GridSpec& g, Direction d);

/// Throws DomainError for nonpositive M.
LineOperator tau_line_operator(const Field& M, Direction d);

/// a v + b L v.
Field apply_shifted(const LineOperator& op, double a, double b, const Field& v);

/// Tridiagonal (or cyclic) system of (a - b L) restricted to one grid line;
/// the rhs is left zero.
LineSystem assemble_shifted_line(const LineOperator& op, double a, double b, int line);

/// (1 - mu tau) on one line. Throws DomainError for nonpositive M.
LineSystem assemble_tau_line(const Field& M, double mu, int line, Direction d);

/// (1 - mu delta^2) on one line.
LineSystem assemble_delta2_line(const GridSpec& g, double mu, int line, Direction d);

/// Number of grid lines running along `d` and the node count on each.
int line_count(const GridSpec& g, Direction d) noexcept;
int line_length(const GridSpec& g, Direction d) noexcept;

/// Flat index of node k on line `line` running along `d`.
inline std::size_t line_index(const GridSpec& g, Direction d, int line, int k) noexcept
{
    return d == Direction::X ? static_cast<std::size_t>(line) * g.nodes_x() + k
                             : static_cast<std::size_t>(k) * g.nodes_x() + line;
}

}  // namespace ksadi
