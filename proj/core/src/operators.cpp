#include "ksadi/operators.hpp"

#include <cmath>
#include <cstddef>

#include "ksadi/errors.hpp"

namespace ksadi {

namespace {

Direction other(Direction d) { return d == Direction::X ? Direction::Y : Direction::X; }

void require_positive(const Field& M)
{
    for (std::size_t k = 0; k < M.size(); ++k)
        if (!(M[k] > 0.0) || !std::isfinite(M[k]))
            throw DomainError("weight field M must be finite and strictly positive");
}

void require_same_grid(const Field& a, const Field& b)
{
    if (!(a.grid() == b.grid()))
        throw ConfigError("fields live on different grids");
}

// Flux-form application of the undivided operator
//   out_k = (F_{k+1/2} - F_{k-1/2}) / s_k,  F_{k+1/2} = w_{k+1/2} (g_{k+1} - g_k).
// Missing half points at Neumann ends carry zero flux.
template <class Weight, class Value, class Scale>
Field flux_form(const GridSpec& g, Direction d, Weight half_weight, Value value, Scale scale)
{
    Field out(g);
    const int lines = line_count(g, d);
    const int n = line_length(g, d);
    const bool wrap = g.periodic();
    for (int l = 0; l < lines; ++l) {
        auto flux = [&](int k) {  // flux through k+1/2, k in [0, n-1) or wrapped
            const int kp = (k + 1) % n;
            return half_weight(l, k) * (value(l, kp) - value(l, k));
        };
        for (int k = 0; k < n; ++k) {
            double right = 0.0;
            double left = 0.0;
            if (k + 1 < n || wrap)
                right = flux(k);
            if (k > 0)
                left = flux(k - 1);
            else if (wrap)
                left = flux(n - 1);
            out[line_index(g, d, l, k)] = (right - left) / scale(l, k);
        }
    }
    return out;
}

// Visits nodes in memory order with the flat indices of their previous and
// next neighbours along d; -1 marks a missing neighbour at a Neumann end.
template <class Body>
void for_each_along(const GridSpec& g, Direction d, Body body)
{
    const int nxn = g.nodes_x();
    const int nyn = g.nodes_y();
    const bool wrap = g.periodic();
    for (int j = 0; j < nyn; ++j) {
        const std::size_t row = static_cast<std::size_t>(j) * nxn;
        if (d == Direction::X) {
            for (int i = 0; i < nxn; ++i) {
                std::ptrdiff_t prev = i > 0 ? std::ptrdiff_t(row + i - 1)
                                            : (wrap ? std::ptrdiff_t(row + nxn - 1) : -1);
                std::ptrdiff_t next = i + 1 < nxn ? std::ptrdiff_t(row + i + 1)
                                                  : (wrap ? std::ptrdiff_t(row) : -1);
                body(row + i, prev, next);
            }
        } else {
            const int jp = j > 0 ? j - 1 : (wrap ? nyn - 1 : -1);
            const int jn = j + 1 < nyn ? j + 1 : (wrap ? 0 : -1);
            for (int i = 0; i < nxn; ++i) {
                std::ptrdiff_t prev = jp >= 0 ? std::ptrdiff_t(std::size_t(jp) * nxn + i) : -1;
                std::ptrdiff_t next = jn >= 0 ? std::ptrdiff_t(std::size_t(jn) * nxn + i) : -1;
                body(row + i, prev, next);
            }
        }
    }
}

}  // namespace

int line_count(const GridSpec& g, Direction d) noexcept { return g.nodes(other(d)); }

int line_length(const GridSpec& g, Direction d) noexcept { return g.nodes(d); }

double HalfPointCoeffs::operator()(int i, int j) const noexcept
{
    if (direction == Direction::X)
        return values[static_cast<std::size_t>(j) * grid.nx + i];
    return values[static_cast<std::size_t>(j) * grid.nodes_x() + i];
}

HalfPointCoeffs half_point_coeffs(const Field& M, Direction d)
{
    require_positive(M);
    const GridSpec& g = M.grid();
    HalfPointCoeffs hp;
    hp.direction = d;
    hp.grid = g;
    const int n = line_length(g, d);
    const int halves = d == Direction::X ? g.nx : g.ny;
    const int lines = line_count(g, d);
    hp.values.resize(static_cast<std::size_t>(halves) * lines);
    for (int l = 0; l < lines; ++l)
        for (int k = 0; k < halves; ++k) {
            const double a = M[line_index(g, d, l, k)];
            const double b = M[line_index(g, d, l, (k + 1) % n)];
            double m = std::sqrt(a * b);
            if (!std::isfinite(m) || m == 0.0)
                m = std::sqrt(a) * std::sqrt(b);
            const std::size_t idx = d == Direction::X
                                        ? static_cast<std::size_t>(l) * halves + k
                                        : static_cast<std::size_t>(k) * lines + l;
            hp.values[idx] = m;
        }
    return hp;
}

Field apply_delta2(const Field& f, Direction d)
{
    const GridSpec& g = f.grid();
    return flux_form(
        g, d, [](int, int) { return 1.0; },
        [&](int l, int k) { return f[line_index(g, d, l, k)]; }, [](int, int) { return 1.0; });
}

Field apply_tau(const Field& M, const Field& h, Direction d)
{
    require_same_grid(M, h);
    const GridSpec& g = M.grid();
    const HalfPointCoeffs hp = half_point_coeffs(M, d);
    std::vector<double> s(M.size()), q(M.size());
    for (std::size_t k = 0; k < M.size(); ++k) {
        s[k] = std::sqrt(M[k]);
        q[k] = h[k] / s[k];
    }
    auto half = [&](int l, int k) {
        return d == Direction::X ? hp(k, l) : hp(l, k);
    };
    return flux_form(
        g, d, half, [&](int l, int k) { return q[line_index(g, d, l, k)]; },
        [&](int l, int k) { return s[line_index(g, d, l, k)]; });
}

Field apply_tau_xy(const Field& M, const Field& h)
{
    return apply_tau(M, apply_tau(M, h, Direction::Y), Direction::X);
}

double apply_mass_weighted_sum(const Field& M, const Field& tauh)
{
    require_same_grid(M, tauh);
    double sum = 0.0;
    for (std::size_t k = 0; k < M.size(); ++k)
        sum += std::sqrt(M[k]) * tauh[k];
    return sum;
}

LineOperator delta2_line_operator(const GridSpec& g, Direction d)
{
    LineOperator op{d, Field(g, 2.0), Field(g, 1.0)};
    if (!g.periodic()) {
        const int n = line_length(g, d);
        for (int l = 0; l < line_count(g, d); ++l) {
            op.weights[line_index(g, d, l, 0)] = 1.0;
            op.weights[line_index(g, d, l, n - 1)] = 1.0;
        }
    }
    return op;
}

LineOperator tau_line_operator(const Field& M, Direction d)
{
    require_positive(M);
    const GridSpec& g = M.grid();
    std::vector<double> s(M.size());
    for (std::size_t k = 0; k < M.size(); ++k)
        s[k] = std::sqrt(M[k]);

    LineOperator op{d, Field(g), Field(g, std::vector<double>(s))};
    for_each_along(g, d, [&](std::size_t idx, std::ptrdiff_t prev, std::ptrdiff_t next) {
        double neighbours = 0.0;
        if (prev >= 0)
            neighbours += s[prev];
        if (next >= 0)
            neighbours += s[next];
        op.weights[idx] = neighbours / s[idx];
    });
    return op;
}

Field apply_shifted(const LineOperator& op, double a, double b, const Field& v)
{
    require_same_grid(op.weights, v);
    Field out(v.grid());
    for_each_along(v.grid(), op.direction,
                   [&](std::size_t idx, std::ptrdiff_t prev, std::ptrdiff_t next) {
                       double lv = -op.weights[idx] * v[idx];
                       if (prev >= 0)
                           lv += v[prev];
                       if (next >= 0)
                           lv += v[next];
                       out[idx] = a * v[idx] + b * lv;
                   });
    return out;
}

LineSystem assemble_shifted_line(const LineOperator& op, double a, double b, int line)
{
    const GridSpec& g = op.weights.grid();
    const Direction d = op.direction;
    if (line < 0 || line >= line_count(g, d))
        throw ConfigError("line index out of range");
    const auto m = static_cast<std::size_t>(line_length(g, d));
    std::vector<double> main(m), off(m - 1, -b), rhs(m, 0.0);
    for (std::size_t k = 0; k < m; ++k)
        main[k] = a + b * op.weights[line_index(g, d, line, static_cast<int>(k))];
    if (g.periodic())
        return CyclicTridiagSystem{off, std::move(main), off, std::move(rhs), -b, -b};
    return TridiagSystem{off, std::move(main), off, std::move(rhs)};
}

LineSystem assemble_tau_line(const Field& M, double mu, int line, Direction d)
{
    return assemble_shifted_line(tau_line_operator(M, d), 1.0, mu, line);
}

LineSystem assemble_delta2_line(const GridSpec& g, double mu, int line, Direction d)
{
    return assemble_shifted_line(delta2_line_operator(g, d), 1.0, mu, line);
}

}  // namespace ksadi
