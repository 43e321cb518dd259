#include "ksadi/schemes.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "ksadi/errors.hpp"
#include "ksadi/linalg.hpp"
#include "ksadi/parallel.hpp"

namespace ksadi {

namespace {

Field sample_at(const GridSpec& g, const SpaceTimeFn& f, double t)
{
    return sample_field(g, [&](double x, double y) { return f(x, y, t); });
}

// Samples f only on nodes within `depth` nodes of the boundary; zero elsewhere.
// Pinned sweeps read boundary data there and nowhere else.
template <class Fn>
Field sample_near_boundary(const GridSpec& g, int depth, Fn f)
{
    Field out(g);
    const int nxn = g.nodes_x();
    const int nyn = g.nodes_y();
    for (int j = 0; j < nyn; ++j) {
        const bool edge_row = j <= depth || j >= nyn - 1 - depth;
        for (int i = 0; i < nxn; ++i)
            if (edge_row || i <= depth || i >= nxn - 1 - depth)
                out(i, j) = f(g.x(i), g.y(j));
    }
    return out;
}

Field boundary_values(const GridSpec& g, const SpaceTimeFn& f, double t)
{
    return sample_near_boundary(g, 1, [&](double x, double y) { return f(x, y, t); });
}

template <class Op>
Field map2(const Field& a, const Field& b, Op op)
{
    Field out(a.grid());
    for (std::size_t k = 0; k < a.size(); ++k)
        out[k] = op(a[k], b[k]);
    return out;
}

template <class Op>
Field map1(const Field& a, Op op)
{
    Field out(a.grid());
    for (std::size_t k = 0; k < a.size(); ++k)
        out[k] = op(a[k]);
    return out;
}

Field exp_field(const Field& c) { return map1(c, [](double v) { return std::exp(v); }); }

bool on_boundary(const GridSpec& g, int i, int j)
{
    return i == 0 || j == 0 || i == g.nodes_x() - 1 || j == g.nodes_y() - 1;
}

void pin_boundary(Field& f, const Field& values)
{
    const GridSpec& g = f.grid();
    for (int j = 0; j < g.nodes_y(); ++j)
        for (int i = 0; i < g.nodes_x(); ++i)
            if (on_boundary(g, i, j))
                f(i, j) = values(i, j);
}

void require_finite(const Field& f, const char* what, double t)
{
    if (!f.all_finite()) {
        std::ostringstream os;
        os << "non-finite " << what << " produced by step ending at t=" << t;
        throw NumericalAbort(os.str());
    }
}

void warn(const SchemeConfig& cfg, const std::string& msg)
{
    if (cfg.on_warning)
        cfg.on_warning(msg);
    else
        std::cerr << "warning: " << msg << '\n';
}

int cg_maxiter(const SchemeConfig& cfg, const GridSpec& g)
{
    return cfg.cg_maxiter > 0 ? cfg.cg_maxiter : static_cast<int>(10 * g.size());
}

// out = a v - bx Lx v - by Ly v, with Lx/Ly given by their centre weights.
void apply_five_point(const GridSpec& g, const Field& wx, const Field& wy, double a, double bx,
                      double by, std::span<const double> v, std::span<double> out)
{
    const int nxn = g.nodes_x();
    const int nyn = g.nodes_y();
    const bool wrap = g.periodic();
    for (int j = 0; j < nyn; ++j) {
        const bool has_down = j > 0 || wrap;
        const bool has_up = j + 1 < nyn || wrap;
        const std::size_t down = g.index(0, (j + nyn - 1) % nyn);
        const std::size_t up = g.index(0, (j + 1) % nyn);
        const std::size_t row = g.index(0, j);
        for (int i = 0; i < nxn; ++i) {
            const std::size_t idx = row + i;
            double lx = -wx[idx] * v[idx];
            if (i > 0 || wrap)
                lx += v[row + (i + nxn - 1) % nxn];
            if (i + 1 < nxn || wrap)
                lx += v[row + (i + 1) % nxn];
            double ly = -wy[idx] * v[idx];
            if (has_down)
                ly += v[down + i];
            if (has_up)
                ly += v[up + i];
            out[idx] = a * v[idx] - bx * lx - by * ly;
        }
    }
}

// Solves (a - bx Lx - by Ly) x = rhs by CG. With pins the boundary rows become
// identity rows and their couplings move to the right-hand side, which keeps
// the operator symmetric.
Field solve_unfactored(const GridSpec& g, const Field& wx, const Field& wy, double a, double bx,
                       double by, const Field& rhs, const Field* pins, const SchemeConfig& cfg,
                       int& iterations)
{
    const std::size_t n = g.size();
    const int maxiter = cg_maxiter(cfg, g);
    if (!pins) {
        LinearOperator op = [&](std::span<const double> x, std::span<double> y) {
            apply_five_point(g, wx, wy, a, bx, by, x, y);
        };
        CgResult res = solve_cg(op, rhs.values(), cfg.cg_tol, maxiter, rhs.values());
        iterations = res.iterations;
        return Field(g, std::move(res.x));
    }

    std::vector<char> boundary(n, 0);
    std::vector<double> lifted(n, 0.0);
    for (int j = 0; j < g.nodes_y(); ++j)
        for (int i = 0; i < g.nodes_x(); ++i)
            if (on_boundary(g, i, j)) {
                boundary[g.index(i, j)] = 1;
                lifted[g.index(i, j)] = (*pins)(i, j);
            }

    std::vector<double> rhs2(n), tmp(n);
    apply_five_point(g, wx, wy, a, bx, by, lifted, tmp);
    for (std::size_t k = 0; k < n; ++k)
        rhs2[k] = boundary[k] ? lifted[k] : rhs[k] - tmp[k];

    std::vector<double> inner(n);
    LinearOperator op = [&](std::span<const double> x, std::span<double> y) {
        std::copy(x.begin(), x.end(), inner.begin());
        for (std::size_t k = 0; k < n; ++k)
            if (boundary[k])
                inner[k] = 0.0;
        apply_five_point(g, wx, wy, a, bx, by, inner, y);
        for (std::size_t k = 0; k < n; ++k)
            if (boundary[k])
                y[k] = x[k];
    };
    CgResult res = solve_cg(op, rhs2, cfg.cg_tol, maxiter, rhs2);
    iterations = res.iterations;
    return Field(g, std::move(res.x));
}

}  // namespace

std::string to_string(SchemeKind k)
{
    switch (k) {
    case SchemeKind::AdiFirstOrder:
        return "adi1";
    case SchemeKind::FivePoint:
        return "five-point";
    case SchemeKind::AdiSecondOrder:
        return "adi2";
    }
    return "unknown";
}

SchemeKind parse_scheme_kind(const std::string& s)
{
    if (s == "adi1" || s == "adi-first-order" || s == "AdiFirstOrder")
        return SchemeKind::AdiFirstOrder;
    if (s == "five-point" || s == "fivepoint" || s == "FivePoint")
        return SchemeKind::FivePoint;
    if (s == "adi2" || s == "adi-second-order" || s == "AdiSecondOrder")
        return SchemeKind::AdiSecondOrder;
    throw ConfigError("unknown scheme '" + s + "' (expected adi1|five-point|adi2)");
}

std::string to_string(SecondOrderStart s)
{
    return s == SecondOrderStart::FirstOrderStep ? "first-order" : "predictor-corrector";
}

SecondOrderStart parse_second_order_start(const std::string& s)
{
    if (s == "first-order")
        return SecondOrderStart::FirstOrderStep;
    if (s == "predictor-corrector")
        return SecondOrderStart::PredictorCorrector;
    throw ConfigError("unknown second-order start '" + s +
                      "' (expected first-order|predictor-corrector)");
}

void validate_config(const SchemeConfig& cfg, const GridSpec& g)
{
    if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon))
        throw ConfigError("scheme: epsilon must be positive");
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt))
        throw ConfigError("scheme: dt must be positive");
    if (!(cfg.cg_tol > 0.0))
        throw ConfigError("scheme: cg_tol must be positive");
    if (cfg.cg_maxiter < 0)
        throw ConfigError("scheme: cg_maxiter must be nonnegative");
    if (cfg.threads < 0)
        throw ConfigError("scheme: threads must be nonnegative");
    if (cfg.forcing && (!cfg.forcing->f1 || !cfg.forcing->f2))
        throw ConfigError("scheme: forcing needs both source functions");
    if (cfg.dirichlet) {
        if (g.periodic())
            throw ConfigError("scheme: Dirichlet closure requires a non-periodic grid");
        if (!cfg.dirichlet->rho || !cfg.dirichlet->c)
            throw ConfigError("scheme: Dirichlet closure needs rho and c boundary functions");
    }
}

namespace {

// Non-periodic y sweep that runs the Thomas recurrence on blocks of adjacent
// columns at once so every row access is contiguous. Per column the arithmetic
// matches thomas_solve_inplace exactly.
void solve_columns_batched(const LineOperator& op, double a, double b, const Field& rhs,
                           const Field* pins, int threads, Field& out)
{
    const GridSpec& g = rhs.grid();
    const int nxn = g.nodes_x();
    const int n = g.nodes_y();
    const int k0 = pins ? 1 : 0;
    const int m = pins ? n - 2 : n;
    const int col_lo = pins ? 1 : 0;
    const int col_hi = pins ? nxn - 1 : nxn;
    constexpr int block = 64;
    const int blocks = (col_hi - col_lo + block - 1) / block;
    const double lower = -b;
    const double upper = -b;

    parallel_for(blocks, threads, [&](int begin, int end) {
        std::vector<double> scratch(static_cast<std::size_t>(m) * block), pivot(block);
        for (int bl = begin; bl < end; ++bl) {
            const int c0 = col_lo + bl * block;
            const int w = std::min(block, col_hi - c0);
            auto at = [&](int r) { return static_cast<std::size_t>(k0 + r) * nxn + c0; };
            auto load = [&](int r, int c) {
                double x = rhs[at(r) + c];
                if (pins && r == 0)
                    x += b * (*pins)[static_cast<std::size_t>(c0 + c)];
                if (pins && r == m - 1)
                    x += b * (*pins)[static_cast<std::size_t>(n - 1) * nxn + c0 + c];
                return x;
            };
#ifndef NDEBUG
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < w; ++c) {
                    const std::size_t idx = at(r) + c;
                    const double main = a + b * op.weights[idx];
                    double offsum = 0.0;
                    if (r > 0)
                        offsum += std::abs(b) * op.scale[idx - nxn];
                    if (r + 1 < m)
                        offsum += std::abs(b) * op.scale[idx + nxn];
                    assert(main * op.scale[idx] - offsum > -1e-12 * main * op.scale[idx] &&
                           "line system lost weighted diagonal dominance");
                }
#endif
            for (int c = 0; c < w; ++c) {
                const std::size_t idx = at(0) + c;
                pivot[c] = a + b * op.weights[idx];
                if (pivot[c] == 0.0 || !std::isfinite(pivot[c]))
                    throw SingularSystemError("tridiagonal: zero pivot in row 0");
                out[idx] = load(0, c) / pivot[c];
            }
            for (int r = 1; r < m; ++r) {
                const std::size_t row = at(r);
                double* sc = scratch.data() + static_cast<std::size_t>(r) * block;
                for (int c = 0; c < w; ++c) {
                    sc[c] = upper / pivot[c];
                    pivot[c] = (a + b * op.weights[row + c]) - lower * sc[c];
                    out[row + c] = (load(r, c) - lower * out[row - nxn + c]) / pivot[c];
                }
                for (int c = 0; c < w; ++c)
                    if (pivot[c] == 0.0 || !std::isfinite(pivot[c]))
                        throw SingularSystemError("tridiagonal: zero pivot in row " +
                                                  std::to_string(r));
            }
            for (int r = m - 1; r-- > 0;) {
                const std::size_t row = at(r);
                const double* sc = scratch.data() + static_cast<std::size_t>(r + 1) * block;
                for (int c = 0; c < w; ++c)
                    out[row + c] -= sc[c] * out[row + nxn + c];
            }
        }
    });

    if (pins) {
        for (int i = 0; i < nxn; ++i) {
            out(i, 0) = (*pins)(i, 0);
            out(i, n - 1) = (*pins)(i, n - 1);
        }
        for (int j = 0; j < n; ++j) {
            out(0, j) = (*pins)(0, j);
            out(nxn - 1, j) = (*pins)(nxn - 1, j);
        }
    }
}

}  // namespace

Field solve_line_sweep(const LineOperator& op, double a, double b, const Field& rhs,
                       const Field* pins, int threads)
{
    const GridSpec& g = rhs.grid();
    if (!(op.weights.grid() == g) || (pins && !(pins->grid() == g)))
        throw ConfigError("line sweep: fields live on different grids");
    if (pins && g.periodic())
        throw ConfigError("line sweep: pinned ends need a non-periodic grid");

    const Direction d = op.direction;
    const int lines = line_count(g, d);
    const int n = line_length(g, d);
    Field out(g);
    if (d == Direction::Y && !g.periodic()) {
        solve_columns_batched(op, a, b, rhs, pins, threads, out);
        return out;
    }

    parallel_for(lines, threads, [&](int begin, int end) {
        std::vector<double> main(n), off(n, -b), x(n), scratch(3 * static_cast<std::size_t>(n));
        for (int l = begin; l < end; ++l) {
            if (pins && (l == 0 || l == lines - 1)) {
                for (int k = 0; k < n; ++k)
                    out[line_index(g, d, l, k)] = (*pins)[line_index(g, d, l, k)];
                continue;
            }
            const int k0 = pins ? 1 : 0;
            const int m = pins ? n - 2 : n;
            for (int r = 0; r < m; ++r) {
                const std::size_t idx = line_index(g, d, l, k0 + r);
                main[r] = a + b * op.weights[idx];
                x[r] = rhs[idx];
            }
            if (pins) {
                x[0] += b * (*pins)[line_index(g, d, l, 0)];
                x[m - 1] += b * (*pins)[line_index(g, d, l, n - 1)];
            }
#ifndef NDEBUG
            for (int r = 0; r < m; ++r) {
                const int k = k0 + r;
                const double sk = op.scale[line_index(g, d, l, k)];
                double offsum = 0.0;
                if (r > 0 || (!pins && g.periodic()))
                    offsum += std::abs(b) * op.scale[line_index(g, d, l, (k + n - 1) % n)];
                if (r + 1 < m || (!pins && g.periodic()))
                    offsum += std::abs(b) * op.scale[line_index(g, d, l, (k + 1) % n)];
                assert(main[r] * sk - offsum > -1e-12 * main[r] * sk &&
                       "line system lost weighted diagonal dominance");
            }
#endif
            std::span<double> xs(x.data(), static_cast<std::size_t>(m));
            std::span<const double> ms(main.data(), static_cast<std::size_t>(m));
            if (g.periodic())
                cyclic_thomas_solve_inplace(std::span<const double>(off.data(), m - 1), ms,
                                            std::span<const double>(off.data(), m - 1), -b, -b,
                                            xs, scratch);
            else
                thomas_solve_inplace(std::span<const double>(off.data(), m - 1), ms,
                                     std::span<const double>(off.data(), m - 1), xs, scratch);
            for (int r = 0; r < m; ++r)
                out[line_index(g, d, l, k0 + r)] = x[r];
            if (pins) {
                out[line_index(g, d, l, 0)] = (*pins)[line_index(g, d, l, 0)];
                out[line_index(g, d, l, n - 1)] = (*pins)[line_index(g, d, l, n - 1)];
            }
        }
    });
    return out;
}

Field step_concentration_adi(const State& state, const SchemeConfig& cfg, AdiWorkspace* ws)
{
    validate_state(state);
    const GridSpec& g = state.c.grid();
    validate_config(cfg, g);
    const double mx = cfg.mu_x(g) / cfg.epsilon;
    const double my = cfg.mu_y(g) / cfg.epsilon;
    const double k = cfg.dt / cfg.epsilon;

    Field rhs = map2(state.c, state.rho, [k](double c, double r) { return c + k * r; });
    if (cfg.forcing) {
        const Field f2 = sample_at(g, cfg.forcing->f2, state.t);
        for (std::size_t q = 0; q < rhs.size(); ++q)
            rhs[q] += k * f2[q];
    }

    const LineOperator lx = delta2_line_operator(g, Direction::X);
    const LineOperator ly = delta2_line_operator(g, Direction::Y);

    std::optional<Field> exact_next, star_pins;
    if (cfg.dirichlet) {
        exact_next = boundary_values(g, cfg.dirichlet->c, state.t + cfg.dt);
        star_pins = apply_shifted(ly, 1.0, -my, *exact_next);
    }
    Field cstar = solve_line_sweep(lx, 1.0, mx, rhs, star_pins ? &*star_pins : nullptr,
                                   cfg.threads);
    Field cnext = solve_line_sweep(ly, 1.0, my, cstar, exact_next ? &*exact_next : nullptr,
                                   cfg.threads);
    if (ws)
        ws->cstar = std::move(cstar);
    return cnext;
}

Field step_density_adi(const Field& rho_n, const Field& M_next, const SchemeConfig& cfg,
                       double t_n, AdiWorkspace* ws)
{
    if (!(rho_n.grid() == M_next.grid()))
        throw ConfigError("density step: rho and M live on different grids");
    const GridSpec& g = rho_n.grid();
    validate_config(cfg, g);
    if (rho_n.size() > 0 && rho_n.min() < -1e-12 * std::max(1.0, std::abs(rho_n.max())))
        warn(cfg, "density step called with negative density values");

    const LineOperator tx = tau_line_operator(M_next, Direction::X);
    const LineOperator ty = tau_line_operator(M_next, Direction::Y);
    const Field& s = tx.scale;

    Field rhs = rho_n;
    if (cfg.forcing) {
        const Field f1 = sample_at(g, cfg.forcing->f1, t_n);
        for (std::size_t q = 0; q < rhs.size(); ++q)
            rhs[q] += cfg.dt * f1[q];
    }
    for (std::size_t q = 0; q < rhs.size(); ++q)
        rhs[q] /= s[q];

    const double mx = cfg.mu_x(g);
    const double my = cfg.mu_y(g);
    std::optional<Field> rho_exact, h_exact, star_pins;
    if (cfg.dirichlet) {
        rho_exact = boundary_values(g, cfg.dirichlet->rho, t_n + cfg.dt);
        h_exact = map2(*rho_exact, s, [](double r, double sq) { return r / sq; });
        star_pins = apply_shifted(ty, 1.0, -my, *h_exact);
    }
    Field hstar =
        solve_line_sweep(tx, 1.0, mx, rhs, star_pins ? &*star_pins : nullptr, cfg.threads);
    Field h = solve_line_sweep(ty, 1.0, my, hstar, h_exact ? &*h_exact : nullptr, cfg.threads);

    Field rho = map2(h, s, [](double hv, double sq) { return hv * sq; });
    if (rho_exact)
        pin_boundary(rho, *rho_exact);
    if (ws) {
        ws->hstar = std::move(hstar);
        ws->h = std::move(h);
    }
    return rho;
}

State step_adi_first_order(const State& state, const SchemeConfig& cfg, AdiWorkspace* ws)
{
    State next;
    next.t = state.t + cfg.dt;
    next.c = step_concentration_adi(state, cfg, ws);
    require_finite(next.c, "concentration", next.t);
    Field M = exp_field(next.c);
    require_finite(M, "exp(concentration)", next.t);
    next.rho = step_density_adi(state.rho, M, cfg, state.t, ws);
    require_finite(next.rho, "density", next.t);
    if (ws)
        ws->M = std::move(M);
    return next;
}

State step_five_point(const State& state, const SchemeConfig& cfg, FivePointStats* stats)
{
    validate_state(state);
    const GridSpec& g = state.c.grid();
    validate_config(cfg, g);
    const double t_next = state.t + cfg.dt;
    const double k = cfg.dt / cfg.epsilon;
    const double mx = cfg.mu_x(g);
    const double my = cfg.mu_y(g);

    Field rhs_c = map2(state.c, state.rho, [k](double c, double r) { return c + k * r; });
    if (cfg.forcing) {
        const Field f2 = sample_at(g, cfg.forcing->f2, state.t);
        for (std::size_t q = 0; q < rhs_c.size(); ++q)
            rhs_c[q] += k * f2[q];
    }
    const LineOperator lx = delta2_line_operator(g, Direction::X);
    const LineOperator ly = delta2_line_operator(g, Direction::Y);
    std::optional<Field> c_exact;
    if (cfg.dirichlet)
        c_exact = boundary_values(g, cfg.dirichlet->c, t_next);

    State next;
    next.t = t_next;
    int it_c = 0;
    next.c = solve_unfactored(g, lx.weights, ly.weights, 1.0, mx / cfg.epsilon,
                              my / cfg.epsilon, rhs_c, c_exact ? &*c_exact : nullptr, cfg, it_c);
    require_finite(next.c, "concentration", t_next);

    const Field M = exp_field(next.c);
    require_finite(M, "exp(concentration)", t_next);
    const LineOperator tx = tau_line_operator(M, Direction::X);
    const LineOperator ty = tau_line_operator(M, Direction::Y);
    const Field& s = tx.scale;

    Field rhs_h = state.rho;
    if (cfg.forcing) {
        const Field f1 = sample_at(g, cfg.forcing->f1, state.t);
        for (std::size_t q = 0; q < rhs_h.size(); ++q)
            rhs_h[q] += cfg.dt * f1[q];
    }
    for (std::size_t q = 0; q < rhs_h.size(); ++q)
        rhs_h[q] /= s[q];

    std::optional<Field> rho_exact, h_exact;
    if (cfg.dirichlet) {
        rho_exact = boundary_values(g, cfg.dirichlet->rho, t_next);
        h_exact = map2(*rho_exact, s, [](double r, double sq) { return r / sq; });
    }
    int it_h = 0;
    Field h = solve_unfactored(g, tx.weights, ty.weights, 1.0, mx, my, rhs_h,
                               h_exact ? &*h_exact : nullptr, cfg, it_h);
    next.rho = map2(h, s, [](double hv, double sq) { return hv * sq; });
    if (rho_exact)
        pin_boundary(next.rho, *rho_exact);
    require_finite(next.rho, "density", t_next);

    if (stats) {
        stats->cg_iterations_c = it_c;
        stats->cg_iterations_h = it_h;
    }
    return next;
}

PositivityReport check_second_order_positivity(const Field& M_half, const SchemeConfig& cfg)
{
    const GridSpec& g = M_half.grid();
    const double mx = cfg.mu_x(g);
    const double my = cfg.mu_y(g);
    const LineOperator tx = tau_line_operator(M_half, Direction::X);
    const LineOperator ty = tau_line_operator(M_half, Direction::Y);

    PositivityReport rep;
    rep.margin_x = std::numeric_limits<double>::infinity();
    rep.margin_y = std::numeric_limits<double>::infinity();
    for (int j = 0; j < g.nodes_y(); ++j)
        for (int i = 0; i < g.nodes_x(); ++i) {
            const double ax = 1.0 - 0.5 * mx * tx.weights(i, j);
            const double ay = 1.0 - 0.5 * my * ty.weights(i, j);
            if (ax < rep.margin_x) {
                rep.margin_x = ax;
                rep.argmin_x_i = i;
                rep.argmin_x_j = j;
            }
            if (ay < rep.margin_y) {
                rep.margin_y = ay;
                rep.argmin_y_i = i;
                rep.argmin_y_j = j;
            }
        }
    rep.margin_epsilon = cfg.epsilon - std::max(mx, my);
    rep.density_guaranteed = rep.margin_x >= 0.0 && rep.margin_y >= 0.0;
    rep.guaranteed = rep.density_guaranteed && rep.margin_epsilon >= 0.0;
    return rep;
}

State step_adi_second_order(const State& state, AdiWorkspace& ws, const SchemeConfig& cfg)
{
    validate_state(state);
    const GridSpec& g = state.c.grid();
    validate_config(cfg, g);

    if (!ws.rho_prev || !(ws.rho_prev->grid() == g)) {
        if (!ws.allow_bootstrap)
            throw StateError("second-order step needs rho at the previous level");
        State predicted = step_adi_first_order(state, cfg, &ws);
        if (cfg.start == SecondOrderStart::FirstOrderStep) {
            ws.rho_prev = state.rho;
            return predicted;
        }
        // 2 rho^n - rho_prev then equals the predicted rho^{n+1}.
        ws.rho_prev = map2(state.rho, predicted.rho, [](double r, double p) { return 2.0 * r - p; });
    }

    const double t_n = state.t;
    const double t_next = t_n + cfg.dt;
    const double eps = cfg.epsilon;
    const double hmx = 0.5 * cfg.mu_x(g);
    const double hmy = 0.5 * cfg.mu_y(g);
    const double hdt = 0.5 * cfg.dt;

    const LineOperator lx = delta2_line_operator(g, Direction::X);
    const LineOperator ly = delta2_line_operator(g, Direction::Y);

    const Field rho_tilde =
        map2(state.rho, *ws.rho_prev, [](double r, double rp) { return 2.0 * r - rp; });

    std::optional<Field> f2_n, f2_next, f1_n, f1_next;
    if (cfg.forcing) {
        f2_n = sample_at(g, cfg.forcing->f2, t_n);
        f2_next = sample_at(g, cfg.forcing->f2, t_next);
        f1_n = sample_at(g, cfg.forcing->f1, t_n);
        f1_next = sample_at(g, cfg.forcing->f1, t_next);
    }

    // Concentration: x-implicit half step, then y-implicit half step.
    Field rhs1 = apply_shifted(ly, eps, hmy, state.c);
    for (std::size_t q = 0; q < rhs1.size(); ++q)
        rhs1[q] += hdt * (state.rho[q] + (f2_n ? (*f2_n)[q] : 0.0));

    std::optional<Field> c_half_pins, c_exact_next;
    if (cfg.dirichlet) {
        const auto& cx = cfg.dirichlet->c;
        const auto& rx = cfg.dirichlet->rho;
        const double dy = g.dy;
        // Boundary values of c^{n+1/2} consistent with both half-step equations.
        c_half_pins = sample_near_boundary(g, 0, [&](double x, double y) {
            auto d2 = [&](double t) {
                return cx(x, y + dy, t) - 2.0 * cx(x, y, t) + cx(x, y - dy, t);
            };
            const double cn = cx(x, y, t_n);
            const double cn1 = cx(x, y, t_next);
            const double f2n = cfg.forcing ? cfg.forcing->f2(x, y, t_n) : 0.0;
            const double f2n1 = cfg.forcing ? cfg.forcing->f2(x, y, t_next) : 0.0;
            const double sn = hdt * (rx(x, y, t_n) + f2n);
            const double sn1 = hdt * (rx(x, y, t_next) + f2n1);
            return 0.5 * (cn + cn1) + hmy * (d2(t_n) - d2(t_next)) / (2.0 * eps) +
                   (sn - sn1) / (2.0 * eps);
        });
        c_exact_next = boundary_values(g, cx, t_next);
    }
    Field c_half = solve_line_sweep(lx, eps, hmx, rhs1, c_half_pins ? &*c_half_pins : nullptr,
                                    cfg.threads);
    require_finite(c_half, "half-level concentration", t_next);

    Field rhs2 = apply_shifted(lx, eps, hmx, c_half);
    for (std::size_t q = 0; q < rhs2.size(); ++q)
        rhs2[q] += hdt * (rho_tilde[q] + (f2_next ? (*f2_next)[q] : 0.0));

    State next;
    next.t = t_next;
    next.c = solve_line_sweep(ly, eps, hmy, rhs2, c_exact_next ? &*c_exact_next : nullptr,
                              cfg.threads);
    require_finite(next.c, "concentration", t_next);

    // Density in h = rho / sqrt(M^{n+1/2}).
    Field M_half = exp_field(c_half);
    require_finite(M_half, "exp(half-level concentration)", t_next);
    const LineOperator tx = tau_line_operator(M_half, Direction::X);
    const LineOperator ty = tau_line_operator(M_half, Direction::Y);
    const Field& s = tx.scale;

    const PositivityReport rep = check_second_order_positivity(M_half, cfg);
    if (!rep.guaranteed && !ws.warned) {
        std::ostringstream os;
        os << "second-order positivity conditions not met at t=" << t_n
           << " (margins x=" << rep.margin_x << ", y=" << rep.margin_y
           << ", epsilon=" << rep.margin_epsilon << ")";
        warn(cfg, os.str());
        ws.warned = true;
    }
    ws.last_positivity = rep;

    const Field h_n = map2(state.rho, s, [](double r, double sq) { return r / sq; });
    Field rhs3 = apply_shifted(ty, 1.0, hmy, h_n);
    if (f1_n)
        for (std::size_t q = 0; q < rhs3.size(); ++q)
            rhs3[q] += hdt * (*f1_n)[q] / s[q];

    std::optional<Field> h_half_pins, h_exact_next;
    if (cfg.dirichlet) {
        const Field rho_exact_next = boundary_values(g, cfg.dirichlet->rho, t_next);
        h_exact_next = map2(rho_exact_next, s, [](double r, double sq) { return r / sq; });
        const Field diff = map2(h_n, *h_exact_next, [](double a, double b) { return a - b; });
        const Field ydiff = apply_shifted(ty, 0.0, hmy, diff);
        h_half_pins = Field(g);
        for (std::size_t q = 0; q < g.size(); ++q) {
            const double fn = f1_n ? hdt * (*f1_n)[q] / s[q] : 0.0;
            const double fn1 = f1_next ? hdt * (*f1_next)[q] / s[q] : 0.0;
            (*h_half_pins)[q] = 0.5 * (h_n[q] + (*h_exact_next)[q] + ydiff[q] + fn - fn1);
        }
    }
    Field h_half = solve_line_sweep(tx, 1.0, hmx, rhs3, h_half_pins ? &*h_half_pins : nullptr,
                                    cfg.threads);

    Field rhs4 = apply_shifted(tx, 1.0, hmx, h_half);
    if (f1_next)
        for (std::size_t q = 0; q < rhs4.size(); ++q)
            rhs4[q] += hdt * (*f1_next)[q] / s[q];
    Field h_next = solve_line_sweep(ty, 1.0, hmy, rhs4, h_exact_next ? &*h_exact_next : nullptr,
                                    cfg.threads);

    next.rho = map2(h_next, s, [](double hv, double sq) { return hv * sq; });
    if (cfg.dirichlet)
        pin_boundary(next.rho, boundary_values(g, cfg.dirichlet->rho, t_next));
    require_finite(next.rho, "density", t_next);

    ws.rho_half = map2(h_half, s, [](double hv, double sq) { return hv * sq; });
    ws.c_half = std::move(c_half);
    ws.M_half = std::move(M_half);
    ws.h = std::move(h_next);
    ws.rho_prev = state.rho;
    return next;
}

Integrator::Integrator(SchemeConfig cfg, const GridSpec& grid) : cfg_(std::move(cfg))
{
    validate_config(cfg_, grid);
}

State Integrator::step(const State& s)
{
    switch (cfg_.scheme) {
    case SchemeKind::AdiFirstOrder:
        return step_adi_first_order(s, cfg_, &ws_);
    case SchemeKind::FivePoint:
        return step_five_point(s, cfg_, &stats_);
    case SchemeKind::AdiSecondOrder:
        return step_adi_second_order(s, ws_, cfg_);
    }
    throw ConfigError("unknown scheme");
}

void Integrator::reset()
{
    const bool bootstrap = ws_.allow_bootstrap;
    ws_ = AdiWorkspace{};
    ws_.allow_bootstrap = bootstrap;
    stats_ = FivePointStats{};
}

}  // namespace ksadi
