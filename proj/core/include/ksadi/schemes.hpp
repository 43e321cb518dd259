#pragma once

#include <functional>
#include <optional>
#include <string>

#include "ksadi/grid.hpp"
#include "ksadi/operators.hpp"

namespace ksadi {

enum class SchemeKind { AdiFirstOrder, FivePoint, AdiSecondOrder };

std::string to_string(SchemeKind k);
/// Accepts "adi1", "five-point", "adi2" (and the enum spellings). ConfigError otherwise.
SchemeKind parse_scheme_kind(const std::string& s);

/// Source terms added to the density (f1) and concentration (f2) equations.
struct Forcing {
    SpaceTimeFn f1;
    SpaceTimeFn f2;
};

/// Time-dependent boundary values for manufactured runs. Only valid on
/// Neumann-layout grids; boundary nodes become pinned unknowns.
struct DirichletData {
    SpaceTimeFn rho;
    SpaceTimeFn c;
};

/// How the second-order scheme obtains rho^{n-1} on its first step.
enum class SecondOrderStart {
    /// The first-order step result is taken as rho^1.
    FirstOrderStep,
    /// A first-order step predicts rho^1, which then stands in for the
    /// extrapolated density in a regular second-order step.
    PredictorCorrector,
};

std::string to_string(SecondOrderStart s);
SecondOrderStart parse_second_order_start(const std::string& s);

struct SchemeConfig {
    double epsilon = 1.0;
    double dt = 0.0;
    SchemeKind scheme = SchemeKind::AdiFirstOrder;
    double cg_tol = 1e-10;
    int cg_maxiter = 0;  ///< 0 selects 10 * (number of unknowns)
    std::optional<Forcing> forcing;
    std::optional<DirichletData> dirichlet;
    int threads = 0;  ///< line-sweep worker threads; 0 or 1 is sequential
    SecondOrderStart start = SecondOrderStart::PredictorCorrector;
    /// Receives warnings (second-order positivity conditions, negative input
    /// density). Unset means std::cerr.
    std::function<void(const std::string&)> on_warning;

    double mu_x(const GridSpec& g) const noexcept { return dt / (g.dx * g.dx); }
    double mu_y(const GridSpec& g) const noexcept { return dt / (g.dy * g.dy); }
};

/// Throws ConfigError for epsilon/dt/cg_tol <= 0, negative counts, or a
/// Dirichlet closure on a periodic grid.
void validate_config(const SchemeConfig& cfg, const GridSpec& g);

/// Sufficient positivity conditions of the second-order scheme for one M^{n+1/2}.
struct PositivityReport {
    double margin_x = 1.0;  ///< min over nodes of 1 - (mu_x/2) w_x
    double margin_y = 1.0;
    double margin_epsilon = 0.0;  ///< epsilon - max(mu_x, mu_y)
    int argmin_x_i = 0, argmin_x_j = 0;
    int argmin_y_i = 0, argmin_y_j = 0;
    bool density_guaranteed = true;
    bool guaranteed = true;
};

PositivityReport check_second_order_positivity(const Field& M_half, const SchemeConfig& cfg);

/// Intermediate fields of the ADI steppers. The second-order scheme keeps
/// rho^{n-1} here between steps.
struct AdiWorkspace {
    std::optional<Field> M;
    std::optional<Field> h;
    std::optional<Field> cstar;
    std::optional<Field> hstar;
    std::optional<Field> c_half;
    std::optional<Field> rho_half;
    std::optional<Field> M_half;
    std::optional<Field> rho_prev;
    /// Take one first-order step when rho_prev is missing.
    bool allow_bootstrap = true;
    std::optional<PositivityReport> last_positivity;
    bool warned = false;
};

struct FivePointStats {
    int cg_iterations_c = 0;
    int cg_iterations_h = 0;
};

/// Solves (a - b L) x = rhs along every line of op.direction.
///
/// With `pins`, the two end nodes of each line and all nodes of the two
/// boundary lines take their values from *pins, and only interior unknowns
/// are solved.
Field solve_line_sweep(const LineOperator& op, double a, double b, const Field& rhs,
                       const Field* pins = nullptr, int threads = 0);

/// First-order factored concentration update from state.t to state.t + dt.
Field step_concentration_adi(const State& state, const SchemeConfig& cfg,
                             AdiWorkspace* ws = nullptr);

/// First-order factored density update. t_n is the time level of rho_n.
Field step_density_adi(const Field& rho_n, const Field& M_next, const SchemeConfig& cfg,
                       double t_n, AdiWorkspace* ws = nullptr);

State step_adi_first_order(const State& state, const SchemeConfig& cfg,
                           AdiWorkspace* ws = nullptr);

/// Unfactored implicit step; both systems solved with matrix-free CG.
State step_five_point(const State& state, const SchemeConfig& cfg,
                      FivePointStats* stats = nullptr);

/// Crank-Nicolson-like additive ADI step. Uses ws.rho_prev for the density
/// extrapolation; without it, starts as selected by cfg.start or throws
/// StateError when ws.allow_bootstrap is false. Updates ws.rho_prev.
State step_adi_second_order(const State& state, AdiWorkspace& ws, const SchemeConfig& cfg);

/// Dispatches on cfg.scheme and carries the second-order history.
class Integrator {
public:
    Integrator(SchemeConfig cfg, const GridSpec& grid);

    State step(const State& s);

    const SchemeConfig& config() const noexcept { return cfg_; }
    const AdiWorkspace& workspace() const noexcept { return ws_; }
    const FivePointStats& five_point_stats() const noexcept { return stats_; }
    void reset();

private:
    SchemeConfig cfg_;
    AdiWorkspace ws_;
    FivePointStats stats_;
};

}  // namespace ksadi
