#include "ksadi/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ksadi/errors.hpp"

namespace ksadi {

namespace {

std::string sampling_message(int i, int j, double x, double y)
{
    std::ostringstream os;
    os << "sampled function is not finite at node (" << i << ", " << j << ") = (" << x
       << ", " << y << ")";
    return os.str();
}

std::string iteration_message(int iterations, double residual)
{
    std::ostringstream os;
    os << "conjugate gradient stopped after " << iterations
       << " iterations with relative residual " << residual;
    return os.str();
}

}  // namespace

SamplingError::SamplingError(int i, int j, double x, double y)
    : std::runtime_error(sampling_message(i, j, x, y)), i_(i), j_(j)
{
}

IterationLimitError::IterationLimitError(int iterations, double relative_residual)
    : std::runtime_error(iteration_message(iterations, relative_residual)),
      iterations_(iterations),
      residual_(relative_residual)
{
}

double GridSpec::x(int i) const noexcept
{
    return std::lerp(xmin, xmax, static_cast<double>(i) / static_cast<double>(nx));
}

double GridSpec::y(int j) const noexcept
{
    return std::lerp(ymin, ymax, static_cast<double>(j) / static_cast<double>(ny));
}

GridSpec make_grid(double xmin, double xmax, double ymin, double ymax, int nx, int ny,
                   BoundaryKind bc)
{
    if (!std::isfinite(xmin) || !std::isfinite(xmax) || !(xmax > xmin))
        throw ConfigError("grid: require finite xmax > xmin");
    if (!std::isfinite(ymin) || !std::isfinite(ymax) || !(ymax > ymin))
        throw ConfigError("grid: require finite ymax > ymin");
    if (nx < 3 || ny < 3)
        throw ConfigError("grid: need at least 3 intervals per axis");

    GridSpec g;
    g.xmin = xmin;
    g.xmax = xmax;
    g.ymin = ymin;
    g.ymax = ymax;
    g.nx = nx;
    g.ny = ny;
    g.bc = bc;
    g.dx = (xmax - xmin) / nx;
    g.dy = (ymax - ymin) / ny;
    return g;
}

Field::Field(const GridSpec& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

Field::Field(const GridSpec& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values))
{
    if (values_.size() != grid_.size())
        throw ConfigError("field: value count does not match grid node ownership");
}

double Field::min() const
{
    return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double Field::max() const
{
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

bool Field::all_finite() const noexcept
{
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
}

Field sample_field(const GridSpec& grid, const SpatialFn& f)
{
    Field out(grid);
    for (int j = 0; j < grid.nodes_y(); ++j) {
        const double y = grid.y(j);
        for (int i = 0; i < grid.nodes_x(); ++i) {
            const double x = grid.x(i);
            const double v = f(x, y);
            if (!std::isfinite(v))
                throw SamplingError(i, j, x, y);
            out(i, j) = v;
        }
    }
    return out;
}

void validate_state(const State& s)
{
    if (!(s.rho.grid() == s.c.grid()))
        throw StateError("state: rho and c live on different grids");
    if (s.rho.size() != s.rho.grid().size() || s.c.size() != s.c.grid().size())
        throw StateError("state: field shape does not match its grid");
    if (!(s.t >= 0.0))
        throw StateError("state: time must be nonnegative");
}

}  // namespace ksadi
