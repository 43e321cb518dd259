#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ksadi {

enum class BoundaryKind {
    Periodic,          ///< owns nodes 0..n-1, index n wraps to 0
    NeumannSymmetric,  ///< owns nodes 0..n, zero flux through the outer half points
};

enum class Direction { X, Y };

/// Rectangular vertex-centred grid.
///
/// `nx`/`ny` count intervals. A periodic grid drops the duplicated right/top
/// nodes, so it owns nx*ny nodes; a Neumann grid owns (nx+1)*(ny+1).
struct GridSpec {
    double xmin = 0.0;
    double xmax = 1.0;
    double ymin = 0.0;
    double ymax = 1.0;
    int nx = 0;
    int ny = 0;
    BoundaryKind bc = BoundaryKind::Periodic;
    double dx = 0.0;
    double dy = 0.0;

    bool periodic() const noexcept { return bc == BoundaryKind::Periodic; }

    /// Owned node counts along x and y.
    int nodes_x() const noexcept { return periodic() ? nx : nx + 1; }
    int nodes_y() const noexcept { return periodic() ? ny : ny + 1; }
    int nodes(Direction d) const noexcept { return d == Direction::X ? nodes_x() : nodes_y(); }
    std::size_t size() const noexcept
    {
        return static_cast<std::size_t>(nodes_x()) * static_cast<std::size_t>(nodes_y());
    }

    /// Node coordinates. Computed as an affine map of i/nx so that node nx
    /// lands on xmax exactly.
    double x(int i) const noexcept;
    double y(int j) const noexcept;

    /// Row-major flat index: rows are fixed j, i is contiguous.
    std::size_t index(int i, int j) const noexcept
    {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nodes_x()) +
               static_cast<std::size_t>(i);
    }

    double spacing(Direction d) const noexcept { return d == Direction::X ? dx : dy; }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Validates the domain and returns a grid with derived spacings.
/// Throws ConfigError on a degenerate domain or fewer than 3 intervals.
GridSpec make_grid(double xmin, double xmax, double ymin, double ymax, int nx, int ny,
                   BoundaryKind bc);

/// Nodal scalar field. Values are stored row by row (fixed j, i contiguous).
class Field {
public:
    Field() = default;
    explicit Field(const GridSpec& grid, double fill = 0.0);
    Field(const GridSpec& grid, std::vector<double> values);

    const GridSpec& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }

    double& operator()(int i, int j) noexcept { return values_[grid_.index(i, j)]; }
    double operator()(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }
    double& operator[](std::size_t k) noexcept { return values_[k]; }
    double operator[](std::size_t k) const noexcept { return values_[k]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    double min() const;
    double max() const;
    bool all_finite() const noexcept;

private:
    GridSpec grid_{};
    std::vector<double> values_;
};

/// Density and concentration at one time level.
struct State {
    Field rho;
    Field c;
    double t = 0.0;
};

using SpatialFn = std::function<double(double x, double y)>;
using SpaceTimeFn = std::function<double(double x, double y, double t)>;

/// values(i, j) = f(x_i, y_j). Throws SamplingError naming the node when f
/// returns a non-finite value.
Field sample_field(const GridSpec& grid, const SpatialFn& f);

/// Checks that rho and c share a grid and t >= 0; throws StateError otherwise.
void validate_state(const State& s);

}  // namespace ksadi
