#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

namespace ksadi {

/// Tridiagonal system A x = rhs.
///
/// Row k reads lower[k-1] x[k-1] + main[k] x[k] + upper[k] x[k+1].
/// lower and upper have length m-1.
struct TridiagSystem {
    std::vector<double> lower;
    std::vector<double> main;
    std::vector<double> upper;
    std::vector<double> rhs;

    std::size_t size() const noexcept { return main.size(); }
};

/// Tridiagonal system with wrap-around couplings:
/// corner_lower = A(m-1, 0), corner_upper = A(0, m-1).
struct CyclicTridiagSystem {
    std::vector<double> lower;
    std::vector<double> main;
    std::vector<double> upper;
    std::vector<double> rhs;
    double corner_lower = 0.0;
    double corner_upper = 0.0;

    std::size_t size() const noexcept { return main.size(); }
};

/// One grid line's system: plain for Neumann lines, cyclic for periodic ones.
using LineSystem = std::variant<TridiagSystem, CyclicTridiagSystem>;

/// Thomas algorithm, O(m). Throws SingularSystemError on a zero pivot.
std::vector<double> solve_tridiagonal(const TridiagSystem& sys);

/// Sherman-Morrison correction of two Thomas solves. Requires m >= 3.
std::vector<double> solve_cyclic_tridiagonal(const CyclicTridiagSystem& sys);

std::vector<double> solve_line(const LineSystem& sys);

/// In-place Thomas kernel. `x` holds the right-hand side on entry and the
/// solution on exit; `scratch` needs at least m entries.
void thomas_solve_inplace(std::span<const double> lower, std::span<const double> main,
                          std::span<const double> upper, std::span<double> x,
                          std::span<double> scratch);

/// In-place cyclic kernel; `scratch` needs at least 3*m entries.
void cyclic_thomas_solve_inplace(std::span<const double> lower, std::span<const double> main,
                                 std::span<const double> upper, double corner_lower,
                                 double corner_upper, std::span<double> x,
                                 std::span<double> scratch);

/// y = A x for a linear operator given only by its action.
using LinearOperator = std::function<void(std::span<const double> x, std::span<double> y)>;

struct CgResult {
    std::vector<double> x;
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Matrix-free conjugate gradient for symmetric positive definite operators.
///
/// Stops when ||b - A x|| <= tol * ||b||. The initial guess defaults to zero.
/// Throws IterationLimitError (carrying the final residual)
/// when maxiter is exhausted.
CgResult solve_cg(const LinearOperator& apply, std::span<const double> rhs, double tol,
                  int maxiter, std::span<const double> x0 = {});

/// Row-major dense matrix; only used to build test oracles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::vector<double> multiply(std::span<const double> x) const;
    DenseMatrix operator*(const DenseMatrix& rhs) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Column k = apply(e_k).
DenseMatrix dense_from_operator(const LinearOperator& apply, std::size_t m);

DenseMatrix dense_from_tridiag(const TridiagSystem& sys);
DenseMatrix dense_from_tridiag(const CyclicTridiagSystem& sys);
DenseMatrix dense_from_line(const LineSystem& sys);

}  // namespace ksadi
