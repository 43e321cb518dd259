#include "ksadi/linalg.hpp"

#include <cmath>
#include <numeric>

#include "ksadi/errors.hpp"

namespace ksadi {

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void check_shape(std::size_t lower, std::size_t main, std::size_t upper, std::size_t rhs)
{
    if (main == 0 || lower + 1 != main || upper + 1 != main || rhs != main)
        throw ConfigError("tridiagonal: inconsistent diagonal/rhs lengths");
}

}  // namespace

void thomas_solve_inplace(std::span<const double> lower, std::span<const double> main,
                          std::span<const double> upper, std::span<double> x,
                          std::span<double> scratch)
{
    const std::size_t m = main.size();
    if (m == 0)
        return;

    double pivot = main[0];
    if (pivot == 0.0 || !std::isfinite(pivot))
        throw SingularSystemError("tridiagonal: zero pivot in row 0");
    x[0] /= pivot;
    for (std::size_t k = 1; k < m; ++k) {
        scratch[k] = upper[k - 1] / pivot;
        pivot = main[k] - lower[k - 1] * scratch[k];
        if (pivot == 0.0 || !std::isfinite(pivot))
            throw SingularSystemError("tridiagonal: zero pivot in row " + std::to_string(k));
        x[k] = (x[k] - lower[k - 1] * x[k - 1]) / pivot;
    }
    for (std::size_t k = m - 1; k-- > 0;)
        x[k] -= scratch[k + 1] * x[k + 1];
}

void cyclic_thomas_solve_inplace(std::span<const double> lower, std::span<const double> main,
                                 std::span<const double> upper, double corner_lower,
                                 double corner_upper, std::span<double> x,
                                 std::span<double> scratch)
{
    const std::size_t m = main.size();
    if (m < 3)
        throw ConfigError("cyclic tridiagonal: need m >= 3");

    auto modified = scratch.subspan(0, m);
    auto z = scratch.subspan(m, m);
    auto work = scratch.subspan(2 * m, m);

    // A = T + u v^T with u = (gamma, 0, .., corner_lower), v = (1, 0, .., corner_upper/gamma).
    const double gamma = main[0] != 0.0 ? -main[0] : 1.0;
    std::copy(main.begin(), main.end(), modified.begin());
    modified[0] = main[0] - gamma;
    modified[m - 1] = main[m - 1] - corner_lower * corner_upper / gamma;

    thomas_solve_inplace(lower, modified, upper, x, work);

    std::fill(z.begin(), z.end(), 0.0);
    z[0] = gamma;
    z[m - 1] = corner_lower;
    thomas_solve_inplace(lower, modified, upper, z, work);

    const double numer = x[0] + corner_upper * x[m - 1] / gamma;
    if (numer == 0.0)
        return;
    const double denom = 1.0 + z[0] + corner_upper * z[m - 1] / gamma;
    const double denom_scale = 1.0 + std::abs(z[0]) + std::abs(corner_upper * z[m - 1] / gamma);
    if (!std::isfinite(denom) || std::abs(denom) <= 1e-13 * denom_scale)
        throw SingularSystemError("cyclic tridiagonal: singular rank-one correction");
    const double factor = numer / denom;
    for (std::size_t k = 0; k < m; ++k)
        x[k] -= factor * z[k];
}

std::vector<double> solve_tridiagonal(const TridiagSystem& sys)
{
    check_shape(sys.lower.size(), sys.main.size(), sys.upper.size(), sys.rhs.size());
    std::vector<double> x = sys.rhs;
    std::vector<double> scratch(x.size());
    thomas_solve_inplace(sys.lower, sys.main, sys.upper, x, scratch);
    return x;
}

std::vector<double> solve_cyclic_tridiagonal(const CyclicTridiagSystem& sys)
{
    check_shape(sys.lower.size(), sys.main.size(), sys.upper.size(), sys.rhs.size());
    std::vector<double> x = sys.rhs;
    std::vector<double> scratch(3 * x.size());
    cyclic_thomas_solve_inplace(sys.lower, sys.main, sys.upper, sys.corner_lower,
                                sys.corner_upper, x, scratch);
    return x;
}

std::vector<double> solve_line(const LineSystem& sys)
{
    return std::visit(
        [](const auto& s) -> std::vector<double> {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, TridiagSystem>)
                return solve_tridiagonal(s);
            else
                return solve_cyclic_tridiagonal(s);
        },
        sys);
}

CgResult solve_cg(const LinearOperator& apply, std::span<const double> rhs, double tol,
                  int maxiter, std::span<const double> x0)
{
    if (!(tol > 0.0))
        throw ConfigError("cg: tolerance must be positive");
    if (maxiter <= 0)
        throw ConfigError("cg: maxiter must be positive");
    const std::size_t n = rhs.size();
    if (!x0.empty() && x0.size() != n)
        throw ConfigError("cg: initial guess has the wrong length");

    CgResult out;
    out.x.assign(n, 0.0);
    if (!x0.empty())
        std::copy(x0.begin(), x0.end(), out.x.begin());

    const double bnorm = std::sqrt(dot(rhs, rhs));
    if (bnorm == 0.0) {
        std::fill(out.x.begin(), out.x.end(), 0.0);
        return out;
    }

    std::vector<double> r(n), p(n), ap(n);
    apply(out.x, ap);
    for (std::size_t k = 0; k < n; ++k)
        r[k] = rhs[k] - ap[k];
    double rr = dot(r, r);
    out.relative_residual = std::sqrt(rr) / bnorm;
    if (out.relative_residual <= tol)
        return out;

    p = r;
    for (int it = 1; it <= maxiter; ++it) {
        apply(p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0))
            throw DomainError("cg: operator is not positive definite");
        const double alpha = rr / pap;
        for (std::size_t k = 0; k < n; ++k) {
            out.x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        const double rr_new = dot(r, r);
        out.iterations = it;
        out.relative_residual = std::sqrt(rr_new) / bnorm;
        if (out.relative_residual <= tol)
            return out;
        const double beta = rr_new / rr;
        for (std::size_t k = 0; k < n; ++k)
            p[k] = r[k] + beta * p[k];
        rr = rr_new;
    }
    throw IterationLimitError(maxiter, out.relative_residual);
}

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const
{
    std::vector<double> y(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols_; ++c)
            acc += (*this)(r, c) * x[c];
        y[r] = acc;
    }
    return y;
}

DenseMatrix DenseMatrix::operator*(const DenseMatrix& rhs) const
{
    if (cols_ != rhs.rows_)
        throw ConfigError("dense: shape mismatch in product");
    DenseMatrix out(rows_, rhs.cols_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t k = 0; k < cols_; ++k) {
            const double a = (*this)(r, k);
            for (std::size_t c = 0; c < rhs.cols_; ++c)
                out(r, c) += a * rhs(k, c);
        }
    return out;
}

DenseMatrix dense_from_operator(const LinearOperator& apply, std::size_t m)
{
    DenseMatrix out(m, m);
    std::vector<double> e(m, 0.0), col(m);
    for (std::size_t k = 0; k < m; ++k) {
        e[k] = 1.0;
        apply(e, col);
        for (std::size_t r = 0; r < m; ++r)
            out(r, k) = col[r];
        e[k] = 0.0;
    }
    return out;
}

DenseMatrix dense_from_tridiag(const TridiagSystem& sys)
{
    const std::size_t m = sys.size();
    DenseMatrix a(m, m);
    for (std::size_t k = 0; k < m; ++k) {
        a(k, k) = sys.main[k];
        if (k > 0)
            a(k, k - 1) = sys.lower[k - 1];
        if (k + 1 < m)
            a(k, k + 1) = sys.upper[k];
    }
    return a;
}

DenseMatrix dense_from_tridiag(const CyclicTridiagSystem& sys)
{
    TridiagSystem plain{sys.lower, sys.main, sys.upper, sys.rhs};
    DenseMatrix a = dense_from_tridiag(plain);
    const std::size_t m = sys.size();
    a(m - 1, 0) += sys.corner_lower;
    a(0, m - 1) += sys.corner_upper;
    return a;
}

DenseMatrix dense_from_line(const LineSystem& sys)
{
    return std::visit([](const auto& s) { return dense_from_tridiag(s); }, sys);
}

}  // namespace ksadi
