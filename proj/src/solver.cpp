#include <cmath>
#include <optional>

#include <Eigen/SparseLU>

#include "robin/errors.hpp"
#include "robin/linalg.hpp"

namespace robin {
namespace {

/// ILU(0) on the sparsity pattern of a CSR matrix.
class Ilu0 {
public:
    explicit Ilu0(const ComplexSparseMatrix& a)
        : n_(a.rows()), off_(a.row_offsets()), col_(a.col_indices()), val_(a.values()), diag_(n_, -1)
    {
        std::vector<Index> pos(static_cast<std::size_t>(n_), -1);
        for (Index i = 0; i < n_; ++i) {
            for (Index p = off_[i]; p < off_[i + 1]; ++p) pos[col_[p]] = p;
            for (Index p = off_[i]; p < off_[i + 1] && col_[p] < i; ++p) {
                const Index k = col_[p];
                if (diag_[k] < 0 || val_[diag_[k]] == cplx(0.0)) throw SingularPencilError("ILU(0): zero pivot");
                val_[p] /= val_[diag_[k]];
                for (Index q = diag_[k] + 1; q < off_[k + 1]; ++q) {
                    const Index target = pos[col_[q]];
                    if (target >= 0) val_[target] -= val_[p] * val_[q];
                }
            }
            for (Index p = off_[i]; p < off_[i + 1]; ++p) {
                if (col_[p] == i) diag_[i] = p;
                pos[col_[p]] = -1;
            }
            if (diag_[i] < 0 || val_[diag_[i]] == cplx(0.0)) throw SingularPencilError("ILU(0): zero pivot");
        }
    }

    Vec apply(const Vec& b) const
    {
        Vec x = b;
        for (Index i = 0; i < n_; ++i)
            for (Index p = off_[i]; p < diag_[i]; ++p) x[i] -= val_[p] * x[col_[p]];
        for (Index i = n_ - 1; i >= 0; --i) {
            for (Index p = diag_[i] + 1; p < off_[i + 1]; ++p) x[i] -= val_[p] * x[col_[p]];
            x[i] /= val_[diag_[i]];
        }
        return x;
    }

private:
    Index n_;
    std::vector<Index> off_;
    std::vector<Index> col_;
    std::vector<cplx> val_;
    std::vector<Index> diag_;
};

/// Right-preconditioned restarted GMRES.
Vec gmres(const ComplexSparseMatrix& a, const Ilu0& precond, const Vec& b, double tol, int max_iter, int restart)
{
    const Index n = a.rows();
    const double bnorm = b.norm();
    Vec x = Vec::Zero(n);
    if (bnorm == 0.0) return x;
    int iterations = 0;
    const int m = std::max(1, restart);
    Eigen::MatrixXcd V(n, m + 1);
    Eigen::MatrixXcd Z(n, m);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
    std::vector<cplx> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m));
    double best = std::numeric_limits<double>::infinity();
    int stalled = 0;
    while (iterations < max_iter) {
        Vec r = b - a.multiply(x);
        double beta = r.norm();
        if (beta <= tol * bnorm) return x;
        if (beta < 0.999 * best) {
            best = beta;
            stalled = 0;
        } else if (++stalled >= 3) {
            break;
        }
        V.col(0) = r / beta;
        H.setZero();
        Eigen::VectorXcd g = Eigen::VectorXcd::Zero(m + 1);
        g[0] = beta;
        int j = 0;
        for (; j < m && iterations < max_iter; ++j, ++iterations) {
            Z.col(j) = precond.apply(V.col(j));
            Vec w = a.multiply(Z.col(j));
            for (int i = 0; i <= j; ++i) {
                H(i, j) = V.col(i).dot(w);
                w -= H(i, j) * V.col(i);
            }
            H(j + 1, j) = w.norm();
            if (std::abs(H(j + 1, j)) > 0.0) V.col(j + 1) = w / H(j + 1, j);
            for (int i = 0; i < j; ++i) {
                const cplx t = std::conj(cs[i]) * H(i, j) + std::conj(sn[i]) * H(i + 1, j);
                H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
                H(i, j) = t;
            }
            const double rho = std::hypot(std::abs(H(j, j)), std::abs(H(j + 1, j)));
            if (rho == 0.0) {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = H(j, j) / rho;
                sn[j] = H(j + 1, j) / rho;
            }
            H(j, j) = rho;
            H(j + 1, j) = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = std::conj(cs[j]) * g[j];
            if (std::abs(g[j + 1]) <= tol * bnorm) {
                ++j;
                ++iterations;
                break;
            }
        }
        Eigen::VectorXcd y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
        x += Z.leftCols(j) * y;
    }
    if ((b - a.multiply(x)).norm() <= tol * bnorm) return x;
    throw NoConvergenceError("GMRES did not reach the requested residual", iterations);
}

} // namespace

struct LinearSolver::Impl {
    ComplexSparseMatrix system;
    SolverOptions options;
    double system_norm = 0.0;
    SolverMethod method = SolverMethod::sparse_lu;
    mutable Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>> lu;
    std::optional<Ilu0> ilu;
    std::optional<ComplexSparseMatrix> system_adjoint;
    std::optional<Ilu0> ilu_adjoint;

    Vec refine(const ComplexSparseMatrix& a, const Vec& b, Vec x, bool adjoint) const
    {
        // normwise backward error, so near-singular shifts (shift-invert) are accepted
        const double bnorm = b.norm();
        auto small = [&](const Vec& r, const Vec& y) {
            return r.norm() <= options.tolerance * (system_norm * y.norm() + bnorm);
        };
        for (int pass = 0; pass < 3; ++pass) {
            if (!x.allFinite()) throw SingularPencilError("sparse LU produced a non-finite solution");
            const Vec r = b - a.multiply(x);
            if (small(r, x)) return x;
            x += adjoint ? Vec(lu.adjoint().solve(r)) : Vec(lu.solve(r));
        }
        if (small(b - a.multiply(x), x)) return x;
        throw NoConvergenceError("sparse LU solve residual above tolerance after refinement", 3);
    }
};

LinearSolver::LinearSolver(const ComplexSparseMatrix& A, const ComplexSparseMatrix& M, cplx shift,
                           SolverOptions options)
    : impl_(std::make_unique<Impl>())
{
    if (A.rows() != A.cols() || M.rows() != M.cols() || A.rows() != M.rows())
        throw std::invalid_argument("LinearSolver: A and M must be square and of equal size");
    impl_->options = options;
    impl_->system = shift == cplx(0.0) ? A : A.plus(M, shift);
    impl_->method = options.method;
    if (impl_->method == SolverMethod::sparse_lu && impl_->system.rows() > options.lu_size_threshold)
        impl_->method = SolverMethod::gmres;

    impl_->system_adjoint.emplace(impl_->system.adjoint());
    impl_->system_norm = std::max(impl_->system.norm_one(), impl_->system.norm_inf());
    if (impl_->method == SolverMethod::sparse_lu) {
        const auto eig = impl_->system.to_eigen();
        impl_->lu.analyzePattern(eig);
        impl_->lu.factorize(eig);
        if (impl_->lu.info() != Eigen::Success)
            throw SingularPencilError("sparse LU factorization failed: " + impl_->lu.lastErrorMessage());
    } else {
        impl_->ilu.emplace(impl_->system);
        impl_->ilu_adjoint.emplace(*impl_->system_adjoint);
    }
}

LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

Vec LinearSolver::solve(const Vec& b) const
{
    if (b.size() != size()) throw std::invalid_argument("LinearSolver::solve: dimension mismatch");
    if (impl_->method == SolverMethod::sparse_lu)
        return impl_->refine(impl_->system, b, impl_->lu.solve(b), false);
    return gmres(impl_->system, *impl_->ilu, b, impl_->options.tolerance, impl_->options.max_iter,
                 impl_->options.restart);
}

Vec LinearSolver::solve_adjoint(const Vec& b) const
{
    if (b.size() != size()) throw std::invalid_argument("LinearSolver::solve_adjoint: dimension mismatch");
    if (impl_->method == SolverMethod::sparse_lu) {
        Vec x = impl_->lu.adjoint().solve(b);
        return impl_->refine(*impl_->system_adjoint, b, std::move(x), true);
    }
    return gmres(*impl_->system_adjoint, *impl_->ilu_adjoint, b, impl_->options.tolerance, impl_->options.max_iter,
                 impl_->options.restart);
}

Index LinearSolver::size() const { return impl_->system.rows(); }
SolverMethod LinearSolver::method() const { return impl_->method; }
const ComplexSparseMatrix& LinearSolver::system() const { return impl_->system; }

Vec solve(const ComplexSparseMatrix& A, const ComplexSparseMatrix& M, cplx shift, const Vec& b, SolverOptions options)
{
    return LinearSolver(A, M, shift, options).solve(b);
}

} // namespace robin
