#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include <Eigen/Eigenvalues>

#include "robin/errors.hpp"
#include "robin/linalg.hpp"

namespace robin {
namespace {

Vec random_vector(Index n, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec v(n);
    for (Index i = 0; i < n; ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        v[i] = cplx(re, im);
    }
    return v;
}

struct RitzPair {
    cplx lambda;
    Vec vector;
    double residual;
    double bound;
};

} // namespace

EigenResult shift_invert_arnoldi(const ComplexSparseMatrix& A, const ComplexSparseMatrix& M, cplx target, int k,
                                 ArnoldiOptions options)
{
    const Index n = A.rows();
    if (A.cols() != n || M.rows() != n || M.cols() != n) throw std::invalid_argument("arnoldi: pencil shape mismatch");
    if (k < 1) throw std::invalid_argument("arnoldi: k must be positive");
    k = static_cast<int>(std::min<Index>(k, n));

    std::optional<LinearSolver> solver;
    try {
        solver.emplace(A, M, -target, options.solver);
    } catch (const SingularPencilError& e) {
        throw SingularPencilError(std::string("shift-invert target lies on the spectrum: ") + e.what());
    }
    const double norm_a = A.norm_one();
    const double norm_m = M.norm_one();

    std::mt19937_64 rng(options.seed);
    Index ncv = options.ncv > 0 ? options.ncv : std::max<Index>(2 * k + 20, 30);
    ncv = std::min<Index>(std::max<Index>(ncv, k), n);
    Vec start = random_vector(n, rng);

    EigenResult result;
    std::vector<RitzPair> best;
    for (int restart = 0; restart <= options.max_restarts; ++restart) {
        result.restarts = restart;
        Eigen::MatrixXcd V(n, ncv + 1);
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(ncv + 1, ncv);
        V.col(0) = start / start.norm();
        for (Index j = 0; j < ncv; ++j) {
            Vec w = solver->solve(M.multiply(V.col(j)));
            const double wnorm = w.norm();
            for (int pass = 0; pass < 2; ++pass) {
                const Eigen::VectorXcd h = V.leftCols(j + 1).adjoint() * w;
                w -= V.leftCols(j + 1) * h;
                H.col(j).head(j + 1) += h;
            }
            const double beta = w.norm();
            if (j + 1 == ncv) {
                H(j + 1, j) = beta;
                if (beta > 0.0) V.col(j + 1) = w / beta;
                break;
            }
            if (beta > 1e-13 * wnorm) {
                H(j + 1, j) = beta;
                V.col(j + 1) = w / beta;
            } else {
                // invariant subspace found; continue with a fresh orthogonal direction
                H(j + 1, j) = 0.0;
                Vec r = random_vector(n, rng);
                for (int pass = 0; pass < 2; ++pass) r -= V.leftCols(j + 1) * (V.leftCols(j + 1).adjoint() * r);
                V.col(j + 1) = r / r.norm();
            }
        }

        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(H.topLeftCorner(ncv, ncv));
        if (ces.info() != Eigen::Success) throw NoConvergenceError("Hessenberg eigensolve failed", restart);
        const Eigen::VectorXcd theta = ces.eigenvalues();
        std::vector<Index> order(static_cast<std::size_t>(ncv));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b) { return std::abs(theta[a]) > std::abs(theta[b]); });

        std::vector<RitzPair> pairs;
        for (Index idx : order) {
            if (static_cast<int>(pairs.size()) == k) break;
            if (std::abs(theta[idx]) == 0.0) continue;
            Vec x = V.leftCols(ncv) * ces.eigenvectors().col(idx);
            x /= x.norm();
            cplx lambda = target + 1.0 / theta[idx];
            const Vec ax = A.multiply(x);
            const Vec mx = M.multiply(x);
            // Hermitian pencils have real spectra; drop the round-off imaginary part
            if (options.hermitian) lambda = (x.dot(ax) / x.dot(mx)).real();
            const double res = (ax - lambda * mx).norm();
            pairs.push_back({lambda, std::move(x), res, options.tol * (norm_a + std::abs(lambda) * norm_m)});
        }
        int converged = 0;
        for (const auto& p : pairs)
            if (p.residual <= p.bound) ++converged;
        best = std::move(pairs);
        result.n_converged = converged;
        if (converged == k || restart == options.max_restarts) break;

        start = Vec::Zero(n);
        for (const auto& p : best) start += p.vector;
        if (start.norm() == 0.0) start = random_vector(n, rng);
        ncv = std::min<Index>(n, 2 * ncv);
    }

    std::stable_sort(best.begin(), best.end(), [&](const RitzPair& a, const RitzPair& b) {
        return std::abs(a.lambda - target) < std::abs(b.lambda - target);
    });
    for (auto& p : best) {
        result.eigenvalues.push_back(p.lambda);
        result.residuals.push_back(p.residual);
        result.residual_bounds.push_back(p.bound);
        result.eigenvectors.push_back(std::move(p.vector));
    }
    return result;
}

} // namespace robin
