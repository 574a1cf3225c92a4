#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "robin/sparse.hpp"

namespace robin {

enum class SolverMethod { sparse_lu, gmres };

struct SolverOptions {
    SolverMethod method = SolverMethod::sparse_lu;
    /// Systems larger than this switch from sparse LU to GMRES (when method is sparse_lu).
    Index lu_size_threshold = 2'000'000;
    double tolerance = 1e-10;
    int max_iter = 2000;
    int restart = 50;
};

/// Factorizes A + shift * M once and solves repeatedly (also with the adjoint).
/// Const member functions are safe to call concurrently.
class LinearSolver {
public:
    LinearSolver(const ComplexSparseMatrix& A, const ComplexSparseMatrix& M, cplx shift, SolverOptions options = {});
    ~LinearSolver();
    LinearSolver(LinearSolver&&) noexcept;
    LinearSolver& operator=(LinearSolver&&) noexcept;

    /// (A + shift M) x = b
    Vec solve(const Vec& b) const;
    /// (A + shift M)^H x = b
    Vec solve_adjoint(const Vec& b) const;

    Index size() const;
    SolverMethod method() const;
    const ComplexSparseMatrix& system() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot solve of (A + shift M) x = b.
Vec solve(const ComplexSparseMatrix& A, const ComplexSparseMatrix& M, cplx shift, const Vec& b,
          SolverOptions options = {});

/// A linear map together with its Euclidean adjoint.
struct LinearMap {
    Index n_in = 0;
    Index n_out = 0;
    std::function<Vec(const Vec&)> apply;
    std::function<Vec(const Vec&)> apply_adjoint;
};

/// Hermitian positive definite Gram matrix with a cached factorization.
class Gram {
public:
    explicit Gram(ComplexSparseMatrix matrix);

    const ComplexSparseMatrix& matrix() const { return matrix_; }
    Vec multiply(const Vec& x) const { return matrix_.multiply(x); }
    Vec solve(const Vec& b) const;
    double norm(const Vec& x) const;

private:
    ComplexSparseMatrix matrix_;
    bool diagonal_ = false;
    std::vector<double> inv_diag_;
    std::shared_ptr<LinearSolver> solver_;
};

struct OpNormOptions {
    int max_iter = 1000;
    /// Converged when the relative change stays below rel_tol for `window` consecutive steps.
    double rel_tol = 1e-6;
    int window = 3;
    std::uint64_t seed = 1;
};

struct OpNormEstimate {
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
    double last_rel_change = 0.0;
    std::vector<double> history;
    Vec top_input;
};

/// Power iteration on T*T with T* = M_in^{-1} T^H M_out; value estimates
/// sup |T f|_{M_out} / |f|_{M_in} from below.
OpNormEstimate weighted_opnorm(const LinearMap& map, const Gram& m_in, const Gram& m_out, OpNormOptions options = {});

struct EigenResult {
    std::vector<cplx> eigenvalues;
    std::vector<double> residuals;
    /// Per pair: tol * (|A|_1 + |lambda| |M|_1).
    std::vector<double> residual_bounds;
    std::vector<Vec> eigenvectors;
    int n_converged = 0;
    int restarts = 0;
};

struct ArnoldiOptions {
    double tol = 1e-10;
    int ncv = 0; // Krylov dimension, 0 = automatic
    int max_restarts = 12;
    std::uint64_t seed = 12345;
    /// Replace Ritz values by Rayleigh quotients (for Hermitian pencils).
    bool hermitian = false;
    SolverOptions solver;
};

/// k eigenvalues of A x = lambda M x nearest `target`, by Arnoldi on (A - target M)^{-1} M.
/// Pairs are ordered by distance to the target.
EigenResult shift_invert_arnoldi(const ComplexSparseMatrix& A, const ComplexSparseMatrix& M, cplx target, int k,
                                 ArnoldiOptions options = {});

/// Minimal-cost assignment for a rows x cols cost matrix with rows <= cols.
/// Returns the column assigned to each row.
std::vector<int> hungarian_assignment(const std::vector<std::vector<double>>& cost);

struct EigenMatching {
    std::vector<int> partner; // index into the second list for every entry of the first
    double max_distance = 0.0;
};

/// Minimal-cost bipartite matching on |a_i - b_j|; requires a.size() <= b.size().
EigenMatching match_eigenvalues(const std::vector<cplx>& a, const std::vector<cplx>& b);

} // namespace robin
