#include <cmath>
#include <random>

#include "robin/linalg.hpp"

namespace robin {

Gram::Gram(ComplexSparseMatrix matrix) : matrix_(std::move(matrix))
{
    diagonal_ = true;
    const auto& off = matrix_.row_offsets();
    const auto& col = matrix_.col_indices();
    for (Index r = 0; r < matrix_.rows() && diagonal_; ++r)
        for (Index k = off[r]; k < off[r + 1]; ++k)
            if (col[k] != r) {
                diagonal_ = false;
                break;
            }
    if (diagonal_) {
        const auto d = matrix_.diagonal_entries();
        inv_diag_.resize(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (!(d[i].real() > 0.0)) throw std::invalid_argument("Gram matrix must be positive definite");
            inv_diag_[i] = 1.0 / d[i].real();
        }
    } else {
        const ComplexSparseMatrix zero(matrix_.rows(), matrix_.cols());
        solver_ = std::make_shared<LinearSolver>(matrix_, zero, 0.0);
    }
}

Vec Gram::solve(const Vec& b) const
{
    if (!diagonal_) return solver_->solve(b);
    Vec x(b.size());
    for (Index i = 0; i < b.size(); ++i) x[i] = b[i] * inv_diag_[i];
    return x;
}

double Gram::norm(const Vec& x) const
{
    const cplx q = x.dot(matrix_.multiply(x));
    return std::sqrt(std::max(0.0, q.real()));
}

OpNormEstimate weighted_opnorm(const LinearMap& map, const Gram& m_in, const Gram& m_out, OpNormOptions options)
{
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec x(map.n_in);
    for (Index i = 0; i < map.n_in; ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        x[i] = cplx(re, im);
    }

    OpNormEstimate est;
    double nx = m_in.norm(x);
    if (nx == 0.0) throw std::invalid_argument("weighted_opnorm: start vector has zero norm");
    x /= nx;

    int stable = 0;
    double prev = 0.0;
    for (int it = 1; it <= options.max_iter; ++it) {
        const Vec y = map.apply(x);
        const double s = m_out.norm(y);
        est.history.push_back(s);
        est.iterations = it;
        if (s > est.value) {
            est.value = s;
            est.top_input = x;
        }
        if (it > 1) {
            const double denom = std::max(s, prev);
            est.last_rel_change = denom > 0.0 ? std::abs(s - prev) / denom : 0.0;
            stable = est.last_rel_change < options.rel_tol ? stable + 1 : 0;
            if (stable >= options.window) {
                est.converged = true;
                break;
            }
        }
        prev = s;
        if (s == 0.0) {
            // T annihilates the iterate; for a generic random start this means T = 0.
            est.converged = true;
            break;
        }
        Vec z = m_in.solve(map.apply_adjoint(m_out.multiply(y)));
        const double nz = m_in.norm(z);
        if (nz == 0.0) {
            est.converged = true;
            break;
        }
        x = z / nz;
    }
    return est;
}

} // namespace robin
