#include "robin/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "robin/linalg.hpp"
#include "robin/model.hpp"

namespace robin {

bool SelftestReport::passed() const
{
    for (const auto& c : checks)
        if (!c.passed) return false;
    return !checks.empty();
}

namespace {

// Draws a value with log-uniform magnitude in [10^lo, 10^hi].
double log_uniform(std::mt19937_64& rng, double lo, double hi)
{
    std::uniform_real_distribution<double> u(lo, hi);
    return std::pow(10.0, u(rng));
}

Eigen::MatrixXcd random_dense(std::mt19937_64& rng, int n, int m)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXcd a(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            const double re = g(rng);
            const double im = g(rng);
            a(i, j) = cplx(re, im);
        }
    return a;
}

ComplexSparseMatrix to_sparse(const Eigen::MatrixXcd& a)
{
    std::vector<Triplet> t;
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            if (a(i, j) != cplx(0.0)) t.push_back({i, j, a(i, j)});
    return ComplexSparseMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

SelftestCheck check(const std::string& name, double value, double tol, const std::string& detail = {})
{
    return {name, value <= tol, value, tol, detail};
}

} // namespace

SelftestReport lemma22_suite(std::int64_t samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> coin(0, 9);
    const double slack = 8.0 * std::numeric_limits<double>::epsilon();
    std::int64_t viol[3] = {0, 0, 0};
    double worst[3] = {-1.0, -1.0, -1.0};
    for (std::int64_t s = 0; s < samples; ++s) {
        double a = log_uniform(rng, -6.0, 1.5);
        if (coin(rng) < 5) a = -a;
        double g = coin(rng) == 0 ? 0.0 : log_uniform(rng, -6.0, 1.5);
        double xd = log_uniform(rng, -6.0, 0.5);
        const auto v = lemma22_kernels(a, g, xd);
        const double lhs[3] = {v.lhs1, v.lhs2, v.lhs3};
        const double rhs[3] = {v.rhs1, v.rhs2, v.rhs3};
        for (int i = 0; i < 3; ++i) {
            const double excess = (lhs[i] - rhs[i]) / rhs[i];
            worst[i] = std::max(worst[i], excess);
            if (lhs[i] > rhs[i] * (1.0 + slack)) ++viol[i];
        }
    }
    SelftestReport rep;
    const char* names[3] = {"exp_kernel_first_order", "exp_kernel_second_order", "exp_kernel_gradient"};
    for (int i = 0; i < 3; ++i)
        rep.checks.push_back(check(names[i], static_cast<double>(viol[i]), 0.0,
                                   std::to_string(samples) + " samples, max (lhs - rhs) / rhs = " +
                                       sci(worst[i])));
    return rep;
}

SelftestReport linalg_suite(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    SelftestReport rep;
    const int n = 40;

    // sparse LU and GMRES against dense partial-pivoting LU
    Eigen::MatrixXcd a = random_dense(rng, n, n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && u(rng) < 0.7) a(i, j) = 0.0;
    a += 4.0 * Eigen::MatrixXcd::Identity(n, n);
    const Eigen::VectorXcd b = random_dense(rng, n, 1);
    const ComplexSparseMatrix as = to_sparse(a);
    const ComplexSparseMatrix zero(n, n);
    const Eigen::VectorXcd x_ref = a.partialPivLu().solve(b);
    const Eigen::VectorXcd xa_ref = a.adjoint().partialPivLu().solve(b);
    const LinearSolver lu(as, zero, 0.0);
    rep.checks.push_back(check("sparse_lu_solve", (lu.solve(b) - x_ref).norm() / x_ref.norm(), 1e-10));
    rep.checks.push_back(check("sparse_lu_adjoint_solve", (lu.solve_adjoint(b) - xa_ref).norm() / xa_ref.norm(), 1e-10));
    SolverOptions go;
    go.method = SolverMethod::gmres;
    go.tolerance = 1e-12;
    const LinearSolver gm(as, zero, 0.0, go);
    rep.checks.push_back(check("gmres_solve", (gm.solve(b) - x_ref).norm() / x_ref.norm(), 1e-8));

    // full spectrum of a 30 x 30 pencil with a diagonal positive mass
    const int m = 30;
    const Eigen::MatrixXcd k = random_dense(rng, m, m);
    std::vector<double> mass(m);
    for (auto& w : mass) w = 0.5 + u(rng);
    Eigen::MatrixXcd minv_k = k;
    for (int i = 0; i < m; ++i) minv_k.row(i) /= mass[static_cast<std::size_t>(i)];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(minv_k);
    std::vector<cplx> dense(ces.eigenvalues().data(), ces.eigenvalues().data() + m);
    ArnoldiOptions ao;
    ao.ncv = m;
    const auto er = shift_invert_arnoldi(to_sparse(k), ComplexSparseMatrix::diagonal(std::span<const double>(mass)),
                                         cplx(0.1, 0.2), m, ao);
    const auto match = match_eigenvalues(er.eigenvalues, dense);
    double scale = 0.0;
    for (const cplx z : dense) scale = std::max(scale, std::abs(z));
    rep.checks.push_back(check("arnoldi_full_spectrum", match.max_distance / scale, 1e-8,
                               std::to_string(er.n_converged) + " of " + std::to_string(m) + " converged"));

    // weighted norm against whitened dense SVD
    const Eigen::MatrixXcd t = random_dense(rng, n, n);
    Eigen::MatrixXcd g_in = random_dense(rng, n, n);
    g_in = g_in * g_in.adjoint() + double(n) * Eigen::MatrixXcd::Identity(n, n);
    std::vector<double> w_out(n);
    for (auto& w : w_out) w = 0.5 + u(rng);
    const ComplexSparseMatrix ts = to_sparse(t);
    const LinearMap map{n, n, [&](const Vec& x) { return ts.multiply(x); },
                        [&](const Vec& y) { return ts.multiply_adjoint(y); }};
    OpNormOptions oo;
    oo.rel_tol = 1e-13;
    oo.max_iter = 5000;
    const auto est = weighted_opnorm(map, Gram(to_sparse(g_in)), Gram(ComplexSparseMatrix::diagonal(std::span<const double>(w_out))), oo);
    const Eigen::MatrixXcd l_in = g_in.llt().matrixL();
    Eigen::VectorXd sw(n);
    for (int i = 0; i < n; ++i) sw[i] = std::sqrt(w_out[static_cast<std::size_t>(i)]);
    const Eigen::MatrixXcd whitened =
        sw.asDiagonal() * t * l_in.adjoint().triangularView<Eigen::Upper>().solve(Eigen::MatrixXcd::Identity(n, n));
    const double sigma = Eigen::JacobiSVD<Eigen::MatrixXcd>(whitened).singularValues()[0];
    rep.checks.push_back(check("weighted_opnorm", std::abs(est.value - sigma) / sigma, 1e-8,
                               est.converged ? "converged" : "not converged"));
    return rep;
}

SelftestReport run_selftest(std::int64_t lemma22_samples, std::uint64_t seed)
{
    SelftestReport rep = lemma22_suite(lemma22_samples, seed);
    const SelftestReport la = linalg_suite(seed);
    rep.checks.insert(rep.checks.end(), la.checks.begin(), la.checks.end());
    return rep;
}

} // namespace robin
