#include "robin/resolvent.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include "robin/errors.hpp"

namespace robin {

namespace {

Vec restrict_to(const Vec& x, const std::vector<Index>& idx)
{
    Vec out(static_cast<Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Index>(i)] = x[idx[i]];
    return out;
}

Vec extend_from(const Vec& x, const std::vector<Index>& idx, Index n)
{
    Vec out = Vec::Zero(n);
    for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = x[static_cast<Index>(i)];
    return out;
}

Vec scale(const Vec& d, const Vec& x) { return d.cwiseProduct(x); }

} // namespace

ResolventPair::ResolventPair(OperatorSet ops, const BoundaryCoupling& coupling, SolverOptions solver)
    : ops_(std::move(ops))
{
    corrector_ = corrector_on_nodes(ops_.grid, coupling);
    const auto& fn = ops_.free_nodes;
    const auto& fl = ops_.free_lateral;
    layer_ = std::make_shared<LinearSolver>(ops_.H_eps.submatrix(fn, fn), ops_.M_L2.submatrix(fn, fn), 1.0, solver);
    lateral_ = std::make_shared<LinearSolver>(ops_.H0.submatrix(fl, fl),
                                              ComplexSparseMatrix::identity(static_cast<Index>(fl.size())), 1.0,
                                              solver);
}

// The pencil (K, M) realizes H u = f as K u = M f, so (H+1)^{-1} = (K+M)^{-1} M.
Vec ResolventPair::layer_resolvent(const Vec& f) const
{
    const Vec mf = ops_.M_L2.multiply(f);
    return extend_from(layer_->solve(restrict_to(mf, ops_.free_nodes)), ops_.free_nodes, f.size());
}

Vec ResolventPair::layer_resolvent_adjoint(const Vec& g) const
{
    const Vec x = extend_from(layer_->solve_adjoint(restrict_to(g, ops_.free_nodes)), ops_.free_nodes, g.size());
    return ops_.M_L2.multiply_adjoint(x);
}

Vec ResolventPair::lateral_resolvent(const Vec& g) const
{
    return extend_from(lateral_->solve(restrict_to(g, ops_.free_lateral)), ops_.free_lateral, g.size());
}

Vec ResolventPair::lateral_resolvent_adjoint(const Vec& g) const
{
    return extend_from(lateral_->solve_adjoint(restrict_to(g, ops_.free_lateral)), ops_.free_lateral, g.size());
}

Vec ResolventPair::apply_diff_L2(const Vec& f) const
{
    return layer_resolvent(f) - ops_.lift.multiply(lateral_resolvent(ops_.average.multiply(f)));
}

Vec ResolventPair::apply_diff_L2_adjoint(const Vec& g) const
{
    return layer_resolvent_adjoint(g) -
           ops_.average.multiply_adjoint(lateral_resolvent_adjoint(ops_.lift.multiply_adjoint(g)));
}

Vec ResolventPair::apply_diff_W1(const Vec& f) const
{
    const Vec lifted = ops_.lift.multiply(lateral_resolvent(ops_.average.multiply(f)));
    return layer_resolvent(f) - lifted - scale(corrector_, lifted);
}

Vec ResolventPair::apply_diff_W1_adjoint(const Vec& g) const
{
    const Vec dg = g + scale(corrector_.conjugate(), g);
    return layer_resolvent_adjoint(g) -
           ops_.average.multiply_adjoint(lateral_resolvent_adjoint(ops_.lift.multiply_adjoint(dg)));
}

Vec ResolventPair::apply_perp_resolvent(const Vec& f) const { return layer_resolvent(f - ops_.P_eps.multiply(f)); }

Vec ResolventPair::apply_perp_resolvent_adjoint(const Vec& g) const
{
    const Vec y = layer_resolvent_adjoint(g);
    return y - ops_.P_eps.multiply_adjoint(y);
}

LinearMap ResolventPair::diff_L2_map() const
{
    const Index n = ops_.grid.node_count();
    return {n, n, [this](const Vec& f) { return apply_diff_L2(f); },
            [this](const Vec& g) { return apply_diff_L2_adjoint(g); }};
}

LinearMap ResolventPair::diff_W1_map() const
{
    const Index n = ops_.grid.node_count();
    return {n, n, [this](const Vec& f) { return apply_diff_W1(f); },
            [this](const Vec& g) { return apply_diff_W1_adjoint(g); }};
}

LinearMap ResolventPair::perp_resolvent_map() const
{
    const Index n = ops_.grid.node_count();
    return {n, n, [this](const Vec& f) { return apply_perp_resolvent(f); },
            [this](const Vec& g) { return apply_perp_resolvent_adjoint(g); }};
}

Vec apply_diff_L2(const ResolventPair& pair, const Vec& f) { return pair.apply_diff_L2(f); }
Vec apply_diff_W1(const ResolventPair& pair, const Vec& f) { return pair.apply_diff_W1(f); }

ResolventDiffReport estimate_theorem_norms(const LayerGrid& grid, const BoundaryCoupling& coupling,
                                           const StudyOptions& options)
{
    if (options.probes < 1) throw std::invalid_argument("estimate_theorem_norms: probes must be positive");
    ResolventDiffReport rep;
    rep.epsilon = grid.epsilon;
    rep.constants = theorem_constants(coupling, grid.epsilon);
    rep.bound_L2 = rep.constants.C * grid.epsilon;
    rep.bound_W1 = rep.constants.C_eps * grid.epsilon;
    rep.lemma21_bound = grid.epsilon / std::numbers::pi;
    rep.grid = provenance(grid, options.seed);

    const ResolventPair pair(assemble_operators(grid, coupling), coupling, options.solver);
    const Gram m_l2(pair.operators().M_L2);
    const Gram m_w1(pair.operators().M_W1);

    OpNormOptions opt = options.opnorm;
    opt.seed = options.seed;
    auto record = [&](const OpNormEstimate& e, const char* name) {
        if (!e.converged) {
            rep.converged = false;
            rep.unconverged.emplace_back(name);
        }
        return e.value;
    };
    rep.norm_L2 = record(weighted_opnorm(pair.diff_L2_map(), m_l2, m_l2, opt), "norm_L2");
    rep.norm_W1_corrected = record(weighted_opnorm(pair.diff_W1_map(), m_l2, m_w1, opt), "norm_W1_corrected");

    // Without the corrector the W1 difference is the L2 map measured in W1.
    rep.norm_W1_uncorrected = record(weighted_opnorm(pair.diff_L2_map(), m_l2, m_w1, opt), "norm_W1_uncorrected");
    rep.lemma21_opnorm = record(weighted_opnorm(pair.perp_resolvent_map(), m_l2, m_w1, opt), "lemma21_opnorm");

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Index n = grid.node_count();
    std::vector<char> free(static_cast<std::size_t>(n), 0);
    for (Index i : pair.operators().free_nodes) free[static_cast<std::size_t>(i)] = 1;
    for (int p = 0; p < options.probes; ++p) {
        Vec f(n);
        for (Index i = 0; i < n; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            f[i] = free[static_cast<std::size_t>(i)] ? cplx(re, im) : cplx(0.0);
        }
        f /= m_l2.norm(f);
        const Vec fp = f - pair.operators().P_eps.multiply(f);
        const double nf = m_l2.norm(fp);
        if (nf == 0.0) continue;
        rep.lemma21_ratio = std::max(rep.lemma21_ratio, m_w1.norm(pair.layer_resolvent(fp)) / nf);
    }
    return rep;
}

LayerGrid GridPolicy::grid_for(double epsilon) const
{
    Index nt = n_trans;
    if (nt == 0) {
        const LayerGrid probe = build_grid(d, L, n_lat, epsilon, 2, lateral_bc);
        nt = default_n_trans(epsilon, probe.h_lat, true);
    }
    return build_grid(d, L, n_lat, epsilon, nt, lateral_bc);
}

LayerGrid GridPolicy::refined(const LayerGrid& g) const
{
    const Index nl = g.lateral_bc == LateralBC::dirichlet ? 2 * g.n_lat - 1 : 2 * g.n_lat;
    return build_grid(g.d, g.L, nl, g.epsilon, 2 * g.n_trans - 1, g.lateral_bc);
}

ResolventDiffReport estimate_with_margin(const GridPolicy& policy, double epsilon, const BoundaryCoupling& coupling,
                                         const StudyOptions& options)
{
    const LayerGrid coarse = policy.grid_for(epsilon);
    if (!policy.refine) return estimate_theorem_norms(coarse, coupling, options);
    const ResolventDiffReport c = estimate_theorem_norms(coarse, coupling, options);
    ResolventDiffReport f = estimate_theorem_norms(policy.refined(coarse), coupling, options);
    auto rel = [](double fine, double crs) { return fine > 0.0 ? std::abs(fine - crs) / fine : 0.0; };
    f.margin_L2 = rel(f.norm_L2, c.norm_L2);
    f.margin_W1 = rel(f.norm_W1_corrected, c.norm_W1_corrected);
    if (!c.converged) {
        f.converged = false;
        for (const auto& u : c.unconverged) f.unconverged.push_back("coarse:" + u);
    }
    return f;
}

RateFit fit_rate(const std::vector<double>& epsilons, const std::vector<double>& norms)
{
    if (epsilons.size() != norms.size() || epsilons.size() < 2)
        throw std::invalid_argument("fit_rate: need at least two matching points");
    RateFit fit{epsilons, norms, 0.0, 0.0, 0.0};
    const auto n = static_cast<double>(epsilons.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0) || !(norms[i] > 0.0)) throw std::invalid_argument("fit_rate: values must be positive");
        const double x = std::log(epsilons[i]), y = std::log(norms[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    const double cxy = sxy - sx * sy / n;
    if (vx <= 0.0) throw std::invalid_argument("fit_rate: epsilons must not all coincide");
    fit.slope = cxy / vx;
    fit.intercept = (sy - fit.slope * sx) / n;
    fit.r_squared = vy > 0.0 ? std::clamp(cxy * cxy / (vx * vy), 0.0, 1.0) : 1.0;
    return fit;
}

SweepResult rate_sweep(const BoundaryCoupling& coupling, const std::vector<double>& epsilons, const GridPolicy& policy,
                       const StudyOptions& options, const SweepOptions& sweep)
{
    if (static_cast<int>(epsilons.size()) < sweep.min_points)
        throw std::invalid_argument("rate_sweep: too few epsilon values");
    const auto [lo, hi] = std::minmax_element(epsilons.begin(), epsilons.end());
    if (!(*lo > 0.0) || std::log10(*hi / *lo) < sweep.min_decades - 1e-12)
        throw std::invalid_argument("rate_sweep: epsilon values span too small a range");

    SweepResult out;
    out.reports.resize(epsilons.size());
    std::vector<std::exception_ptr> errors(epsilons.size());
    auto task = [&](std::size_t i) {
        try {
            out.reports[i] = estimate_with_margin(policy, epsilons[i], coupling, options);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const int threads = std::max(1, sweep.threads);
    if (threads == 1) {
        for (std::size_t i = 0; i < epsilons.size(); ++i) task(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min<int>(threads, static_cast<int>(epsilons.size())); ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < epsilons.size(); i = next++) task(i);
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::sort(out.reports.begin(), out.reports.end(),
              [](const auto& a, const auto& b) { return a.epsilon > b.epsilon; });
    std::vector<double> eps, n2, nw, nu;
    for (const auto& r : out.reports) {
        if (!r.converged) {
            out.excluded_epsilons.push_back(r.epsilon);
            continue;
        }
        eps.push_back(r.epsilon);
        n2.push_back(r.norm_L2);
        nw.push_back(r.norm_W1_corrected);
        nu.push_back(r.norm_W1_uncorrected);
    }
    if (eps.size() >= 2) {
        out.fit_L2 = fit_rate(eps, n2);
        out.fit_W1 = fit_rate(eps, nw);
        out.fit_W1_uncorrected = fit_rate(eps, nu);
    }
    return out;
}

} // namespace robin
