#include "robin/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "robin/errors.hpp"

namespace robin {

std::string to_string(OperatorKind kind) { return kind == OperatorKind::H_eps ? "H_eps" : "H0"; }

std::optional<EnclosureViolation> check_enclosure(cplx z, double residual, double alpha_sup,
                                                  const EnclosureTolerance& tol)
{
    EnclosureViolation v{z, residual, -z.real() - tol.re_tol,
                         std::abs(z.imag()) - 2.0 * alpha_sup * std::sqrt(std::max(z.real(), 0.0)) -
                             tol.residual_factor * residual};
    if (v.re_excess > 0.0 || v.im_excess > 0.0) return v;
    return std::nullopt;
}

namespace {

struct Pencil {
    ComplexSparseMatrix A;
    ComplexSparseMatrix M;
};

Pencil restricted_pencil(const OperatorSet& ops, OperatorKind which)
{
    if (which == OperatorKind::H_eps)
        return {ops.H_eps.submatrix(ops.free_nodes, ops.free_nodes), ops.M_L2.submatrix(ops.free_nodes, ops.free_nodes)};
    return {ops.H0.submatrix(ops.free_lateral, ops.free_lateral),
            ComplexSparseMatrix::identity(static_cast<Index>(ops.free_lateral.size()))};
}

// H0 = M0^{-1} K0 + alpha^2: the potential is the diagonal minus the stiffness part.
double min_alpha_squared(const OperatorSet& ops)
{
    const auto& g = ops.grid;
    const auto h0_diag = ops.H0.diagonal_entries();
    const auto k0 = assemble_lateral_form(g).diagonal_entries();
    const auto w0 = g.lateral_weights();
    double lo = std::numeric_limits<double>::infinity();
    for (Index l : ops.free_lateral) {
        const auto i = static_cast<std::size_t>(l);
        lo = std::min(lo, h0_diag[i].real() - k0[i].real() / w0[i]);
    }
    return std::isfinite(lo) ? lo : 0.0;
}

SpectrumReport run_arnoldi(const OperatorSet& ops, OperatorKind which, const Pencil& p, cplx near, int k,
                           const SpectrumOptions& options)
{
    ArnoldiOptions ao = options.arnoldi;
    ao.hermitian = which == OperatorKind::H0;
    const EigenResult er = shift_invert_arnoldi(p.A, p.M, near, k, ao);

    SpectrumReport rep;
    rep.op = which;
    rep.target = near;
    rep.n_requested = k;
    rep.threshold = ops.threshold;
    rep.delta = options.artifact_band_factor * ops.grid.box_mode_energy();
    rep.alpha_sup = ops.norms.alpha;
    rep.grid = provenance(ops.grid);
    for (std::size_t i = 0; i < er.eigenvalues.size(); ++i) {
        const double mx = p.M.multiply(er.eigenvectors[i]).norm();
        rep.eigenvalues.push_back(er.eigenvalues[i]);
        rep.residuals.push_back(mx > 0.0 ? er.residuals[i] / mx : er.residuals[i]);
        const bool ok = er.residuals[i] <= er.residual_bounds[i];
        rep.converged.push_back(ok);
        if (ok) ++rep.n_converged;
    }
    rep.complete = rep.n_converged == k;
    for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
        const cplx z = rep.eigenvalues[i];
        if (rep.converged[i] && z.real() < rep.threshold - rep.delta) rep.below_threshold.push_back(z);
        if (which == OperatorKind::H_eps)
            if (auto v = check_enclosure(z, rep.residuals[i], rep.alpha_sup, options.enclosure))
                rep.enclosure_violations.push_back(*v);
    }
    return rep;
}

void sort_by_real(SpectrumReport& rep)
{
    std::vector<std::size_t> order(rep.eigenvalues.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return rep.eigenvalues[a].real() < rep.eigenvalues[b].real();
    });
    auto permute = [&](auto& v) {
        auto copy = v;
        for (std::size_t i = 0; i < order.size(); ++i) v[i] = copy[order[i]];
    };
    permute(rep.eigenvalues);
    permute(rep.residuals);
    permute(rep.converged);
    std::stable_sort(rep.below_threshold.begin(), rep.below_threshold.end(),
                     [](cplx a, cplx b) { return a.real() < b.real(); });
}

} // namespace

SpectrumReport compute_spectrum(const OperatorSet& ops, OperatorKind which, cplx near, int k,
                                const SpectrumOptions& options)
{
    if (k < 1) throw std::invalid_argument("compute_spectrum: k must be positive");
    return run_arnoldi(ops, which, restricted_pencil(ops, which), near, k, options);
}

double lower_target(const OperatorSet& ops) { return min_alpha_squared(ops) - 0.1; }

SpectrumReport lowest_spectrum(const OperatorSet& ops, OperatorKind which, int k, const SpectrumOptions& options)
{
    if (k < 1) throw std::invalid_argument("lowest_spectrum: k must be positive");
    const Pencil p = restricted_pencil(ops, which);
    // one guard value above the k requested gives the gap used for retargeting
    const int kk = static_cast<int>(std::min<Index>(k + 1, p.A.rows()));
    auto lowest_converged = [&](const SpectrumReport& r) {
        for (int i = 0; i < std::min<int>(k, static_cast<int>(r.converged.size())); ++i)
            if (!r.converged[static_cast<std::size_t>(i)]) return false;
        return static_cast<int>(r.converged.size()) >= std::min(k, kk);
    };

    // The first pass only locates the bottom; a clustered continuum above it is left to the second.
    SpectrumOptions first = options;
    first.arnoldi.max_restarts = 0;
    SpectrumReport rep = run_arnoldi(ops, which, p, lower_target(ops), kk, first);
    sort_by_real(rep);
    if (!lowest_converged(rep) && rep.eigenvalues.size() >= 2) {
        const double gap = rep.eigenvalues[1].real() - rep.eigenvalues[0].real();
        const double shift = rep.eigenvalues[0].real() - std::max(0.5 * gap, 1e-6 * (1.0 + std::abs(rep.eigenvalues[0])));
        SpectrumOptions second = options;
        second.arnoldi.max_restarts = 0;
        for (int attempt = 0; attempt <= options.arnoldi.max_restarts; ++attempt) {
            // restart from scratch with a larger basis; the guard need not converge
            rep = run_arnoldi(ops, which, p, shift, kk, second);
            sort_by_real(rep);
            if (lowest_converged(rep)) break;
            second.arnoldi.ncv = 2 * std::max(second.arnoldi.ncv, 2 * kk + 20);
        }
    }
    if (static_cast<int>(rep.eigenvalues.size()) > k) {
        const cplx dropped = rep.eigenvalues.back();
        rep.eigenvalues.pop_back();
        rep.residuals.pop_back();
        rep.converged.pop_back();
        std::erase(rep.below_threshold, dropped);
        std::erase_if(rep.enclosure_violations, [&](const EnclosureViolation& v) { return v.eigenvalue == dropped; });
    }
    rep.n_requested = k;
    rep.n_converged = static_cast<int>(std::count(rep.converged.begin(), rep.converged.end(), true));
    rep.complete = rep.n_converged == k;
    return rep;
}

WeakCouplingReport weak_coupling_sweep(const LayerGrid& grid, double alpha0, const BoundaryCoupling& profile,
                                       const std::vector<double>& c_values, OperatorKind which,
                                       const SpectrumOptions& options)
{
    WeakCouplingReport rep;
    rep.op = which;
    rep.alpha0 = alpha0;
    rep.profile_integral = profile.profile_integral(grid.lateral_dim());
    rep.threshold = alpha0 * alpha0;
    rep.delta = options.artifact_band_factor * grid.box_mode_energy();
    rep.grid = provenance(grid);
    const double I = rep.profile_integral;
    for (double c : c_values) {
        const BoundaryCoupling cpl = profile.with_strength(alpha0, c);
        const OperatorSet ops = assemble_operators(grid, cpl);
        const SpectrumReport sr = lowest_spectrum(ops, which, 1, options);
        if (!sr.complete) throw NoConvergenceError("weak_coupling_sweep: eigensolver did not converge", 0);
        const double mu = sr.eigenvalues.front().real();
        const double pred = rep.threshold - c * c * rep.threshold * I * I;
        const bool present = mu < rep.threshold - rep.delta;
        rep.c_values.push_back(c);
        rep.mu.push_back(mu);
        rep.present.push_back(present);
        rep.prediction.push_back(pred);
        const double r = c != 0.0 ? std::abs(mu - pred) / std::pow(std::abs(c), 3) : 0.0;
        rep.residual_over_c3.push_back(present ? r : std::numeric_limits<double>::quiet_NaN());
        if (present) rep.K_fit = std::max(rep.K_fit, r);
    }
    return rep;
}

Trajectory coupling_trajectory(const LayerGrid& grid, double alpha0, const BoundaryCoupling& profile,
                               const std::vector<double>& c_values, const SpectrumOptions& options, int threads)
{
    Trajectory tr;
    tr.alpha0 = alpha0;
    tr.threshold = alpha0 * alpha0;
    tr.delta = options.artifact_band_factor * grid.box_mode_energy();
    tr.grid = provenance(grid);
    const std::size_t n = c_values.size();
    std::vector<std::vector<double>> candidates(n);
    std::vector<std::exception_ptr> errors(n);
    auto task = [&](std::size_t i) {
        try {
            const OperatorSet ops = assemble_operators(grid, profile.with_strength(alpha0, c_values[i]));
            const SpectrumReport sr = lowest_spectrum(ops, OperatorKind::H0, 3, options);
            for (std::size_t j = 0; j < sr.eigenvalues.size(); ++j)
                if (sr.converged[j]) candidates[i].push_back(sr.eigenvalues[j].real());
            if (candidates[i].empty()) throw NoConvergenceError("coupling_trajectory: eigensolver did not converge", 0);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min<int>(threads, static_cast<int>(n)); ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) task(i);
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    for (std::size_t i = 0; i < n; ++i) {
        TrajectoryPoint pt;
        pt.c = c_values[i];
        pt.lowest = candidates[i].front();
        pt.below = pt.lowest < tr.threshold - tr.delta;
        pt.tracked = pt.lowest;
        if (i >= 1) {
            const double prev = tr.points[i - 1].tracked;
            const double trend = i >= 2 ? prev - tr.points[i - 2].tracked : 0.0;
            const double predicted = prev + trend;
            double best = candidates[i].front();
            for (double v : candidates[i])
                if (std::abs(v - predicted) < std::abs(best - predicted)) best = v;
            const double floor = 1e-3 * std::max(1.0, std::abs(prev));
            if (std::abs(best - prev) > 5.0 * std::max(std::abs(trend), floor)) {
                pt.rejected = true;
                best = candidates[i].front();
            }
            pt.tracked = best;
        }
        tr.points.push_back(pt);
    }

    for (const auto& pt : tr.points) {
        if (pt.below && !tr.emergence) tr.emergence = pt.c;
        if (tr.emergence && !tr.reabsorption) {
            if (pt.below && (!tr.minimum_value || pt.lowest < *tr.minimum_value)) {
                tr.minimum_value = pt.lowest;
                tr.minimum_c = pt.c;
            }
            if (!pt.below) tr.reabsorption = pt.c;
        }
    }
    return tr;
}

PairedSpectra compare_heps_h0_spectra(const LayerGrid& grid, const BoundaryCoupling& coupling, int k,
                                      bool below_threshold_only, const SpectrumOptions& options)
{
    const OperatorSet ops = assemble_operators(grid, coupling);
    const SpectrumReport se = lowest_spectrum(ops, OperatorKind::H_eps, k, options);
    const SpectrumReport s0 = lowest_spectrum(ops, OperatorKind::H0, k + 2, options);
    auto pick = [&](const SpectrumReport& r, std::size_t limit) {
        std::vector<cplx> out;
        for (std::size_t i = 0; i < r.eigenvalues.size() && out.size() < limit; ++i) {
            if (!r.converged[i]) continue;
            if (below_threshold_only && !(r.eigenvalues[i].real() < r.threshold - r.delta)) continue;
            out.push_back(r.eigenvalues[i]);
        }
        return out;
    };
    const auto a = pick(se, static_cast<std::size_t>(k));
    const auto b = pick(s0, static_cast<std::size_t>(k + 2));

    PairedSpectra out;
    out.epsilon = grid.epsilon;
    const bool swap = a.size() > b.size();
    const auto& rows = swap ? b : a;
    const auto& cols = swap ? a : b;
    std::vector<bool> used_rows(rows.size(), false), used_cols(cols.size(), false);
    if (!rows.empty()) {
        const EigenMatching m = match_eigenvalues(rows, cols);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto j = static_cast<std::size_t>(m.partner[i]);
            used_rows[i] = used_cols[j] = true;
            const cplx le = swap ? cols[j] : rows[i];
            const cplx l0 = swap ? rows[i] : cols[j];
            out.pairs.push_back({le, l0, std::abs(le - l0)});
            out.max_distance = std::max(out.max_distance, std::abs(le - l0));
        }
    }
    // H_0 carries two guard values beyond the k requested
    for (std::size_t i = 0; i < cols.size(); ++i)
        if (!used_cols[i] && (swap || i < static_cast<std::size_t>(k)))
            (swap ? out.unpaired_eps : out.unpaired_0).push_back(cols[i]);
    std::sort(out.pairs.begin(), out.pairs.end(),
              [](const SpectrumPair& x, const SpectrumPair& y) { return x.lambda_eps.real() < y.lambda_eps.real(); });
    return out;
}

} // namespace robin
