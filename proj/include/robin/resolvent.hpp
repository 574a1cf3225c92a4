#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "robin/assembly.hpp"
#include "robin/linalg.hpp"
#include "robin/model.hpp"

namespace robin {

/// Applies (H_eps + 1)^{-1} and (H_0 + 1)^{-1} on one grid, together with the
/// resolvent differences and their Euclidean adjoints. Dirichlet-constrained
/// nodes are eliminated: both resolvents vanish there and ignore input there.
class ResolventPair {
public:
    ResolventPair(OperatorSet ops, const BoundaryCoupling& coupling, SolverOptions solver = {});

    const OperatorSet& operators() const { return ops_; }
    const Vec& corrector() const { return corrector_; }

    /// (H_eps + 1)^{-1} f
    Vec layer_resolvent(const Vec& f) const;
    Vec layer_resolvent_adjoint(const Vec& g) const;
    /// (H_0 + 1)^{-1} g on the lateral grid
    Vec lateral_resolvent(const Vec& g) const;
    Vec lateral_resolvent_adjoint(const Vec& g) const;

    /// (H_eps+1)^{-1} f - lift (H_0+1)^{-1} avg f
    Vec apply_diff_L2(const Vec& f) const;
    Vec apply_diff_L2_adjoint(const Vec& g) const;
    /// (H_eps+1)^{-1} f - (1 + Q) lift (H_0+1)^{-1} avg f
    Vec apply_diff_W1(const Vec& f) const;
    Vec apply_diff_W1_adjoint(const Vec& g) const;
    /// (H_eps+1)^{-1} (1 - P_eps) f
    Vec apply_perp_resolvent(const Vec& f) const;
    Vec apply_perp_resolvent_adjoint(const Vec& g) const;

    LinearMap diff_L2_map() const;
    LinearMap diff_W1_map() const;
    LinearMap perp_resolvent_map() const;

private:
    OperatorSet ops_;
    Vec corrector_;
    std::shared_ptr<LinearSolver> layer_;
    std::shared_ptr<LinearSolver> lateral_;
};

Vec apply_diff_L2(const ResolventPair& pair, const Vec& f);
Vec apply_diff_W1(const ResolventPair& pair, const Vec& f);

struct ResolventDiffReport {
    double epsilon = 0.0;
    double norm_L2 = 0.0;            // |(H_eps+1)^-1 - (H_0+1)^-1 P_eps|, L2 -> L2
    double bound_L2 = 0.0;           // C eps
    double norm_W1_corrected = 0.0;  // |(H_eps+1)^-1 - (1+Q)(H_0+1)^-1 P_eps|, L2 -> W1
    double bound_W1 = 0.0;           // C(eps) eps
    double norm_W1_uncorrected = 0.0; // same without the corrector, L2 -> W1
    double lemma21_ratio = 0.0;      // max over probes of |R P_perp f|_W1 / |P_perp f|_L2
    double lemma21_opnorm = 0.0;     // operator norm of R P_perp, L2 -> W1
    double lemma21_bound = 0.0;      // eps / pi
    bool converged = true;
    std::vector<std::string> unconverged;
    TheoremConstants constants;
    GridProvenance grid;
    /// Relative change against the coarser grid (Richardson, first order); negative when not estimated.
    double margin_L2 = -1.0;
    double margin_W1 = -1.0;
    double margin() const { return std::max(margin_L2, margin_W1); }
};

struct StudyOptions {
    int probes = 50;
    std::uint64_t seed = 1;
    OpNormOptions opnorm;
    SolverOptions solver;
};

/// Norm estimates for one grid. Throws HypothesisError for couplings outside W^1_inf.
ResolventDiffReport estimate_theorem_norms(const LayerGrid& grid, const BoundaryCoupling& coupling,
                                           const StudyOptions& options = {});

struct GridPolicy {
    int d = 2;
    double L = 12.0;
    Index n_lat = 241;
    LateralBC lateral_bc = LateralBC::dirichlet;
    /// Fixed transverse node count; 0 selects default_n_trans.
    Index n_trans = 0;
    /// Also run a grid with halved spacings and report the Richardson margin.
    bool refine = true;

    LayerGrid grid_for(double epsilon) const;
    LayerGrid refined(const LayerGrid& grid) const;
};

/// Runs the coarse and (optionally) refined grid; the refined values are reported.
ResolventDiffReport estimate_with_margin(const GridPolicy& policy, double epsilon, const BoundaryCoupling& coupling,
                                         const StudyOptions& options = {});

struct RateFit {
    std::vector<double> epsilons;
    std::vector<double> norms;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least-squares line through (log eps, log norm).
RateFit fit_rate(const std::vector<double>& epsilons, const std::vector<double>& norms);

struct SweepResult {
    std::vector<ResolventDiffReport> reports;
    RateFit fit_L2;
    RateFit fit_W1;
    RateFit fit_W1_uncorrected;
    std::vector<double> excluded_epsilons;
};

/// Input requirements of a sweep; unconverged points are dropped from the fits.
struct SweepOptions {
    int min_points = 4;
    double min_decades = 0.9;
    int threads = 1;
};

SweepResult rate_sweep(const BoundaryCoupling& coupling, const std::vector<double>& epsilons, const GridPolicy& policy,
                       const StudyOptions& options = {}, const SweepOptions& sweep = {});

} // namespace robin
