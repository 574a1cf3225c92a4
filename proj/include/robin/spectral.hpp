#pragma once

#include <optional>
#include <string>
#include <vector>

#include "robin/assembly.hpp"
#include "robin/linalg.hpp"
#include "robin/model.hpp"

namespace robin {

enum class OperatorKind { H_eps, H0 };

std::string to_string(OperatorKind kind);

struct EnclosureTolerance {
    double re_tol = 1e-8;
    /// Allowed excess of |Im z| in units of the pair's eigenvalue residual.
    double residual_factor = 10.0;
};

struct EnclosureViolation {
    cplx eigenvalue;
    double residual = 0.0;
    double re_excess = 0.0; // -Re z - re_tol, positive when violated
    double im_excess = 0.0; // |Im z| - 2 |alpha| sqrt(max(Re z, 0)) - residual_factor * residual
};

/// Checks Re z >= -tol and |Im z| <= 2 alpha_sup sqrt(max(Re z, 0)) + factor * residual.
std::optional<EnclosureViolation> check_enclosure(cplx z, double residual, double alpha_sup,
                                                  const EnclosureTolerance& tol = {});

struct SpectrumOptions {
    ArnoldiOptions arnoldi;
    EnclosureTolerance enclosure;
    /// Width of the band below the threshold treated as truncation artifacts, in units of
    /// the lowest lateral box mode energy.
    double artifact_band_factor = 10.0;
};

struct SpectrumReport {
    OperatorKind op = OperatorKind::H_eps;
    cplx target;
    std::vector<cplx> eigenvalues;
    /// |A x - lambda M x| / |M x| for unit x: an eigenvalue-scale residual.
    std::vector<double> residuals;
    std::vector<bool> converged;
    int n_requested = 0;
    int n_converged = 0;
    bool complete = true;
    double threshold = 0.0;
    double delta = 0.0;
    std::vector<cplx> below_threshold;
    std::vector<EnclosureViolation> enclosure_violations;
    double alpha_sup = 0.0;
    CouplingKind coupling = CouplingKind::constant;
    GridProvenance grid;
};

/// k eigenpairs of H_eps (pencil on the free nodes) or H_0 nearest `near`.
/// The enclosure is checked for H_eps only; H_0 is Hermitian.
SpectrumReport compute_spectrum(const OperatorSet& ops, OperatorKind which, cplx near, int k,
                                const SpectrumOptions& options = {});

/// A real shift strictly below the spectrum of H_0 (and below Re spec H_eps): min alpha^2 - 0.1.
double lower_target(const OperatorSet& ops);

/// The k eigenvalues nearest lower_target, sorted by real part.
SpectrumReport lowest_spectrum(const OperatorSet& ops, OperatorKind which, int k, const SpectrumOptions& options = {});

struct WeakCouplingReport {
    OperatorKind op = OperatorKind::H0;
    double alpha0 = 0.0;
    double profile_integral = 0.0;
    double threshold = 0.0;
    double delta = 0.0;
    std::vector<double> c_values;
    std::vector<bool> present;       // an eigenvalue lies below threshold - delta
    std::vector<double> mu;          // lowest eigenvalue (real part), also when absent
    std::vector<double> prediction;  // alpha0^2 - c^2 alpha0^2 (int beta)^2
    std::vector<double> residual_over_c3;
    double K_fit = 0.0;              // max residual_over_c3 over present entries
    GridProvenance grid;
};

/// Couplings alpha0 + c beta with the profile of `profile`, on a fixed grid.
WeakCouplingReport weak_coupling_sweep(const LayerGrid& grid, double alpha0, const BoundaryCoupling& profile,
                                       const std::vector<double>& c_values, OperatorKind which = OperatorKind::H0,
                                       const SpectrumOptions& options = {});

struct TrajectoryPoint {
    double c = 0.0;
    double lowest = 0.0;   // lowest eigenvalue of H_0
    double tracked = 0.0;  // continued branch
    bool below = false;    // lowest < threshold - delta
    bool rejected = false; // continuation step exceeded 5x the local trend
};

struct Trajectory {
    double alpha0 = 0.0;
    double threshold = 0.0;
    double delta = 0.0;
    std::vector<TrajectoryPoint> points;
    std::optional<double> emergence;     // first c with an eigenvalue below threshold - delta
    std::optional<double> minimum_c;
    std::optional<double> minimum_value;
    std::optional<double> reabsorption;  // first later c where it is gone again
    GridProvenance grid;
};

Trajectory coupling_trajectory(const LayerGrid& grid, double alpha0, const BoundaryCoupling& profile,
                               const std::vector<double>& c_values, const SpectrumOptions& options = {},
                               int threads = 1);

struct SpectrumPair {
    cplx lambda_eps;
    cplx lambda_0;
    double distance = 0.0;
};

struct PairedSpectra {
    double epsilon = 0.0;
    std::vector<SpectrumPair> pairs;
    std::vector<cplx> unpaired_eps;
    std::vector<cplx> unpaired_0;
    double max_distance = 0.0;
};

/// Pairs the k lowest eigenvalues (by real part) of H_eps with eigenvalues of H_0.
/// With below_threshold_only, only eigenvalues under threshold - delta take part.
PairedSpectra compare_heps_h0_spectra(const LayerGrid& grid, const BoundaryCoupling& coupling, int k,
                                      bool below_threshold_only = false, const SpectrumOptions& options = {});

} // namespace robin
