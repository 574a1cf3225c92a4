#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace robin {

using cplx = std::complex<double>;

enum class CouplingKind { constant, step_perturbation, gaussian_bump, sampled };

std::string to_string(CouplingKind kind);

struct SupNorms {
    double alpha = 0.0;
    /// +inf for a sharp step (no W^1_inf regularity).
    double gradient = 0.0;
    /// Sampled couplings report grid maxima, which only bound the true norms from below.
    bool lower_bound = false;

    bool gradient_finite() const;
};

/// Boundary coupling alpha(x') = alpha0 + c * beta(x') on R^{d-1}, d in {2, 3}.
///
/// The perturbation profiles are radial in x'. For the step profile beta is
/// amplitude * S((a + w/2 - |x'|) / w) with the C^1 smoothstep S(t) = 3t^2 - 2t^3,
/// so it equals the amplitude on |x'| <= a - w/2 and vanishes beyond a + w/2.
/// A smoothing width w = 0 gives the sharp indicator of |x'| <= a, which is
/// bounded but not Lipschitz.
///
/// Profile parameters:
///   step_perturbation: {half_width a, amplitude, smoothing w}
///   gaussian_bump:     {amplitude, sigma}, beta = amplitude * exp(-|x'|^2 / (2 sigma^2))
///   sampled:           values read on a uniform 1-D grid, alpha taken verbatim
class BoundaryCoupling {
public:
    static BoundaryCoupling constant(double alpha0);
    static BoundaryCoupling step(double alpha0, double c, double half_width, double amplitude = 1.0,
                                 double smoothing = 0.0);
    static BoundaryCoupling gaussian(double alpha0, double c, double amplitude, double sigma);
    /// Uniformly spaced samples of alpha on a 1-D lateral axis.
    static BoundaryCoupling sampled(std::vector<double> x, std::vector<double> alpha, double alpha0 = 0.0);
    /// CSV with header "x,alpha".
    static BoundaryCoupling sampled_from_csv(const std::string& path, double alpha0 = 0.0);

    CouplingKind kind() const { return kind_; }
    double alpha0() const { return alpha0_; }
    double c() const { return c_; }
    const std::vector<double>& profile_params() const { return params_; }

    /// Same profile with a different baseline and strength (sampled couplings are returned unchanged).
    BoundaryCoupling with_strength(double alpha0, double c) const;
    /// The coupling -alpha; assembling with it yields the adjoint operator.
    BoundaryCoupling negated() const;

    double alpha(std::span<const double> xp) const;
    double profile(std::span<const double> xp) const;
    double gradient_norm(std::span<const double> xp) const;
    SupNorms sup_norms() const;

    /// Integral of beta over R^{lateral_dim}.
    double profile_integral(int lateral_dim) const;
    /// alpha0^2, the bottom of the essential spectrum for compactly supported perturbations.
    double threshold() const { return alpha0_ * alpha0_; }

    const std::vector<double>& sample_x() const { return sample_x_; }
    const std::vector<double>& sample_alpha() const { return sample_alpha_; }

private:
    BoundaryCoupling() = default;

    double sampled_alpha(double x) const;

    CouplingKind kind_ = CouplingKind::constant;
    double alpha0_ = 0.0;
    double c_ = 0.0;
    std::vector<double> params_;
    std::vector<double> sample_x_;
    std::vector<double> sample_alpha_;
    std::vector<double> sample_gradient_;
};

double eval_alpha(const BoundaryCoupling& coupling, std::span<const double> xp);
SupNorms sup_norms(const BoundaryCoupling& coupling);

/// Constants of the resolvent estimates for layer width epsilon:
///   |(H_eps+1)^-1 - (H_0+1)^-1 P_eps|            <= C eps        (L2 -> L2)
///   |(H_eps+1)^-1 - (1+Q)(H_0+1)^-1 P_eps|       <= C(eps) eps   (L2 -> W^1_2)
struct TheoremConstants {
    double C = 0.0;
    double C_eps = 0.0;
    double C1_eps = 0.0;
    double C0 = 0.0;
    double epsilon = 0.0;
};

/// Throws HypothesisError when the gradient norm is infinite.
TheoremConstants theorem_constants(const SupNorms& norms, double epsilon);
TheoremConstants theorem_constants(const BoundaryCoupling& coupling, double epsilon);

/// Pointwise form of the three elementary exponential estimates, with the
/// sup norms replaced by the local values a = alpha(x') and g = |grad' alpha(x')|.
struct Lemma22Values {
    double lhs1, rhs1; // |e^{-i a t} - 1|                    <= |a| t
    double lhs2, rhs2; // |e^{-i a t} - 1 + i a t|            <= a^2 t^2 / 2
    double lhs3, rhs3; // |grad(e^{-i a t} - 1 + i a t)|      <= |a| t sqrt(a^2 + g^2 t^2)
};

Lemma22Values lemma22_kernels(double a, double g, double xd);

/// Q(x', x_d) = -i alpha(x') x_d.
class Corrector {
public:
    explicit Corrector(const BoundaryCoupling& coupling) : coupling_(&coupling) {}

    cplx operator()(std::span<const double> xp, double xd) const;
    const BoundaryCoupling& coupling() const { return *coupling_; }

private:
    const BoundaryCoupling* coupling_;
};

cplx eval_corrector(const Corrector& corrector, std::span<const double> xp, double xd);

} // namespace robin
