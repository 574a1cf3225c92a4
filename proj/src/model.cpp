#include "robin/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "robin/errors.hpp"

namespace robin {
namespace {

double radius(std::span<const double> xp)
{
    double r2 = 0.0;
    for (double v : xp) r2 += v * v;
    return std::sqrt(r2);
}

double smoothstep(double t)
{
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

double smoothstep_slope(double t)
{
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return 6.0 * t * (1.0 - t);
}

} // namespace

std::string to_string(CouplingKind kind)
{
    switch (kind) {
    case CouplingKind::constant: return "constant";
    case CouplingKind::step_perturbation: return "step";
    case CouplingKind::gaussian_bump: return "gauss";
    case CouplingKind::sampled: return "sampled";
    }
    return "unknown";
}

bool SupNorms::gradient_finite() const { return std::isfinite(gradient); }

BoundaryCoupling BoundaryCoupling::constant(double alpha0)
{
    BoundaryCoupling b;
    b.kind_ = CouplingKind::constant;
    b.alpha0_ = alpha0;
    return b;
}

BoundaryCoupling BoundaryCoupling::step(double alpha0, double c, double half_width, double amplitude,
                                        double smoothing)
{
    if (!(half_width > 0.0) || smoothing < 0.0 || !std::isfinite(amplitude))
        throw std::invalid_argument("step profile needs half_width > 0 and smoothing >= 0");
    if (smoothing > 2.0 * half_width)
        throw std::invalid_argument("step smoothing width must not exceed the support diameter");
    BoundaryCoupling b;
    b.kind_ = CouplingKind::step_perturbation;
    b.alpha0_ = alpha0;
    b.c_ = c;
    b.params_ = {half_width, amplitude, smoothing};
    return b;
}

BoundaryCoupling BoundaryCoupling::gaussian(double alpha0, double c, double amplitude, double sigma)
{
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian profile needs sigma > 0");
    BoundaryCoupling b;
    b.kind_ = CouplingKind::gaussian_bump;
    b.alpha0_ = alpha0;
    b.c_ = c;
    b.params_ = {amplitude, sigma};
    return b;
}

BoundaryCoupling BoundaryCoupling::sampled(std::vector<double> x, std::vector<double> alpha, double alpha0)
{
    if (x.size() != alpha.size() || x.size() < 3)
        throw std::invalid_argument("sampled coupling needs at least 3 (x, alpha) pairs");
    const double h = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    if (!(h > 0.0)) throw std::invalid_argument("sampled coupling abscissae must increase");
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double expected = x.front() + h * static_cast<double>(i);
        if (std::abs(x[i] - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
            throw std::invalid_argument("sampled coupling abscissae must be uniformly spaced");
    }
    BoundaryCoupling b;
    b.kind_ = CouplingKind::sampled;
    b.alpha0_ = alpha0;
    b.c_ = 0.0;
    const std::size_t n = x.size();
    b.sample_gradient_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0)
            b.sample_gradient_[i] = (alpha[1] - alpha[0]) / h;
        else if (i + 1 == n)
            b.sample_gradient_[i] = (alpha[n - 1] - alpha[n - 2]) / h;
        else
            b.sample_gradient_[i] = (alpha[i + 1] - alpha[i - 1]) / (2.0 * h);
    }
    b.sample_x_ = std::move(x);
    b.sample_alpha_ = std::move(alpha);
    return b;
}

BoundaryCoupling BoundaryCoupling::sampled_from_csv(const std::string& path, double alpha0)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open coupling samples: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty coupling sample file: " + path);
    line.erase(std::remove_if(line.begin(), line.end(), [](char ch) { return std::isspace(static_cast<unsigned char>(ch)); }),
               line.end());
    if (line != "x,alpha") throw std::runtime_error("coupling sample file must start with header \"x,alpha\"");
    std::vector<double> xs, as;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream row(line);
        row.imbue(std::locale::classic());
        double xv = 0.0, av = 0.0;
        char comma = 0;
        if (!(row >> xv >> comma >> av) || comma != ',')
            throw std::runtime_error("malformed coupling sample row: " + line);
        xs.push_back(xv);
        as.push_back(av);
    }
    return sampled(std::move(xs), std::move(as), alpha0);
}

BoundaryCoupling BoundaryCoupling::with_strength(double alpha0, double c) const
{
    BoundaryCoupling b = *this;
    if (kind_ == CouplingKind::sampled) return b;
    b.alpha0_ = alpha0;
    b.c_ = kind_ == CouplingKind::constant ? 0.0 : c;
    return b;
}

BoundaryCoupling BoundaryCoupling::negated() const
{
    BoundaryCoupling b = *this;
    b.alpha0_ = -alpha0_;
    b.c_ = -c_;
    for (double& v : b.sample_alpha_) v = -v;
    for (double& v : b.sample_gradient_) v = -v;
    return b;
}

double BoundaryCoupling::profile(std::span<const double> xp) const
{
    switch (kind_) {
    case CouplingKind::constant:
    case CouplingKind::sampled:
        return 0.0;
    case CouplingKind::step_perturbation: {
        const double a = params_[0], amp = params_[1], w = params_[2];
        const double r = radius(xp);
        if (w == 0.0) return r <= a ? amp : 0.0;
        return amp * smoothstep((a + 0.5 * w - r) / w);
    }
    case CouplingKind::gaussian_bump: {
        const double amp = params_[0], sigma = params_[1];
        const double r = radius(xp);
        return amp * std::exp(-r * r / (2.0 * sigma * sigma));
    }
    }
    return 0.0;
}

double BoundaryCoupling::sampled_alpha(double x) const
{
    const double x0 = sample_x_.front(), x1 = sample_x_.back();
    if (!(x >= x0 && x <= x1))
        throw DomainError("coupling query x = " + std::to_string(x) + " outside sampled box [" + std::to_string(x0) +
                          ", " + std::to_string(x1) + "]");
    const double h = (x1 - x0) / static_cast<double>(sample_x_.size() - 1);
    const double s = (x - x0) / h;
    const auto i = std::min(static_cast<std::size_t>(s), sample_x_.size() - 2);
    const double t = s - static_cast<double>(i);
    return (1.0 - t) * sample_alpha_[i] + t * sample_alpha_[i + 1];
}

double BoundaryCoupling::alpha(std::span<const double> xp) const
{
    for (double v : xp)
        if (!std::isfinite(v)) throw DomainError("coupling query point is not finite");
    if (kind_ == CouplingKind::sampled) {
        if (xp.size() != 1) throw DomainError("sampled couplings are defined on a 1-D lateral axis only");
        return sampled_alpha(xp[0]);
    }
    return alpha0_ + c_ * profile(xp);
}

double BoundaryCoupling::gradient_norm(std::span<const double> xp) const
{
    switch (kind_) {
    case CouplingKind::constant:
        return 0.0;
    case CouplingKind::sampled: {
        if (xp.size() != 1) throw DomainError("sampled couplings are defined on a 1-D lateral axis only");
        const double x0 = sample_x_.front(), x1 = sample_x_.back();
        if (!(xp[0] >= x0 && xp[0] <= x1)) throw DomainError("coupling gradient query outside sampled box");
        const double h = (x1 - x0) / static_cast<double>(sample_x_.size() - 1);
        const double s = (xp[0] - x0) / h;
        const auto i = std::min(static_cast<std::size_t>(s), sample_x_.size() - 2);
        const double t = s - static_cast<double>(i);
        return std::abs((1.0 - t) * sample_gradient_[i] + t * sample_gradient_[i + 1]);
    }
    case CouplingKind::step_perturbation: {
        const double a = params_[0], amp = params_[1], w = params_[2];
        const double r = radius(xp);
        if (w == 0.0) return r == a ? std::numeric_limits<double>::infinity() : 0.0;
        return std::abs(c_ * amp) * smoothstep_slope((a + 0.5 * w - r) / w) / w;
    }
    case CouplingKind::gaussian_bump: {
        const double amp = params_[0], sigma = params_[1];
        const double r = radius(xp);
        return std::abs(c_ * amp) * r / (sigma * sigma) * std::exp(-r * r / (2.0 * sigma * sigma));
    }
    }
    return 0.0;
}

SupNorms BoundaryCoupling::sup_norms() const
{
    SupNorms n;
    switch (kind_) {
    case CouplingKind::constant:
        n.alpha = std::abs(alpha0_);
        n.gradient = 0.0;
        break;
    case CouplingKind::step_perturbation: {
        const double amp = params_[1], w = params_[2];
        // beta sweeps the closed range between 0 and amp.
        n.alpha = std::max(std::abs(alpha0_), std::abs(alpha0_ + c_ * amp));
        if (c_ * amp == 0.0)
            n.gradient = 0.0;
        else
            n.gradient = w == 0.0 ? std::numeric_limits<double>::infinity() : 1.5 * std::abs(c_ * amp) / w;
        break;
    }
    case CouplingKind::gaussian_bump: {
        const double amp = params_[0], sigma = params_[1];
        n.alpha = std::max(std::abs(alpha0_), std::abs(alpha0_ + c_ * amp));
        // max of r exp(-r^2/2s^2)/s^2 is attained at r = sigma
        n.gradient = std::abs(c_ * amp) * std::exp(-0.5) / sigma;
        break;
    }
    case CouplingKind::sampled:
        n.lower_bound = true;
        for (double v : sample_alpha_) n.alpha = std::max(n.alpha, std::abs(v));
        for (double v : sample_gradient_) n.gradient = std::max(n.gradient, std::abs(v));
        break;
    }
    return n;
}

double BoundaryCoupling::profile_integral(int lateral_dim) const
{
    constexpr double pi = std::numbers::pi;
    switch (kind_) {
    case CouplingKind::constant:
    case CouplingKind::sampled:
        return 0.0;
    case CouplingKind::step_perturbation: {
        const double a = params_[0], amp = params_[1], w = params_[2];
        // The smoothstep ramp is odd about r = a, so the 1-D integral is exactly 2a.
        if (lateral_dim == 1) return 2.0 * a * amp;
        return amp * pi * (a * a + w * w / 20.0);
    }
    case CouplingKind::gaussian_bump: {
        const double amp = params_[0], sigma = params_[1];
        if (lateral_dim == 1) return amp * sigma * std::sqrt(2.0 * pi);
        return amp * 2.0 * pi * sigma * sigma;
    }
    }
    return 0.0;
}

double eval_alpha(const BoundaryCoupling& coupling, std::span<const double> xp) { return coupling.alpha(xp); }

SupNorms sup_norms(const BoundaryCoupling& coupling) { return coupling.sup_norms(); }

TheoremConstants theorem_constants(const SupNorms& norms, double epsilon)
{
    if (!(epsilon > 0.0)) throw std::invalid_argument("layer width epsilon must be positive");
    if (!norms.gradient_finite() || !std::isfinite(norms.alpha))
        throw HypothesisError("coupling is not in W^1_inf: gradient sup norm is unbounded");
    constexpr double pi = std::numbers::pi;
    const double a = norms.alpha;
    const double g = norms.gradient;
    const double sqrt3 = std::sqrt(3.0);
    const double inv_pi2 = 1.0 / (pi * pi);

    TheoremConstants k;
    k.epsilon = epsilon;
    k.C = std::sqrt(inv_pi2 + (g + 2.0 * a) * (g + 2.0 * a) / 3.0);
    const double s = epsilon * a * a / (2.0 * std::sqrt(5.0));
    const double t = s + a * std::sqrt(a * a + g * g * epsilon * epsilon) / sqrt3;
    k.C1_eps = std::sqrt(s * s + t * t);
    k.C0 = (g + a) / sqrt3;
    const double inner = (g + a) / sqrt3 + k.C1_eps;
    k.C_eps = std::sqrt(inv_pi2 + inner * inner);
    return k;
}

TheoremConstants theorem_constants(const BoundaryCoupling& coupling, double epsilon)
{
    return theorem_constants(coupling.sup_norms(), epsilon);
}

Lemma22Values lemma22_kernels(double a, double g, double xd)
{
    if (xd < 0.0) throw std::invalid_argument("lemma22_kernels requires xd >= 0");
    const double theta = a * xd;
    const double half_sin = std::sin(0.5 * theta);

    Lemma22Values v{};
    v.lhs1 = 2.0 * std::abs(half_sin);
    v.rhs1 = std::abs(a) * xd;

    // e^{-i theta} - 1 + i theta = -2 sin^2(theta/2) + i (theta - sin theta)
    const double re = -2.0 * half_sin * half_sin;
    double im = 0.0;
    if (std::abs(theta) < 0.1) {
        const double t2 = theta * theta;
        im = theta * t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0 * (1.0 - t2 / 110.0))));
    } else {
        im = theta - std::sin(theta);
    }
    v.lhs2 = std::hypot(re, im);
    v.rhs2 = 0.5 * a * a * xd * xd;

    // grad(e^{-i a t} - 1 + i a t) = i (1 - e^{-i a t}) (t grad' a, a)
    const double weight = std::hypot(xd * g, a);
    v.lhs3 = v.lhs1 * weight;
    v.rhs3 = v.rhs1 * weight;
    return v;
}

cplx Corrector::operator()(std::span<const double> xp, double xd) const
{
    return {0.0, -coupling_->alpha(xp) * xd};
}

cplx eval_corrector(const Corrector& corrector, std::span<const double> xp, double xd) { return corrector(xp, xd); }

} // namespace robin
