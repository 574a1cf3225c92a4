#include "robin/assembly.hpp"

#include <cmath>
#include <numbers>

#include "robin/errors.hpp"

namespace robin {
namespace {

std::vector<double> trapezoid_weights(Index n, double h)
{
    std::vector<double> w(static_cast<std::size_t>(n), h);
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
    return w;
}

/// Accumulates the Hermitian 2x2 edge contribution weight * |u_a - u_b|^2,
/// skipping constrained endpoints (their values are pinned to zero).
struct EdgeAssembler {
    std::vector<Triplet>& out;
    const std::vector<char>& free;

    void add(Index a, Index b, double weight) const
    {
        const bool fa = free[a] != 0, fb = free[b] != 0;
        if (fa) out.push_back({a, a, weight});
        if (fb) out.push_back({b, b, weight});
        if (fa && fb) {
            out.push_back({a, b, -weight});
            out.push_back({b, a, -weight});
        }
    }
};

std::vector<char> lateral_free_mask(const LayerGrid& g)
{
    std::vector<char> mask(static_cast<std::size_t>(g.lateral_count()));
    for (Index l = 0; l < g.lateral_count(); ++l) mask[l] = g.lateral_free(l) ? 1 : 0;
    return mask;
}

std::vector<char> layer_free_mask(const LayerGrid& g)
{
    std::vector<char> mask(static_cast<std::size_t>(g.node_count()));
    for (Index l = 0; l < g.lateral_count(); ++l)
        for (Index k = 0; k < g.n_trans; ++k) mask[g.node(l, k)] = g.lateral_free(l) ? 1 : 0;
    return mask;
}

/// Calls fn(a, b, w_other) for every lateral edge, where w_other is the
/// quadrature weight of the coordinates orthogonal to the edge.
template <typename Fn>
void for_each_lateral_edge(const LayerGrid& g, Fn&& fn)
{
    const Index n = g.n_lat;
    const bool periodic = g.lateral_bc == LateralBC::periodic;
    const Index edges = periodic ? n : n - 1;
    if (g.d == 2) {
        for (Index j = 0; j < edges; ++j) fn(j, (j + 1) % n, 1.0);
        return;
    }
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < edges; ++j) {
            // along x2 at fixed x1 = i, and along x1 at fixed x2 = i
            fn(i * n + j, i * n + (j + 1) % n, g.lat_weights[i]);
            fn(j * n + i, ((j + 1) % n) * n + i, g.lat_weights[i]);
        }
}

/// Fraction of the dual cell of lateral node l that lies in |x'| <= a.
double disk_fraction(const LayerGrid& g, Index l, double a)
{
    const auto p = g.lateral_point(l);
    const double h = g.h_lat;
    if (g.d == 2) {
        const double lo = std::max(p[0] - 0.5 * h, -a), hi = std::min(p[0] + 0.5 * h, a);
        return std::max(hi - lo, 0.0) / h;
    }
    const double r = std::hypot(p[0], p[1]);
    const double reach = std::numbers::sqrt2 * 0.5 * h;
    if (r + reach <= a) return 1.0;
    if (r - reach > a) return 0.0;
    // midpoint sampling of the cell for the cells the circle crosses
    constexpr int sub = 64;
    int inside = 0;
    for (int i = 0; i < sub; ++i)
        for (int j = 0; j < sub; ++j) {
            const double x = p[0] + h * ((i + 0.5) / sub - 0.5);
            const double y = p[1] + h * ((j + 0.5) / sub - 0.5);
            inside += std::hypot(x, y) <= a ? 1 : 0;
        }
    return static_cast<double>(inside) / (sub * sub);
}

} // namespace

std::vector<LateralCoefficient> lateral_coefficients(const LayerGrid& g, const BoundaryCoupling& coupling)
{
    std::vector<LateralCoefficient> out(static_cast<std::size_t>(g.lateral_count()));
    const auto& prm = coupling.profile_params();
    const bool sharp = coupling.kind() == CouplingKind::step_perturbation && prm[2] == 0.0;
    for (Index l = 0; l < g.lateral_count(); ++l) {
        if (sharp) {
            const double in = coupling.alpha0() + coupling.c() * prm[1], outside = coupling.alpha0();
            const double f = disk_fraction(g, l, prm[0]);
            out[l] = {f * in + (1.0 - f) * outside, f * in * in + (1.0 - f) * outside * outside};
        } else {
            const auto p = g.lateral_point(l);
            const double a = coupling.alpha(g.lateral_span(p));
            out[l] = {a, a * a};
        }
    }
    return out;
}

std::array<double, 2> LayerGrid::lateral_point(Index lateral) const
{
    if (d == 2) return {lat_coords[lateral], 0.0};
    return {lat_coords[lateral / n_lat], lat_coords[lateral % n_lat]};
}

double LayerGrid::lateral_weight(Index lateral) const
{
    if (d == 2) return lat_weights[lateral];
    return lat_weights[lateral / n_lat] * lat_weights[lateral % n_lat];
}

bool LayerGrid::lateral_free(Index lateral) const
{
    if (lateral_bc == LateralBC::periodic) return true;
    auto interior = [this](Index j) { return j > 0 && j + 1 < n_lat; };
    if (d == 2) return interior(lateral);
    return interior(lateral / n_lat) && interior(lateral % n_lat);
}

std::vector<double> LayerGrid::weights() const
{
    std::vector<double> w(static_cast<std::size_t>(node_count()));
    for (Index l = 0; l < lateral_count(); ++l) {
        const double wl = lateral_weight(l);
        for (Index k = 0; k < n_trans; ++k) w[node(l, k)] = wl * trans_weights[k];
    }
    return w;
}

std::vector<double> LayerGrid::lateral_weights() const
{
    std::vector<double> w(static_cast<std::size_t>(lateral_count()));
    for (Index l = 0; l < lateral_count(); ++l) w[l] = lateral_weight(l);
    return w;
}

std::vector<Index> LayerGrid::free_lateral() const
{
    std::vector<Index> idx;
    for (Index l = 0; l < lateral_count(); ++l)
        if (lateral_free(l)) idx.push_back(l);
    return idx;
}

std::vector<Index> LayerGrid::free_nodes() const
{
    std::vector<Index> idx;
    for (Index l = 0; l < lateral_count(); ++l)
        if (lateral_free(l))
            for (Index k = 0; k < n_trans; ++k) idx.push_back(node(l, k));
    return idx;
}

double LayerGrid::box_volume() const { return std::pow(2.0 * L, d - 1) * epsilon; }

double LayerGrid::box_mode_energy() const
{
    constexpr double pi = std::numbers::pi;
    const double k = lateral_bc == LateralBC::dirichlet ? pi / (2.0 * L) : pi / L;
    return k * k;
}

LayerGrid build_grid(int d, double L, Index n_lat, double epsilon, Index n_trans, LateralBC lateral_bc)
{
    if (d != 2 && d != 3) throw GridError("layer dimension d must be 2 or 3");
    if (!(L > 0.0) || !std::isfinite(L)) throw GridError("lateral half-width L must be positive");
    if (n_lat < 3) throw GridError("n_lat must be at least 3");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw GridError("layer width epsilon must be positive");
    if (n_trans < 2) throw GridError("n_trans must be at least 2 so that both faces carry nodes");

    LayerGrid g;
    g.d = d;
    g.L = L;
    g.n_lat = n_lat;
    g.epsilon = epsilon;
    g.n_trans = n_trans;
    g.lateral_bc = lateral_bc;
    if (lateral_bc == LateralBC::dirichlet) {
        g.h_lat = 2.0 * L / static_cast<double>(n_lat - 1);
        g.lat_weights = trapezoid_weights(n_lat, g.h_lat);
    } else {
        g.h_lat = 2.0 * L / static_cast<double>(n_lat);
        g.lat_weights.assign(static_cast<std::size_t>(n_lat), g.h_lat);
    }
    g.lat_coords.resize(static_cast<std::size_t>(n_lat));
    for (Index j = 0; j < n_lat; ++j) g.lat_coords[j] = -L + g.h_lat * static_cast<double>(j);
    if (lateral_bc == LateralBC::dirichlet) g.lat_coords.back() = L;

    g.h_trans = epsilon / static_cast<double>(n_trans - 1);
    g.trans_weights = trapezoid_weights(n_trans, g.h_trans);
    g.trans_coords.resize(static_cast<std::size_t>(n_trans));
    for (Index k = 0; k < n_trans; ++k) g.trans_coords[k] = g.h_trans * static_cast<double>(k);
    g.trans_coords.back() = epsilon;
    return g;
}

Index default_n_trans(double epsilon, double h_lat, bool resolvent_study)
{
    const auto n = static_cast<Index>(std::ceil(8.0 * epsilon / h_lat));
    return std::max<Index>(resolvent_study ? 6 : 2, n);
}

ComplexSparseMatrix assemble_gradient_form(const LayerGrid& g)
{
    const auto free = layer_free_mask(g);
    std::vector<Triplet> t;
    EdgeAssembler edges{t, free};
    const double inv_hl = 1.0 / g.h_lat;
    const double inv_ht = 1.0 / g.h_trans;
    for_each_lateral_edge(g, [&](Index a, Index b, double w_other) {
        for (Index k = 0; k < g.n_trans; ++k)
            edges.add(g.node(a, k), g.node(b, k), inv_hl * w_other * g.trans_weights[k]);
    });
    for (Index l = 0; l < g.lateral_count(); ++l) {
        const double wl = g.lateral_weight(l);
        for (Index k = 0; k + 1 < g.n_trans; ++k) edges.add(g.node(l, k), g.node(l, k + 1), inv_ht * wl);
    }
    return ComplexSparseMatrix::from_triplets(g.node_count(), g.node_count(), std::move(t));
}

FormPencil assemble_form_heps(const LayerGrid& g, const BoundaryCoupling& coupling)
{
    const ComplexSparseMatrix grad = assemble_gradient_form(g);
    const auto coef = lateral_coefficients(g, coupling);
    std::vector<Triplet> faces;
    for (Index l = 0; l < g.lateral_count(); ++l) {
        if (!g.lateral_free(l)) continue;
        const double a = coef[l].alpha * g.lateral_weight(l);
        if (a == 0.0) continue;
        faces.push_back({g.node(l, g.n_trans - 1), g.node(l, g.n_trans - 1), cplx(0.0, a)});
        faces.push_back({g.node(l, 0), g.node(l, 0), cplx(0.0, -a)});
    }
    const auto boundary = ComplexSparseMatrix::from_triplets(g.node_count(), g.node_count(), std::move(faces));
    const auto w = g.weights();
    return {grad.plus(boundary), ComplexSparseMatrix::diagonal(std::span<const double>(w))};
}

ComplexSparseMatrix assemble_lateral_form(const LayerGrid& g)
{
    const auto free = lateral_free_mask(g);
    std::vector<Triplet> t;
    EdgeAssembler edges{t, free};
    const double inv_hl = 1.0 / g.h_lat;
    for_each_lateral_edge(g, [&](Index a, Index b, double w_other) { edges.add(a, b, inv_hl * w_other); });
    return ComplexSparseMatrix::from_triplets(g.lateral_count(), g.lateral_count(), std::move(t));
}

ComplexSparseMatrix assemble_h0(const LayerGrid& g, const BoundaryCoupling& coupling)
{
    const ComplexSparseMatrix k0 = assemble_lateral_form(g);
    const auto coef = lateral_coefficients(g, coupling);
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(k0.nnz() + g.lateral_count()));
    const auto& off = k0.row_offsets();
    const auto& col = k0.col_indices();
    const auto& val = k0.values();
    for (Index r = 0; r < g.lateral_count(); ++r) {
        if (!g.lateral_free(r)) continue;
        const double inv_w = 1.0 / g.lateral_weight(r);
        for (Index k = off[r]; k < off[r + 1]; ++k) t.push_back({r, col[k], val[k] * inv_w});
        t.push_back({r, r, coef[r].alpha_sq});
    }
    return ComplexSparseMatrix::from_triplets(g.lateral_count(), g.lateral_count(), std::move(t));
}

Projection assemble_projection(const LayerGrid& g)
{
    std::vector<Triplet> p, lift, avg;
    const double inv_eps = 1.0 / g.epsilon;
    for (Index l = 0; l < g.lateral_count(); ++l)
        for (Index k = 0; k < g.n_trans; ++k) {
            const Index row = g.node(l, k);
            lift.push_back({row, l, 1.0});
            avg.push_back({l, row, g.trans_weights[k] * inv_eps});
            for (Index q = 0; q < g.n_trans; ++q) p.push_back({row, g.node(l, q), g.trans_weights[q] * inv_eps});
        }
    const Index n = g.node_count(), m = g.lateral_count();
    return {ComplexSparseMatrix::from_triplets(n, n, std::move(p)),
            ComplexSparseMatrix::from_triplets(n, m, std::move(lift)),
            ComplexSparseMatrix::from_triplets(m, n, std::move(avg))};
}

GramMatrices gram_matrices(const LayerGrid& g)
{
    const auto w = g.weights();
    const auto w0 = g.lateral_weights();
    auto m = ComplexSparseMatrix::diagonal(std::span<const double>(w));
    auto m_w1 = m.plus(assemble_gradient_form(g));
    return {std::move(m), std::move(m_w1), ComplexSparseMatrix::diagonal(std::span<const double>(w0))};
}

OperatorSet assemble_operators(const LayerGrid& grid, const BoundaryCoupling& coupling)
{
    OperatorSet ops;
    ops.grid = grid;
    auto pencil = assemble_form_heps(grid, coupling);
    ops.H_eps = std::move(pencil.stiffness);
    ops.H0 = assemble_h0(grid, coupling);
    auto proj = assemble_projection(grid);
    ops.P_eps = std::move(proj.P_eps);
    ops.lift = std::move(proj.lift);
    ops.average = std::move(proj.average);
    auto grams = gram_matrices(grid);
    ops.M_L2 = std::move(grams.M_L2);
    ops.M_W1 = std::move(grams.M_W1);
    ops.M0_L2 = std::move(grams.M0_L2);
    ops.free_nodes = grid.free_nodes();
    ops.free_lateral = grid.free_lateral();
    ops.norms = coupling.sup_norms();
    ops.threshold = coupling.threshold();
    return ops;
}

GridProvenance provenance(const LayerGrid& g, std::uint64_t seed)
{
    return {g.d, g.L, g.n_lat, g.epsilon, g.n_trans, g.lateral_bc, seed};
}

std::vector<Index> transverse_flip(const LayerGrid& g)
{
    std::vector<Index> perm(static_cast<std::size_t>(g.node_count()));
    for (Index l = 0; l < g.lateral_count(); ++l)
        for (Index k = 0; k < g.n_trans; ++k) perm[g.node(l, k)] = g.node(l, g.n_trans - 1 - k);
    return perm;
}

Vec corrector_on_nodes(const LayerGrid& g, const BoundaryCoupling& coupling)
{
    const Corrector q(coupling);
    Vec out(g.node_count());
    for (Index l = 0; l < g.lateral_count(); ++l) {
        const auto p = g.lateral_point(l);
        for (Index k = 0; k < g.n_trans; ++k) out[g.node(l, k)] = q(g.lateral_span(p), g.trans_coords[k]);
    }
    return out;
}

} // namespace robin
