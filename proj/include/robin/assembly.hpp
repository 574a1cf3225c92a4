#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "robin/model.hpp"
#include "robin/sparse.hpp"

namespace robin {

enum class LateralBC { dirichlet, periodic };

/// Truncated tensor grid on [-L, L]^{d-1} x [0, eps].
///
/// Transverse nodes include both faces. Node index = lateral_index * n_trans + k,
/// with the lateral index row-major over (x1, x2) when d = 3.
/// Dirichlet grids keep the lateral box boundary as nodes (trapezoid weights) but
/// constrain them to zero; periodic grids omit the duplicate endpoint.
struct LayerGrid {
    int d = 2;
    double L = 1.0;
    Index n_lat = 3;
    double epsilon = 1.0;
    Index n_trans = 2;
    LateralBC lateral_bc = LateralBC::dirichlet;
    double h_lat = 0.0;
    double h_trans = 0.0;
    std::vector<double> lat_coords;
    std::vector<double> lat_weights;
    std::vector<double> trans_coords;
    std::vector<double> trans_weights;

    int lateral_dim() const { return d - 1; }
    Index lateral_count() const { return d == 2 ? n_lat : n_lat * n_lat; }
    Index node_count() const { return lateral_count() * n_trans; }
    Index node(Index lateral, Index k) const { return lateral * n_trans + k; }

    /// Coordinates of a lateral node; only the first d-1 entries are meaningful.
    std::array<double, 2> lateral_point(Index lateral) const;
    std::span<const double> lateral_span(const std::array<double, 2>& p) const
    {
        return std::span<const double>(p.data(), static_cast<std::size_t>(d - 1));
    }
    double lateral_weight(Index lateral) const;
    bool lateral_free(Index lateral) const;

    std::vector<double> weights() const;
    std::vector<double> lateral_weights() const;
    std::vector<Index> free_lateral() const;
    std::vector<Index> free_nodes() const;
    double box_volume() const;
    /// Lowest Laplacian mode of the lateral box, (pi/2L)^2 (dirichlet) or (pi/L)^2 (periodic).
    double box_mode_energy() const;
};

struct GridProvenance {
    int d = 2;
    double L = 0.0;
    Index n_lat = 0;
    double epsilon = 0.0;
    Index n_trans = 0;
    LateralBC lateral_bc = LateralBC::dirichlet;
    std::uint64_t seed = 0;
};

GridProvenance provenance(const LayerGrid& grid, std::uint64_t seed = 0);

LayerGrid build_grid(int d, double L, Index n_lat, double epsilon, Index n_trans, LateralBC lateral_bc);

/// max(2, ceil(8 eps / h_lat)), floored at 6 for resolvent studies.
Index default_n_trans(double epsilon, double h_lat, bool resolvent_study);

/// Coupling coefficients used on a lateral node.
struct LateralCoefficient {
    double alpha = 0.0;
    double alpha_sq = 0.0;
};

/// Point values alpha(x'), alpha(x')^2 for continuous couplings. A sharp step is
/// averaged exactly over the dual cell of the node so that the jump position is
/// resolved below the grid spacing.
std::vector<LateralCoefficient> lateral_coefficients(const LayerGrid& grid, const BoundaryCoupling& coupling);

/// Discretized sesquilinear form h_eps and the L2 mass: u^H stiffness u approximates
/// int |grad u|^2 + i int alpha |u(., eps)|^2 - i int alpha |u(., 0)|^2, and the
/// pencil (stiffness, mass) realizes H_eps.
struct FormPencil {
    ComplexSparseMatrix stiffness;
    ComplexSparseMatrix mass;
};

FormPencil assemble_form_heps(const LayerGrid& grid, const BoundaryCoupling& coupling);

/// Gradient part of the layer form (alpha = 0), i.e. the discrete int |grad u|^2.
ComplexSparseMatrix assemble_gradient_form(const LayerGrid& grid);

/// Lateral form int |grad' v|^2 on the (d-1)-dimensional grid.
ComplexSparseMatrix assemble_lateral_form(const LayerGrid& grid);

/// H_0 = -Lap' + alpha^2 as a Hermitian matrix on the lateral grid.
ComplexSparseMatrix assemble_h0(const LayerGrid& grid, const BoundaryCoupling& coupling);

struct Projection {
    ComplexSparseMatrix P_eps;   // layer -> layer
    ComplexSparseMatrix lift;    // lateral -> layer
    ComplexSparseMatrix average; // layer -> lateral
};

Projection assemble_projection(const LayerGrid& grid);

struct GramMatrices {
    ComplexSparseMatrix M_L2;
    ComplexSparseMatrix M_W1;
    ComplexSparseMatrix M0_L2;
};

GramMatrices gram_matrices(const LayerGrid& grid);

/// All discrete operators for one (grid, coupling). H_eps holds the form matrix;
/// the operator itself is the pencil (H_eps, M_L2).
struct OperatorSet {
    LayerGrid grid;
    ComplexSparseMatrix H_eps;
    ComplexSparseMatrix H0;
    ComplexSparseMatrix P_eps;
    ComplexSparseMatrix lift;
    ComplexSparseMatrix average;
    ComplexSparseMatrix M_L2;
    ComplexSparseMatrix M_W1;
    ComplexSparseMatrix M0_L2;
    std::vector<Index> free_nodes;
    std::vector<Index> free_lateral;
    SupNorms norms;
    double threshold = 0.0;
};

OperatorSet assemble_operators(const LayerGrid& grid, const BoundaryCoupling& coupling);

/// Permutation of layer nodes realizing x_d -> eps - x_d.
std::vector<Index> transverse_flip(const LayerGrid& grid);

/// Q(x', x_d) = -i alpha(x') x_d sampled on the layer nodes.
Vec corrector_on_nodes(const LayerGrid& grid, const BoundaryCoupling& coupling);

} // namespace robin
