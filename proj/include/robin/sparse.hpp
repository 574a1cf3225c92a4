#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace robin {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Index = std::int64_t;

struct Triplet {
    Index row;
    Index col;
    cplx value;
};

/// Complex matrix in compressed sparse row form.
///
/// Column indices are strictly increasing within a row. Entries that sum to
/// exactly zero during assembly are dropped.
class ComplexSparseMatrix {
public:
    ComplexSparseMatrix() = default;
    ComplexSparseMatrix(Index rows, Index cols);

    /// Duplicates are summed.
    static ComplexSparseMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> entries);
    static ComplexSparseMatrix identity(Index n);
    static ComplexSparseMatrix diagonal(std::span<const cplx> diag);
    static ComplexSparseMatrix diagonal(std::span<const double> diag);
    static ComplexSparseMatrix from_eigen(const Eigen::SparseMatrix<cplx, Eigen::RowMajor>& m);

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index nnz() const { return static_cast<Index>(values_.size()); }

    const std::vector<Index>& row_offsets() const { return row_offsets_; }
    const std::vector<Index>& col_indices() const { return col_indices_; }
    const std::vector<cplx>& values() const { return values_; }

    /// Entry (i, j), zero when not stored.
    cplx coeff(Index i, Index j) const;

    Vec multiply(const Vec& x) const;
    /// A^H x
    Vec multiply_adjoint(const Vec& x) const;

    ComplexSparseMatrix adjoint() const;
    ComplexSparseMatrix conjugate() const;
    ComplexSparseMatrix scaled(cplx s) const;
    /// this + s * other
    ComplexSparseMatrix plus(const ComplexSparseMatrix& other, cplx s = 1.0) const;
    ComplexSparseMatrix times(const ComplexSparseMatrix& other) const;
    /// Rows and columns selected by index lists (in the given order).
    ComplexSparseMatrix submatrix(std::span<const Index> row_idx, std::span<const Index> col_idx) const;
    /// B(i, j) = A(perm[i], perm[j]).
    ComplexSparseMatrix permuted(std::span<const Index> perm) const;

    std::vector<cplx> diagonal_entries() const;
    /// Max row sum of absolute values.
    double norm_inf() const;
    /// Max column sum of absolute values.
    double norm_one() const;
    double max_abs() const;
    /// max |A_ij - B_ij| over the union of stored patterns.
    double max_abs_difference(const ComplexSparseMatrix& other) const;
    /// max |A - A^H| <= rel_tol * max |A|
    bool is_hermitian(double rel_tol = 0.0) const;

    Eigen::SparseMatrix<cplx, Eigen::ColMajor> to_eigen() const;
    Eigen::MatrixXcd to_dense() const;

    /// Matrix Market coordinate complex general, 1-based indices, %.17g values.
    void write_matrix_market(std::ostream& out) const;
    void write_matrix_market(const std::string& path) const;
    static ComplexSparseMatrix read_matrix_market(std::istream& in);
    static ComplexSparseMatrix read_matrix_market(const std::string& path);

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<Index> row_offsets_{0};
    std::vector<cplx> values_;
    std::vector<Index> col_indices_;
};

} // namespace robin
