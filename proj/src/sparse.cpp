#include "robin/sparse.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace robin {
namespace {

std::string format_double(double v)
{
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

} // namespace

ComplexSparseMatrix::ComplexSparseMatrix(Index rows, Index cols)
    : rows_(rows), cols_(cols), row_offsets_(static_cast<std::size_t>(rows) + 1, 0)
{
}

ComplexSparseMatrix ComplexSparseMatrix::from_triplets(Index rows, Index cols, std::vector<Triplet> entries)
{
    for (const auto& t : entries)
        if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
            throw std::out_of_range("triplet index outside matrix shape");
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    ComplexSparseMatrix m(rows, cols);
    m.values_.reserve(entries.size());
    m.col_indices_.reserve(entries.size());
    std::size_t k = 0;
    for (Index r = 0; r < rows; ++r) {
        while (k < entries.size() && entries[k].row == r) {
            const Index c = entries[k].col;
            cplx sum = 0.0;
            while (k < entries.size() && entries[k].row == r && entries[k].col == c) sum += entries[k++].value;
            if (sum != cplx(0.0)) {
                m.values_.push_back(sum);
                m.col_indices_.push_back(c);
            }
        }
        m.row_offsets_[static_cast<std::size_t>(r) + 1] = static_cast<Index>(m.values_.size());
    }
    return m;
}

ComplexSparseMatrix ComplexSparseMatrix::identity(Index n)
{
    std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
    return diagonal(std::span<const double>(ones));
}

ComplexSparseMatrix ComplexSparseMatrix::diagonal(std::span<const cplx> diag)
{
    std::vector<Triplet> t;
    t.reserve(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) t.push_back({Index(i), Index(i), diag[i]});
    const auto n = static_cast<Index>(diag.size());
    return from_triplets(n, n, std::move(t));
}

ComplexSparseMatrix ComplexSparseMatrix::diagonal(std::span<const double> diag)
{
    std::vector<cplx> d(diag.begin(), diag.end());
    return diagonal(std::span<const cplx>(d));
}

ComplexSparseMatrix ComplexSparseMatrix::from_eigen(const Eigen::SparseMatrix<cplx, Eigen::RowMajor>& a)
{
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(a.nonZeros()));
    for (Index r = 0; r < a.outerSize(); ++r)
        for (Eigen::SparseMatrix<cplx, Eigen::RowMajor>::InnerIterator it(a, r); it; ++it)
            t.push_back({it.row(), it.col(), it.value()});
    return from_triplets(a.rows(), a.cols(), std::move(t));
}

cplx ComplexSparseMatrix::coeff(Index i, Index j) const
{
    const auto begin = col_indices_.begin() + row_offsets_[i];
    const auto end = col_indices_.begin() + row_offsets_[i + 1];
    const auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return 0.0;
    return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

Vec ComplexSparseMatrix::multiply(const Vec& x) const
{
    if (x.size() != cols_) throw std::invalid_argument("multiply: dimension mismatch");
    Vec y(rows_);
    for (Index r = 0; r < rows_; ++r) {
        cplx s = 0.0;
        for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) s += values_[k] * x[col_indices_[k]];
        y[r] = s;
    }
    return y;
}

Vec ComplexSparseMatrix::multiply_adjoint(const Vec& x) const
{
    if (x.size() != rows_) throw std::invalid_argument("multiply_adjoint: dimension mismatch");
    Vec y = Vec::Zero(cols_);
    for (Index r = 0; r < rows_; ++r)
        for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
            y[col_indices_[k]] += std::conj(values_[k]) * x[r];
    return y;
}

ComplexSparseMatrix ComplexSparseMatrix::adjoint() const
{
    std::vector<Triplet> t;
    t.reserve(values_.size());
    for (Index r = 0; r < rows_; ++r)
        for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
            t.push_back({col_indices_[k], r, std::conj(values_[k])});
    return from_triplets(cols_, rows_, std::move(t));
}

ComplexSparseMatrix ComplexSparseMatrix::conjugate() const
{
    ComplexSparseMatrix m = *this;
    for (auto& v : m.values_) v = std::conj(v);
    return m;
}

ComplexSparseMatrix ComplexSparseMatrix::scaled(cplx s) const
{
    std::vector<Triplet> t;
    t.reserve(values_.size());
    for (Index r = 0; r < rows_; ++r)
        for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) t.push_back({r, col_indices_[k], s * values_[k]});
    return from_triplets(rows_, cols_, std::move(t));
}

ComplexSparseMatrix ComplexSparseMatrix::plus(const ComplexSparseMatrix& other, cplx s) const
{
    if (other.rows_ != rows_ || other.cols_ != cols_) throw std::invalid_argument("plus: shape mismatch");
    std::vector<Triplet> t;
    t.reserve(values_.size() + other.values_.size());
    for (Index r = 0; r < rows_; ++r) {
        for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) t.push_back({r, col_indices_[k], values_[k]});
        for (Index k = other.row_offsets_[r]; k < other.row_offsets_[r + 1]; ++k)
            t.push_back({r, other.col_indices_[k], s * other.values_[k]});
    }
    return from_triplets(rows_, cols_, std::move(t));
}

ComplexSparseMatrix ComplexSparseMatrix::times(const ComplexSparseMatrix& other) const
{
    if (cols_ != other.rows_) throw std::invalid_argument("times: shape mismatch");
    std::vector<Triplet> t;
    for (Index r = 0; r < rows_; ++r)
        for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            const Index mid = col_indices_[k];
            for (Index q = other.row_offsets_[mid]; q < other.row_offsets_[mid + 1]; ++q)
                t.push_back({r, other.col_indices_[q], values_[k] * other.values_[q]});
        }
    return from_triplets(rows_, other.cols_, std::move(t));
}

ComplexSparseMatrix ComplexSparseMatrix::submatrix(std::span<const Index> row_idx, std::span<const Index> col_idx) const
{
    std::vector<Index> col_map(static_cast<std::size_t>(cols_), -1);
    for (std::size_t j = 0; j < col_idx.size(); ++j) col_map[col_idx[j]] = static_cast<Index>(j);
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < row_idx.size(); ++i) {
        const Index r = row_idx[i];
        for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            const Index c = col_map[col_indices_[k]];
            if (c >= 0) t.push_back({static_cast<Index>(i), c, values_[k]});
        }
    }
    return from_triplets(static_cast<Index>(row_idx.size()), static_cast<Index>(col_idx.size()), std::move(t));
}

ComplexSparseMatrix ComplexSparseMatrix::permuted(std::span<const Index> perm) const
{
    if (rows_ != cols_ || static_cast<Index>(perm.size()) != rows_)
        throw std::invalid_argument("permuted: needs a square matrix and a full permutation");
    return submatrix(perm, perm);
}

std::vector<cplx> ComplexSparseMatrix::diagonal_entries() const
{
    std::vector<cplx> d(static_cast<std::size_t>(std::min(rows_, cols_)));
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = coeff(static_cast<Index>(i), static_cast<Index>(i));
    return d;
}

double ComplexSparseMatrix::norm_inf() const
{
    double best = 0.0;
    for (Index r = 0; r < rows_; ++r) {
        double s = 0.0;
        for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) s += std::abs(values_[k]);
        best = std::max(best, s);
    }
    return best;
}

double ComplexSparseMatrix::norm_one() const
{
    std::vector<double> sums(static_cast<std::size_t>(cols_), 0.0);
    for (std::size_t k = 0; k < values_.size(); ++k) sums[col_indices_[k]] += std::abs(values_[k]);
    double best = 0.0;
    for (double s : sums) best = std::max(best, s);
    return best;
}

double ComplexSparseMatrix::max_abs() const
{
    double best = 0.0;
    for (const auto& v : values_) best = std::max(best, std::abs(v));
    return best;
}

double ComplexSparseMatrix::max_abs_difference(const ComplexSparseMatrix& other) const
{
    if (other.rows_ != rows_ || other.cols_ != cols_) throw std::invalid_argument("shape mismatch");
    return plus(other, -1.0).max_abs();
}

bool ComplexSparseMatrix::is_hermitian(double rel_tol) const
{
    if (rows_ != cols_) return false;
    const double tol = rel_tol * max_abs();
    for (Index r = 0; r < rows_; ++r)
        for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            const cplx mirror = std::conj(coeff(col_indices_[k], r));
            if (std::abs(values_[k] - mirror) > tol) return false;
        }
    // entries stored only in the mirrored position are caught by the loop from the other side
    return true;
}

Eigen::SparseMatrix<cplx, Eigen::ColMajor> ComplexSparseMatrix::to_eigen() const
{
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(values_.size());
    for (Index r = 0; r < rows_; ++r)
        for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) t.emplace_back(r, col_indices_[k], values_[k]);
    Eigen::SparseMatrix<cplx, Eigen::ColMajor> m(rows_, cols_);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

Eigen::MatrixXcd ComplexSparseMatrix::to_dense() const
{
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(rows_, cols_);
    for (Index r = 0; r < rows_; ++r)
        for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) d(r, col_indices_[k]) = values_[k];
    return d;
}

void ComplexSparseMatrix::write_matrix_market(std::ostream& out) const
{
    out << "%%MatrixMarket matrix coordinate complex general\n";
    out << rows_ << ' ' << cols_ << ' ' << nnz() << '\n';
    for (Index r = 0; r < rows_; ++r)
        for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
            out << (r + 1) << ' ' << (col_indices_[k] + 1) << ' ' << format_double(values_[k].real()) << ' '
                << format_double(values_[k].imag()) << '\n';
}

void ComplexSparseMatrix::write_matrix_market(const std::string& path) const
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_matrix_market(out);
}

ComplexSparseMatrix ComplexSparseMatrix::read_matrix_market(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
        throw std::runtime_error("missing Matrix Market banner");
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (object != "matrix" || format != "coordinate") throw std::runtime_error("only coordinate matrices supported");
    const bool is_complex = field == "complex";
    if (!is_complex && field != "real" && field != "integer") throw std::runtime_error("unsupported field " + field);
    const bool hermitian = symmetry == "hermitian";
    const bool symmetric = symmetry == "symmetric";
    if (!hermitian && !symmetric && symmetry != "general") throw std::runtime_error("unsupported symmetry " + symmetry);
    while (std::getline(in, line) && !line.empty() && line[0] == '%') {
    }
    std::istringstream size_line(line);
    Index rows = 0, cols = 0, nnz = 0;
    if (!(size_line >> rows >> cols >> nnz)) throw std::runtime_error("malformed Matrix Market size line");
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(nnz));
    for (Index k = 0; k < nnz; ++k) {
        Index i = 0, j = 0;
        double re = 0.0, im = 0.0;
        if (!(in >> i >> j >> re)) throw std::runtime_error("truncated Matrix Market body");
        if (is_complex && !(in >> im)) throw std::runtime_error("truncated Matrix Market body");
        t.push_back({i - 1, j - 1, cplx(re, im)});
        if (i != j && (hermitian || symmetric))
            t.push_back({j - 1, i - 1, hermitian ? cplx(re, -im) : cplx(re, im)});
    }
    return from_triplets(rows, cols, std::move(t));
}

ComplexSparseMatrix ComplexSparseMatrix::read_matrix_market(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_matrix_market(in);
}

} // namespace robin
