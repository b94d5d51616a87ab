#pragma once

// Small dense linear-algebra kernel in double precision.
//
// Matrices are row-major and sized for the problems this library deals
// with (a few hundred rows/columns at most). Zero-sized dimensions are
// allowed so that rank-0 factors can be represented as empty matrices.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace csdlab {

using Vector = std::vector<double>;

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    // Throws InvalidInput if `data` has the wrong length or a non-finite entry.
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    // Builds a matrix whose columns are the given vectors (all equal length).
    static Matrix from_columns(std::span<const Vector> columns);
    static Matrix diagonal(std::span<const double> diag);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    Vector col(std::size_t j) const;
    void set_col(std::size_t j, std::span<const double> values);

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    Matrix transpose() const;
    // Leading `n` columns.
    Matrix left_cols(std::size_t n) const;

    bool all_finite() const noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Vector operator*(const Matrix& a, std::span<const double> v);

// aᵀ v without forming the transpose.
Vector transpose_times(const Matrix& a, std::span<const double> v);
Matrix outer(std::span<const double> u, std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);
Vector add(std::span<const double> a, std::span<const double> b);
Vector subtract(std::span<const double> a, std::span<const double> b);
Vector scale(double s, std::span<const double> v);
Vector ones(std::size_t n);

double frobenius_norm(const Matrix& a);
// Largest singular value.
double operator_norm(const Matrix& a);
// Mean of the columns, i.e. (1/D)·A·1.
Vector column_mean(const Matrix& a);

struct SvdResult {
    Matrix u;      // m×r, orthonormal columns
    Vector sigma;  // length r, non-increasing, non-negative
    Matrix v;      // n×r, orthonormal columns

    std::size_t rank() const noexcept { return sigma.size(); }
    Matrix reconstruct() const;
};

// Thin SVD with r = min(rows, cols) via one-sided Jacobi rotations.
// Sign convention: in every column of u the entry of largest magnitude is
// non-negative (ties go to the lowest row index).
SvdResult svd(const Matrix& a);

// Top-k factors of svd(a); k = 0 yields empty factors.
SvdResult truncated_svd(const Matrix& a, std::size_t k);

// Moore-Penrose pseudoinverse. Singular values at or below
// pinv_cutoff(a) are treated as zero.
Matrix pseudoinverse(const Matrix& a);
double pinv_cutoff(std::size_t rows, std::size_t cols, double sigma_max);

// Orthogonal projection of v onto the column span of `basis`.
Vector project_onto_span(const Matrix& basis, std::span<const double> v);
// The m×m projector B(BᵀB)⁺Bᵀ.
Matrix projection_matrix(const Matrix& basis);

}  // namespace csdlab
