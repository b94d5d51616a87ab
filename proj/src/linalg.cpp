#include "csdlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "csdlab/error.hpp"

namespace csdlab {

namespace {

constexpr int kMaxJacobiSweeps = 60;
constexpr double kJacobiRelTol = 1e-15;
constexpr double kJacobiAbsTol = 1e-14;  // scaled by ‖A‖_F

std::string shape(const Matrix& a) {
    return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw InvalidArgument(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
    }
}

// Column-major working copy used by the Jacobi iteration; rotations touch
// whole columns so contiguous storage per column keeps them cache friendly.
using Columns = std::vector<Vector>;

Columns to_columns(const Matrix& a) {
    Columns cols(a.cols(), Vector(a.rows()));
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) cols[j][i] = a(i, j);
    }
    return cols;
}

Matrix from_column_storage(const Columns& cols, std::size_t rows) {
    Matrix m(rows, cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (std::size_t i = 0; i < rows; ++i) m(i, j) = cols[j][i];
    }
    return m;
}

// Extends `basis` (orthonormal vectors in R^n) with one more unit vector
// orthogonal to all of them, scanning the standard basis in order.
Vector complete_basis(const Columns& basis, std::size_t n) {
    for (std::size_t e = 0; e < n; ++e) {
        Vector w(n, 0.0);
        w[e] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : basis) {
                const double c = dot(b, w);
                for (std::size_t i = 0; i < n; ++i) w[i] -= c * b[i];
            }
        }
        const double len = norm(w);
        if (len > 0.5) {
            for (double& x : w) x /= len;
            return w;
        }
    }
    throw InvalidArgument("complete_basis: no room left for another orthonormal vector");
}

// Hestenes one-sided Jacobi for a tall matrix (rows >= cols).
SvdResult jacobi_tall(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    Columns u = to_columns(a);
    Columns v(n, Vector(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

    const double fro = frobenius_norm(a);
    const double abs_floor = (kJacobiAbsTol * fro) * (kJacobiAbsTol * fro);

    for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = dot(u[p], u[p]);
                const double beta = dot(u[q], u[q]);
                const double gamma = dot(u[p], u[q]);
                if (std::abs(gamma) <= kJacobiRelTol * std::sqrt(alpha * beta) ||
                    std::abs(gamma) <= abs_floor) {
                    continue;
                }
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double up = u[p][i];
                    const double uq = u[q][i];
                    u[p][i] = c * up - s * uq;
                    u[q][i] = s * up + c * uq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v[p][i];
                    const double vq = v[q][i];
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    Vector sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = norm(u[j]);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    const double sigma_max = n > 0 ? sigma[order[0]] : 0.0;
    const double negligible = sigma_max * static_cast<double>(std::max(m, n)) *
                              std::numeric_limits<double>::epsilon();

    Columns u_sorted;
    Columns v_sorted;
    Vector sigma_sorted;
    u_sorted.reserve(n);
    for (std::size_t idx : order) {
        const double s = sigma[idx];
        if (s > negligible && s > 0.0) {
            Vector col = u[idx];
            for (double& x : col) x /= s;
            u_sorted.push_back(std::move(col));
        } else {
            u_sorted.push_back(complete_basis(u_sorted, m));
        }
        v_sorted.push_back(v[idx]);
        sigma_sorted.push_back(s);
    }
    return {from_column_storage(u_sorted, m), std::move(sigma_sorted), from_column_storage(v_sorted, n)};
}

void normalize_signs(SvdResult& r) {
    for (std::size_t j = 0; j < r.u.cols(); ++j) {
        std::size_t best = 0;
        double best_abs = -1.0;
        for (std::size_t i = 0; i < r.u.rows(); ++i) {
            const double x = std::abs(r.u(i, j));
            if (x > best_abs) {
                best_abs = x;
                best = i;
            }
        }
        if (r.u.rows() > 0 && r.u(best, j) < 0.0) {
            for (std::size_t i = 0; i < r.u.rows(); ++i) r.u(i, j) = -r.u(i, j);
            for (std::size_t i = 0; i < r.v.rows(); ++i) r.v(i, j) = -r.v(i, j);
        }
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw InvalidInput("Matrix: data length " + std::to_string(data_.size()) + " does not match " +
                           std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (!all_finite()) throw InvalidInput("Matrix: non-finite entry");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw InvalidInput("Matrix::from_rows: ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Matrix(r, c, std::move(data));
}

Matrix Matrix::from_columns(std::span<const Vector> columns) {
    const std::size_t c = columns.size();
    const std::size_t r = c ? columns[0].size() : 0;
    Matrix m(r, c);
    for (std::size_t j = 0; j < c; ++j) {
        if (columns[j].size() != r) throw InvalidInput("Matrix::from_columns: ragged columns");
        m.set_col(j, columns[j]);
    }
    if (!m.all_finite()) throw InvalidInput("Matrix::from_columns: non-finite entry");
    return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
    Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
}

Vector Matrix::col(std::size_t j) const {
    Vector out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
}

void Matrix::set_col(std::size_t j, std::span<const double> values) {
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = values[i];
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    }
    return t;
}

Matrix Matrix::left_cols(std::size_t n) const {
    Matrix out(rows_, n);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < n; ++j) out(i, j) = (*this)(i, j);
    }
    return out;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "operator+");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "operator-");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw InvalidArgument("operator*: inner dimensions differ " + shape(a) + " * " + shape(b));
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t l = 0; l < a.cols(); ++l) {
            const double x = a(i, l);
            if (x == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += x * b(l, j);
        }
    }
    return out;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix out = a;
    for (double& x : out.data()) x *= s;
    return out;
}

Vector operator*(const Matrix& a, std::span<const double> v) {
    if (a.cols() != v.size()) {
        throw InvalidArgument("matrix-vector product: " + shape(a) + " times length " + std::to_string(v.size()));
    }
    Vector out(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), v);
    return out;
}

Vector transpose_times(const Matrix& a, std::span<const double> v) {
    if (a.rows() != v.size()) {
        throw InvalidArgument("transpose_times: " + shape(a) + " transposed times length " +
                              std::to_string(v.size()));
    }
    Vector out(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out[j] += a(i, j) * v[i];
    }
    return out;
}

Matrix outer(std::span<const double> u, std::span<const double> v) {
    Matrix out(u.size(), v.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        for (std::size_t j = 0; j < v.size(); ++j) out(i, j) = u[i] * v[j];
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vector add(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("add: length mismatch");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("subtract: length mismatch");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Vector scale(double s, std::span<const double> v) {
    Vector out(v.begin(), v.end());
    for (double& x : out) x *= s;
    return out;
}

Vector ones(std::size_t n) { return Vector(n, 1.0); }

double frobenius_norm(const Matrix& a) { return norm(a.data()); }

double operator_norm(const Matrix& a) {
    if (a.empty()) return 0.0;
    return svd(a).sigma.front();
}

Vector column_mean(const Matrix& a) {
    Vector out(a.rows(), 0.0);
    if (a.cols() == 0) return out;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j);
        out[i] = s / static_cast<double>(a.cols());
    }
    return out;
}

Matrix SvdResult::reconstruct() const {
    Matrix scaled = u;
    for (std::size_t i = 0; i < scaled.rows(); ++i) {
        for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(i, j) *= sigma[j];
    }
    return scaled * v.transpose();
}

SvdResult svd(const Matrix& a) {
    if (!a.all_finite()) throw InvalidInput("svd: non-finite entry");
    if (a.rows() == 0 || a.cols() == 0) {
        return {Matrix(a.rows(), 0), {}, Matrix(a.cols(), 0)};
    }
    SvdResult r;
    if (a.rows() >= a.cols()) {
        r = jacobi_tall(a);
    } else {
        SvdResult t = jacobi_tall(a.transpose());
        r = {std::move(t.v), std::move(t.sigma), std::move(t.u)};
    }
    normalize_signs(r);
    return r;
}

SvdResult truncated_svd(const Matrix& a, std::size_t k) {
    const std::size_t full = std::min(a.rows(), a.cols());
    if (k > full) {
        throw InvalidArgument("truncated_svd: k=" + std::to_string(k) + " exceeds min(rows, cols)=" +
                              std::to_string(full));
    }
    SvdResult s = svd(a);
    return {s.u.left_cols(k), Vector(s.sigma.begin(), s.sigma.begin() + static_cast<std::ptrdiff_t>(k)),
            s.v.left_cols(k)};
}

double pinv_cutoff(std::size_t rows, std::size_t cols, double sigma_max) {
    return 1e-12 * static_cast<double>(std::max(rows, cols)) * sigma_max;
}

Matrix pseudoinverse(const Matrix& a) {
    const SvdResult s = svd(a);
    Matrix out(a.cols(), a.rows());
    if (s.rank() == 0) return out;
    const double tau = pinv_cutoff(a.rows(), a.cols(), s.sigma.front());
    for (std::size_t l = 0; l < s.rank(); ++l) {
        if (s.sigma[l] <= tau) break;
        const double inv = 1.0 / s.sigma[l];
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double vi = s.v(i, l) * inv;
            for (std::size_t j = 0; j < a.rows(); ++j) out(i, j) += vi * s.u(j, l);
        }
    }
    return out;
}

Matrix projection_matrix(const Matrix& basis) {
    const std::size_t m = basis.rows();
    Matrix p(m, m);
    const SvdResult s = svd(basis);
    if (s.rank() == 0) return p;
    const double tau = pinv_cutoff(basis.rows(), basis.cols(), s.sigma.front());
    for (std::size_t l = 0; l < s.rank(); ++l) {
        if (s.sigma[l] <= tau) break;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) p(i, j) += s.u(i, l) * s.u(j, l);
        }
    }
    return p;
}

Vector project_onto_span(const Matrix& basis, std::span<const double> v) {
    if (basis.rows() != v.size()) {
        throw InvalidArgument("project_onto_span: basis has " + std::to_string(basis.rows()) +
                              " rows but vector has length " + std::to_string(v.size()));
    }
    Vector out(v.size(), 0.0);
    const SvdResult s = svd(basis);
    if (s.rank() == 0) return out;
    const double tau = pinv_cutoff(basis.rows(), basis.cols(), s.sigma.front());
    for (std::size_t l = 0; l < s.rank(); ++l) {
        if (s.sigma[l] <= tau) break;
        double c = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) c += s.u(i, l) * v[i];
        for (std::size_t i = 0; i < v.size(); ++i) out[i] += c * s.u(i, l);
    }
    return out;
}

}  // namespace csdlab
