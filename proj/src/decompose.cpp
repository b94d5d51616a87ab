#include "csdlab/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "csdlab/error.hpp"
#include "csdlab/rng.hpp"

namespace csdlab {

namespace {

// Top-k factors (U_k·Σ_k, V_k) of `a`, zero-padded when k exceeds
// min(rows, cols).
std::pair<Matrix, Matrix> scaled_factors(const Matrix& a, std::size_t k) {
    const std::size_t avail = std::min({k, a.rows(), a.cols()});
    const SvdResult t = truncated_svd(a, avail);
    Matrix left(a.rows(), k);
    Matrix right(a.cols(), k);
    for (std::size_t j = 0; j < avail; ++j) {
        for (std::size_t i = 0; i < a.rows(); ++i) left(i, j) = t.u(i, j) * t.sigma[j];
        for (std::size_t i = 0; i < a.cols(); ++i) right(i, j) = t.v(i, j);
    }
    return {std::move(left), std::move(right)};
}

// Steps 3-4: w_c ← (Mᵀ)⁺1 / ‖(Mᵀ)⁺1‖², then W_s·Γᵀ ← M − w_c·1ᵀ refactored
// through a rank-k truncated SVD.
Decomposition orthogonal_form(const Matrix& m, std::size_t k) {
    const std::size_t d = m.cols();
    const Vector one = ones(d);
    const Matrix pinv = pseudoinverse(m);

    const Vector projected = pinv * (m * one);
    const double row_space_gap = norm(subtract(projected, one));
    if (row_space_gap > decompose_tol::kRowSpace * std::sqrt(static_cast<double>(d))) {
        throw DegenerateDecomposition(
            "all-ones vector is not in the row space of the reconstruction (gap " +
            std::to_string(row_space_gap) + "); the common component cannot be normalized");
    }

    const Vector u = transpose_times(pinv, one);
    const double u2 = dot(u, u);
    if (!(u2 > 0.0)) {
        throw DegenerateDecomposition("pseudoinverse image of the all-ones vector is zero");
    }
    Decomposition out;
    out.w_c = scale(1.0 / u2, u);
    auto [w_s, gamma] = scaled_factors(m - outer(out.w_c, one), k);
    out.w_s = std::move(w_s);
    out.gamma = std::move(gamma);
    return out;
}

}  // namespace

Matrix reconstruct(const Decomposition& d) {
    const std::size_t domains = d.gamma.rows();
    return outer(d.w_c, ones(domains)) + d.w_s * d.gamma.transpose();
}

double decomposition_objective(const Matrix& w, const Decomposition& d) {
    if (d.w_c.size() != w.rows() || d.w_s.rows() != w.rows() || d.gamma.rows() != w.cols() ||
        d.w_s.cols() != d.gamma.cols()) {
        throw InvalidArgument("decomposition_objective: decomposition shapes do not match W");
    }
    const double r = frobenius_norm(w - reconstruct(d));
    return r * r;
}

double orthogonality_residual(const Decomposition& d) {
    const double wn = norm(d.w_c);
    double worst = 0.0;
    if (wn == 0.0) return worst;
    for (std::size_t j = 0; j < d.w_s.cols(); ++j) {
        const Vector col = d.w_s.col(j);
        const double cn = norm(col);
        if (cn == 0.0) continue;
        worst = std::max(worst, std::abs(dot(d.w_c, col)) / (wn * cn));
    }
    return worst;
}

Decomposition decompose_theorem1(const Matrix& w, std::size_t k) {
    if (!w.all_finite()) throw InvalidInput("decompose_theorem1: non-finite entry in W");
    const std::size_t domains = w.cols();
    if (domains == 0 || k > domains - 1) {
        throw InvalidArgument("decompose_theorem1: k=" + std::to_string(k) + " must lie in [0, D-1] with D=" +
                              std::to_string(domains));
    }

    const Vector mean = column_mean(w);
    if (k == 0) {
        return {mean, Matrix(w.rows(), 0), Matrix(domains, 0)};
    }

    const Vector one = ones(domains);
    auto [w_s, gamma] = scaled_factors(w - outer(mean, one), k);
    const Matrix m = outer(mean, one) + w_s * gamma.transpose();
    return orthogonal_form(m, k);
}

Decomposition orthogonalize(const Decomposition& d) {
    if (d.w_s.rows() != d.w_c.size() || d.w_s.cols() != d.gamma.cols()) {
        throw InvalidArgument("orthogonalize: inconsistent decomposition shapes");
    }
    return orthogonal_form(reconstruct(d), d.rank());
}

Vector generalizing_component(const GroundTruthModel& gt) {
    return subtract(gt.e_c, project_onto_span(gt.e_s, gt.e_c));
}

IdentifiabilityReport verify_lemma1(const GroundTruthModel& gt, const Matrix& gamma_hat, double tol,
                           std::uint64_t seed) {
    const std::size_t m = gt.e_c.size();
    const std::size_t k = gt.e_s.cols();
    const std::size_t domains = gamma_hat.rows();
    if (gt.e_s.rows() != m || gamma_hat.cols() != k) {
        throw InvalidArgument("verify_lemma1: shapes of e_c, E_s and Γ̂ disagree");
    }

    const Matrix w = outer(gt.e_c, ones(domains)) + gt.e_s * gamma_hat.transpose();
    const Vector sigma = svd(w).sigma;
    if (sigma.size() < k + 1 || sigma.front() == 0.0) {
        throw RankDeficientInstance("verify_lemma1: W is too small to have rank k+1");
    }
    const double cutoff = decompose_tol::kRank * sigma.front();
    if (!(sigma[k] > cutoff) || (sigma.size() > k + 1 && sigma[k + 1] > cutoff)) {
        throw RankDeficientInstance("verify_lemma1: W = e_c 1ᵀ + E_s Γ̂ᵀ is not of rank k+1=" +
                                    std::to_string(k + 1));
    }
    if (k > 0) {
        const Vector gs = svd(gamma_hat).sigma;
        if (!(gs[k - 1] > decompose_tol::kRank * gs.front())) {
            throw RankDeficientInstance("verify_lemma1: Γ̂ is not of rank k");
        }
    }

    IdentifiabilityReport report;
    report.target = generalizing_component(gt);
    const double target_norm = norm(report.target);

    const Decomposition d = decompose_theorem1(w, k);
    report.recovered = d.w_c;
    report.forward_error = norm(subtract(d.w_c, report.target));
    report.forward_relative = report.forward_error / target_norm;
    report.forward_pass = report.forward_relative <= tol;

    // Random R with first row (1, 0, …, 0); the rest is resampled until R is
    // comfortably invertible.
    CounterRng rng(seed, 0);
    Matrix r = Matrix::identity(k + 1);
    for (;;) {
        for (std::size_t i = 1; i <= k; ++i) {
            for (std::size_t j = 0; j <= k; ++j) r(i, j) = rng.normal();
        }
        const Vector rs = svd(r).sigma;
        if (rs.back() > 1e-3 * rs.front()) break;
    }

    Matrix factors(m, k + 1);
    factors.set_col(0, d.w_c);
    for (std::size_t j = 0; j < k; ++j) factors.set_col(j + 1, d.w_s.col(j));
    Matrix loadings(domains, k + 1);
    loadings.set_col(0, ones(domains));
    for (std::size_t j = 0; j < k; ++j) loadings.set_col(j + 1, d.gamma.col(j));

    const Matrix mixed_factors = factors * pseudoinverse(r);
    const Matrix mixed_loadings = loadings * r.transpose();
    report.mixed_reconstruction = frobenius_norm(mixed_factors * mixed_loadings.transpose() - w);

    Decomposition mixed;
    mixed.w_c = mixed_factors.col(0);
    mixed.w_s = Matrix(m, k);
    mixed.gamma = Matrix(domains, k);
    for (std::size_t j = 0; j < k; ++j) {
        mixed.w_s.set_col(j, mixed_factors.col(j + 1));
        mixed.gamma.set_col(j, mixed_loadings.col(j + 1));
    }
    report.mixed = mixed.w_c;
    report.mixed_orthogonality = orthogonality_residual(mixed);
    report.converse_deviation = norm(subtract(mixed.w_c, report.target));
    report.converse_pass = report.converse_deviation > tol * target_norm;
    return report;
}

}  // namespace csdlab
