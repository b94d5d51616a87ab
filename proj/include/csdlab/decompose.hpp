#pragma once

// Closed-form common/specific decomposition of a bank of per-domain linear
// classifiers W (m×D, one column per domain):
//
//     W ≈ w_c·1ᵀ + W_s·Γᵀ,   w_c ⊥ Span(W_s),   rank(W_s) ≤ k
//
// The minimizer of the Frobenius residual under that constraint is the
// column mean plus the top-k SVD of the centered matrix, re-expressed so
// that the common part is orthogonal to the specific basis.

#include <cstddef>
#include <cstdint>

#include "csdlab/linalg.hpp"

namespace csdlab {

// Tolerances shared by the decomposition routines and their checks.
namespace decompose_tol {
inline constexpr double kOrthogonality = 1e-8;   // relative |⟨w_c, col_j⟩|
inline constexpr double kReconstruction = 1e-8;  // relative to 1 + ‖M‖_F
inline constexpr double kRowSpace = 1e-8;        // ‖M⁺M1 − 1‖ ≤ tol·√D
inline constexpr double kRank = 1e-8;            // relative singular-value cutoff
}  // namespace decompose_tol

struct Decomposition {
    Vector w_c;    // length m
    Matrix w_s;    // m×k
    Matrix gamma;  // D×k, row i is γ_i

    std::size_t rank() const noexcept { return w_s.cols(); }
};

struct GroundTruthModel {
    Vector e_c;  // length m
    Matrix e_s;  // m×k
};

// w_c·1ᵀ + W_s·Γᵀ.
Matrix reconstruct(const Decomposition& d);

// ‖W − w_c·1ᵀ − W_s·Γᵀ‖_F².
double decomposition_objective(const Matrix& w, const Decomposition& d);

// max_j |⟨w_c, W_s[:, j]⟩| / (‖w_c‖·‖W_s[:, j]‖); zero columns are skipped.
double orthogonality_residual(const Decomposition& d);

// Closed-form minimizer for 0 ≤ k ≤ D−1. Throws InvalidArgument for k out
// of range and DegenerateDecomposition when the all-ones vector is not in
// the row space of the rank-(k+1) approximation.
Decomposition decompose_theorem1(const Matrix& w, std::size_t k);

// Re-expresses d so that w_c ⊥ Span(W_s) while keeping the reconstruction.
// Throws DegenerateDecomposition when 1 is not in the row space of the
// reconstruction.
Decomposition orthogonalize(const Decomposition& d);

// Domain-generalizing classifier e_c − P_{E_s}·e_c.
Vector generalizing_component(const GroundTruthModel& gt);

struct IdentifiabilityReport {
    Vector target;                 // e_c − P_{E_s} e_c
    Vector recovered;              // w_c from decompose_theorem1
    double forward_error = 0.0;    // ‖recovered − target‖
    double forward_relative = 0.0; // forward_error / ‖target‖
    bool forward_pass = false;

    Vector mixed;                    // w_c' of the mixed re-expression
    double mixed_reconstruction = 0.0;  // ‖[w_c' W_s'] R [1 Γ]ᵀ − W‖_F
    double mixed_orthogonality = 0.0;   // orthogonality_residual of the mixed form
    double converse_deviation = 0.0;    // ‖mixed − target‖
    bool converse_pass = false;         // mixed differs from target by more than tol
};

// Checks both directions of the identifiability characterization on
// W = e_c·1ᵀ + E_s·Γ̂ᵀ. `seed` drives the random mixing matrix R whose first
// row is (1, 0, …, 0). Throws RankDeficientInstance if W is not exactly
// rank k+1 or Γ̂ is not rank k.
IdentifiabilityReport verify_lemma1(const GroundTruthModel& gt, const Matrix& gamma_hat, double tol,
                           std::uint64_t seed = 0);

}  // namespace csdlab
