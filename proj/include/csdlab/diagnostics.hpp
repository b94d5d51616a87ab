#pragma once

// Post-training analyses of a CSD head: Beta fits of correct-class
// probabilities under the common and specific parts, angle to the
// ground-truth direction, accuracies and the spectrum of stacked heads.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csdlab/csd_model.hpp"
#include "csdlab/datagen.hpp"
#include "csdlab/linalg.hpp"

namespace csdlab {

inline constexpr double kProbClampLow = 1e-6;
inline constexpr double kProbClampHigh = 1.0 - 1e-6;

struct BetaFit {
    double alpha = 0.0;
    double beta = 0.0;
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased sample variance

    // Interior mode (α−1)/(α+β−2) when α, β > 1; otherwise the boundary the
    // density piles up at, with interior_mode() false.
    double mode() const noexcept;
    bool interior_mode() const noexcept { return alpha > 1.0 && beta > 1.0; }
};

// Method of moments after clamping to [1e-6, 1−1e-6]. Throws
// InvalidArgument for fewer than two samples and DegenerateFit for zero
// variance or a non-positive concentration.
BetaFit beta_fit_moments(std::span<const double> samples);

enum class Side { common, specific };
std::string_view to_string(Side s) noexcept;

struct DomainComponentRecord {
    std::size_t domain = 0;
    std::optional<BetaFit> common;
    std::optional<BetaFit> specific;  // empty for k = 0 or a degenerate fit
    std::string common_error;
    std::string specific_error;
};

struct ComponentReport {
    std::vector<DomainComponentRecord> domains;  // one per training domain
    bool specific_available = false;             // false when k = 0
};

// Correct-class softmax probability of every training sample under w_c
// alone and under W_s·σ(γ_i) alone, fitted per domain.
ComponentReport component_scores(const CsdParams& p, const MultiDomainDataset& ds);

// Per-sample correct-class probabilities for one domain and side.
std::vector<double> component_probabilities(const CsdParams& p, const DomainData& d, Side side);

// Sign-invariant angle in degrees. Throws InvalidArgument on a zero vector
// or a length mismatch.
double angle_to_truth(std::span<const double> w, std::span<const double> w_star);

// w_c[1] − w_c[0] of a binary head, divided by its coordinate along
// the given axis. Throws InvalidArgument for C ≠ 2 or a zero coordinate.
Vector scaled_common_direction(const CsdParams& p, std::size_t axis);

enum class EvalSet { train, train_holdout, val, test };
enum class Head { common, per_domain };

std::string_view to_string(EvalSet s) noexcept;

// Fraction of correct predictions. train uses the training samples,
// train_holdout the held-out samples of training domains. The per-domain
// head is only defined for training domains (InvalidArgument otherwise).
// Throws InvalidArgument when the selected set has no samples.
double accuracy(const CsdParams& p, const MultiDomainDataset& ds, EvalSet set, Head head);

// D×(C·m) matrix whose row i is the flattened head of domain i.
Matrix stacked_heads(const CsdParams& p);
Vector stacked_head_spectrum(const CsdParams& p);

// Spearman rank correlation with average ranks for ties. NaN when either
// side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace csdlab
