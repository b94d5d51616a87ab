#include "csdlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "csdlab/error.hpp"

namespace csdlab {

namespace {

double correct_class_probability(std::span<const double> logits, std::size_t label) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - mx);
    return std::exp(logits[label] - mx) / sum;
}

Vector ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    Vector r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double BetaFit::mode() const noexcept {
    if (interior_mode()) return (alpha - 1.0) / (alpha + beta - 2.0);
    if (alpha < beta) return 0.0;
    if (alpha > beta) return 1.0;
    return 0.5;
}

BetaFit beta_fit_moments(std::span<const double> samples) {
    if (samples.size() < 2) throw InvalidArgument("beta fit needs at least two samples");
    Vector xs(samples.begin(), samples.end());
    for (double& x : xs) {
        if (!std::isfinite(x)) throw InvalidArgument("beta fit: non-finite sample");
        x = std::clamp(x, kProbClampLow, kProbClampHigh);
    }
    const double n = static_cast<double>(xs.size());
    const double mu = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mu) * (x - mu);
    const double var = ss / (n - 1.0);
    // Rounding leaves a tiny positive variance on constant input.
    if (!(var > 1e-14 * mu * (1.0 - mu))) throw DegenerateFit("beta fit: zero sample variance");
    const double t = mu * (1.0 - mu) / var - 1.0;
    if (!(t > 0.0)) throw DegenerateFit("beta fit: variance too large for a Beta distribution");

    BetaFit fit;
    fit.alpha = mu * t;
    fit.beta = (1.0 - mu) * t;
    fit.n = xs.size();
    fit.mean = mu;
    fit.variance = var;
    return fit;
}

std::string_view to_string(Side s) noexcept { return s == Side::common ? "common" : "specific"; }

std::vector<double> component_probabilities(const CsdParams& p, const DomainData& d, Side side) {
    Matrix head = p.w_c;
    if (side == Side::specific) {
        head = domain_head(p, d.spec.id) - p.w_c;
    }
    std::vector<double> out;
    out.reserve(d.x.rows());
    for (std::size_t s = 0; s < d.x.rows(); ++s) {
        const Vector z = head * p.feature_map.forward(d.x.row(s));
        out.push_back(correct_class_probability(z, class_of(d.y[s])));
    }
    return out;
}

ComponentReport component_scores(const CsdParams& p, const MultiDomainDataset& ds) {
    ComponentReport report;
    report.specific_available = p.k > 0;
    for (const DomainData& d : ds.domains) {
        if (d.split != Split::train) continue;
        DomainComponentRecord rec;
        rec.domain = d.spec.id;
        try {
            rec.common = beta_fit_moments(component_probabilities(p, d, Side::common));
        } catch (const DegenerateFit& e) {
            rec.common_error = e.what();
        }
        if (report.specific_available) {
            try {
                rec.specific = beta_fit_moments(component_probabilities(p, d, Side::specific));
            } catch (const DegenerateFit& e) {
                rec.specific_error = e.what();
            }
        }
        report.domains.push_back(std::move(rec));
    }
    return report;
}

double angle_to_truth(std::span<const double> w, std::span<const double> w_star) {
    if (w.size() != w_star.size()) throw InvalidArgument("angle_to_truth: length mismatch");
    const double nw = norm(w);
    const double ns = norm(w_star);
    if (nw == 0.0 || ns == 0.0) throw InvalidArgument("angle_to_truth: zero vector");
    const double c = std::min(1.0, std::abs(dot(w, w_star)) / (nw * ns));
    return std::acos(c) * 180.0 / std::numbers::pi;
}

Vector scaled_common_direction(const CsdParams& p, std::size_t axis) {
    if (p.classes != 2) throw InvalidArgument("scaled_common_direction: needs a binary head");
    if (axis >= p.feature_dim()) throw InvalidArgument("scaled_common_direction: axis out of range");
    Vector diff = subtract(p.w_c.row(1), p.w_c.row(0));
    if (diff[axis] == 0.0) throw InvalidArgument("scaled_common_direction: zero coordinate on the scaling axis");
    return scale(1.0 / diff[axis], diff);
}

std::string_view to_string(EvalSet s) noexcept {
    switch (s) {
        case EvalSet::train: return "train";
        case EvalSet::train_holdout: return "train_holdout";
        case EvalSet::val: return "val";
        case EvalSet::test: return "test";
    }
    return "?";
}

double accuracy(const CsdParams& p, const MultiDomainDataset& ds, EvalSet set, Head head) {
    const Split want = set == EvalSet::val ? Split::val : set == EvalSet::test ? Split::test : Split::train;
    std::size_t hits = 0;
    std::size_t total = 0;
    for (const DomainData& d : ds.domains) {
        if (d.split != want) continue;
        const Matrix& x = set == EvalSet::train_holdout ? d.x_holdout : d.x;
        const std::vector<int>& y = set == EvalSet::train_holdout ? d.y_holdout : d.y;
        Matrix h = p.w_c;
        if (head == Head::per_domain) {
            if (d.split != Split::train || d.spec.id >= p.num_domains()) {
                throw InvalidArgument("accuracy: per-domain head requested for unseen domain " +
                                      std::to_string(d.spec.id));
            }
            h = domain_head(p, d.spec.id);
        }
        for (std::size_t s = 0; s < x.rows(); ++s) {
            const Vector z = h * p.feature_map.forward(x.row(s));
            std::size_t best = 0;
            for (std::size_t c = 1; c < z.size(); ++c) {
                if (z[c] > z[best]) best = c;
            }
            hits += best == class_of(y[s]);
            ++total;
        }
    }
    if (total == 0) throw InvalidArgument("accuracy: no samples in " + std::string(to_string(set)));
    return static_cast<double>(hits) / static_cast<double>(total);
}

Matrix stacked_heads(const CsdParams& p) {
    const std::size_t width = p.classes * p.feature_dim();
    Matrix out(p.num_domains(), width);
    for (std::size_t i = 0; i < p.num_domains(); ++i) {
        const Matrix h = domain_head(p, i);
        std::copy(h.data().begin(), h.data().end(), out.row(i).begin());
    }
    return out;
}

Vector stacked_head_spectrum(const CsdParams& p) {
    if (p.num_domains() == 0) return {};
    return svd(stacked_heads(p)).sigma;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("spearman: need two equal-length samples");
    const Vector ra = ranks(a);
    const Vector rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sab / std::sqrt(saa * sbb);
}

}  // namespace csdlab
