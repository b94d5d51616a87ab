#include <doctest.h>

#include <cmath>

#include "csdlab/csd_model.hpp"
#include "csdlab/diagnostics.hpp"
#include "csdlab/error.hpp"
#include "csdlab/rng.hpp"
#include "oracles.hpp"

using namespace csdlab;

namespace {

// Integer-shape gamma as a sum of exponentials; Beta(a, b) = X/(X+Y).
double gamma_int(int shape, CounterRng& rng) {
    double s = 0.0;
    for (int i = 0; i < shape; ++i) s -= std::log(1.0 - rng.uniform());
    return s;
}

MultiDomainDataset small_dataset(std::uint64_t seed = 0) {
    GeneratorConfig c = reference_generator_config();
    c.n_per_domain = 40;
    c.n_holdout_per_domain = 20;
    c.seed = seed;
    return generate(c);
}

CsdParams params_for(const MultiDomainDataset& ds, std::size_t k, std::uint64_t seed) {
    CsdConfig c;
    c.k = k;
    TrainConfig t;
    t.seed = seed;
    return init_params(c, t, ds.config.m, ds.config.d_train);
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("beta fit of uniform samples") {
    CounterRng rng(1, 0);
    std::vector<double> u(100000);
    for (double& v : u) v = rng.uniform();
    const BetaFit f = beta_fit_moments(u);
    CHECK(std::abs(f.alpha - 1.0) <= 0.05);
    CHECK(std::abs(f.beta - 1.0) <= 0.05);
    CHECK(f.n == 100000);
}

TEST_CASE("beta fit of Beta(2, 5) samples") {
    CounterRng rng(2, 0);
    std::vector<double> s(200000);
    for (double& v : s) {
        const double x = gamma_int(2, rng), y = gamma_int(5, rng);
        v = x / (x + y);
    }
    const BetaFit f = beta_fit_moments(s);
    CHECK(std::abs(f.alpha - 2.0) <= 0.1);
    CHECK(std::abs(f.beta - 5.0) <= 0.25);
    CHECK(f.interior_mode());
    CHECK(std::abs(f.mode() - 0.2) <= 0.01);
}

TEST_CASE("beta fit moment identities") {
    CounterRng rng(3, 0);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> s(50);
        for (double& v : s) v = 0.1 + 0.8 * rng.uniform() * rng.uniform();
        const BetaFit f = beta_fit_moments(s);
        const double ab = f.alpha + f.beta;
        CHECK(std::abs(f.alpha / ab - f.mean) <= 1e-9);
        CHECK(std::abs(f.alpha * f.beta / (ab * ab * (ab + 1.0)) - f.variance) <= 1e-9);

        double mean = 0.0;
        for (double v : s) mean += v;
        mean /= 50.0;
        double var = 0.0;
        for (double v : s) var += (v - mean) * (v - mean);
        var /= 49.0;
        CHECK(std::abs(mean - f.mean) <= 1e-12);
        CHECK(std::abs(var - f.variance) <= 1e-12);
    }
}

TEST_CASE("beta fit failure modes and boundary modes") {
    const std::vector<double> constant(10, 0.3);
    CHECK_THROWS_AS(beta_fit_moments(constant), DegenerateFit);
    const std::vector<double> one{0.5};
    CHECK_THROWS_AS(beta_fit_moments(one), InvalidArgument);
    // Values outside [0, 1] are clamped, so all-zero input is still degenerate.
    const std::vector<double> zeros{0.0, 0.0, -1.0};
    CHECK_THROWS_AS(beta_fit_moments(zeros), DegenerateFit);

    BetaFit b;
    b.alpha = 0.5;
    b.beta = 2.0;
    CHECK(!b.interior_mode());
    CHECK(b.mode() == 0.0);
    b.alpha = 3.0;
    b.beta = 0.5;
    CHECK(b.mode() == 1.0);
    b.alpha = b.beta = 0.5;
    CHECK(b.mode() == 0.5);
    b.alpha = b.beta = 3.0;
    CHECK(b.mode() == 0.5);
}

TEST_CASE("angle to truth") {
    CHECK(angle_to_truth(Vector{1, 0}, Vector{1, 0}) == doctest::Approx(0.0));
    CHECK(angle_to_truth(Vector{0, 1}, Vector{1, 0}) == doctest::Approx(90.0));
    CHECK(angle_to_truth(Vector{-1, 0}, Vector{1, 0}) == doctest::Approx(0.0));
    CHECK(angle_to_truth(Vector{1, 0.2}, Vector{1, 0}) == doctest::Approx(11.309932474).epsilon(1e-9));
    CHECK(angle_to_truth(Vector{50, 10}, Vector{3, 0}) == doctest::Approx(11.309932474).epsilon(1e-9));
    CHECK_THROWS_AS(angle_to_truth(Vector{0, 0}, Vector{1, 0}), InvalidArgument);
    CHECK_THROWS_AS(angle_to_truth(Vector{1, 0, 0}, Vector{1, 0}), InvalidArgument);
}

TEST_CASE("accuracy against naive counting") {
    const MultiDomainDataset ds = small_dataset();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const CsdParams p = params_for(ds, 1, seed);
        std::size_t hit = 0, total = 0;
        for (const DomainData& d : ds.domains) {
            if (d.split != Split::test) continue;
            for (std::size_t s = 0; s < d.x.rows(); ++s) {
                const Vector z = p.w_c * d.x.row(s);
                const std::size_t pred = z[1] > z[0] ? 1 : 0;
                hit += pred == class_of(d.y[s]);
                ++total;
            }
        }
        CHECK(accuracy(p, ds, EvalSet::test, Head::common) == doctest::Approx(double(hit) / double(total)));

        std::size_t hit2 = 0, total2 = 0;
        for (std::size_t i = 0; i < ds.config.d_train; ++i) {
            const Matrix h = domain_head(p, i);
            const DomainData& d = ds.domains[i];
            for (std::size_t s = 0; s < d.x_holdout.rows(); ++s) {
                const Vector z = h * d.x_holdout.row(s);
                hit2 += (z[1] > z[0] ? 1u : 0u) == class_of(d.y_holdout[s]);
                ++total2;
            }
        }
        CHECK(accuracy(p, ds, EvalSet::train_holdout, Head::per_domain) ==
              doctest::Approx(double(hit2) / double(total2)));
    }
    CHECK_THROWS_AS(accuracy(params_for(ds, 1, 0), ds, EvalSet::test, Head::per_domain), InvalidArgument);
}

TEST_CASE("zero head sits at chance with ties to class 0") {
    const MultiDomainDataset ds = small_dataset();
    CsdParams p = params_for(ds, 0, 0);
    for (double& v : p.w_c.data()) v = 0.0;
    std::size_t neg = 0, total = 0;
    for (const DomainData& d : ds.domains)
        if (d.split == Split::train)
            for (int y : d.y) {
                neg += y < 0;
                ++total;
            }
    CHECK(accuracy(p, ds, EvalSet::train, Head::common) == doctest::Approx(double(neg) / double(total)));
}

TEST_CASE("stacked head spectrum") {
    const MultiDomainDataset ds = small_dataset();
    for (std::size_t k : {0u, 1u, 2u}) {
        CsdParams p = params_for(ds, k, 3);
        CounterRng rng(4, k);
        for (double& v : p.gamma_raw.data()) v = rng.normal();
        const Matrix s = stacked_heads(p);
        REQUIRE(s.rows() == 10);
        REQUIRE(s.cols() == 4);
        for (std::size_t i = 0; i < 10; ++i) {
            const Matrix h = oracle::domain_head(p, i);
            for (std::size_t c = 0; c < 2; ++c)
                for (std::size_t l = 0; l < 2; ++l) CHECK(std::abs(s(i, c * 2 + l) - h(c, l)) <= 1e-14);
        }
        const Vector sv = stacked_head_spectrum(p);
        const Vector ref = oracle::singular_values(s);
        std::size_t nonzero = 0;
        for (std::size_t i = 0; i < sv.size(); ++i) {
            CHECK(std::abs(sv[i] - ref[i]) <= 1e-7 * (1.0 + ref[0]));
            nonzero += sv[i] > 1e-9 * sv[0];
        }
        CHECK(nonzero <= k + 1);
        if (k == 0) CHECK(nonzero == 1);
    }
}

TEST_CASE("component probabilities") {
    const MultiDomainDataset ds = small_dataset();
    CsdParams p = params_for(ds, 1, 5);
    for (double& v : p.gamma_raw.data()) v = 0.3;
    const DomainData& d = ds.domains[0];
    const auto common = component_probabilities(p, d, Side::common);
    const auto specific = component_probabilities(p, d, Side::specific);
    REQUIRE(common.size() == d.x.rows());
    Matrix spec_head = domain_head(p, 0) - p.w_c;
    for (std::size_t s = 0; s < d.x.rows(); ++s) {
        const std::size_t y = class_of(d.y[s]);
        CHECK(common[s] == doctest::Approx(std::exp(-oracle::ce(p.w_c, Vector(d.x.row(s).begin(), d.x.row(s).end()), y))));
        CHECK(specific[s] ==
              doctest::Approx(std::exp(-oracle::ce(spec_head, Vector(d.x.row(s).begin(), d.x.row(s).end()), y))));
    }
}

TEST_CASE("untrained parameters give near-chance fits") {
    const MultiDomainDataset ds = small_dataset();
    CsdParams p = params_for(ds, 1, 6);
    for (double& v : p.w_c.data()) v *= 1e-3;
    for (double& v : p.w_s.data) v *= 1e-3;
    const ComponentReport r = component_scores(p, ds);
    CHECK(r.specific_available);
    REQUIRE(r.domains.size() == 10);
    for (const DomainComponentRecord& d : r.domains) {
        REQUIRE(d.common.has_value());
        CHECK(std::abs(d.common->mean - 0.5) <= 0.01);
    }

    const ComponentReport r0 = component_scores(params_for(ds, 0, 6), ds);
    CHECK(!r0.specific_available);
    for (const DomainComponentRecord& d : r0.domains) CHECK(!d.specific.has_value());
}

TEST_CASE("scaled common direction") {
    const MultiDomainDataset ds = small_dataset();
    CsdParams p = params_for(ds, 1, 7);
    p.w_c = Matrix::from_rows({{0.5, 1.0}, {1.5, 1.2}});
    const Vector v = scaled_common_direction(p, 0);
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(v[1] == doctest::Approx(0.2));
    p.w_c = Matrix::from_rows({{0.5, 1.0}, {0.5, 1.2}});
    CHECK_THROWS_AS(scaled_common_direction(p, 0), InvalidArgument);
}

TEST_CASE("spearman") {
    CHECK(spearman(Vector{1, 2, 3, 4}, Vector{10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman(Vector{1, 2, 3, 4}, Vector{4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(spearman(Vector{1, 2, 3}, Vector{1, 4, 9}) == doctest::Approx(1.0));
    // Ties take average ranks: (1, 2.5, 2.5, 4) vs (1, 2, 3, 4).
    CHECK(spearman(Vector{1, 2, 2, 3}, Vector{1, 2, 3, 4}) == doctest::Approx(0.9486832980505138));
    CHECK(std::isnan(spearman(Vector{1, 1, 1}, Vector{1, 2, 3})));
}

}  // TEST_SUITE
