#include <doctest.h>

#include <cmath>

#include "csdlab/decompose.hpp"
#include "csdlab/error.hpp"
#include "csdlab/linalg.hpp"
#include "csdlab/rng.hpp"
#include "oracles.hpp"

using namespace csdlab;

namespace {

Vector random_vector(std::size_t n, CounterRng& rng) {
    Vector v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

double naive_objective(const Matrix& w, const Decomposition& d) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) {
            double v = w(i, j) - d.w_c[i];
            for (std::size_t l = 0; l < d.w_s.cols(); ++l) v -= d.w_s(i, l) * d.gamma(j, l);
            s += v * v;
        }
    return s;
}

// Random feasible point: w_c projected off a random specific basis.
Decomposition random_feasible(std::size_t m, std::size_t d, std::size_t k, CounterRng& rng) {
    Decomposition out;
    out.w_s = oracle::random_matrix(m, k, rng);
    out.gamma = oracle::random_matrix(d, k, rng);
    const Vector raw = random_vector(m, rng);
    out.w_c = subtract(raw, project_onto_span(out.w_s, raw));
    return out;
}

}  // namespace

TEST_SUITE("decompose") {

TEST_CASE("k=0 returns the column mean") {
    CounterRng rng(21, 0);
    const Matrix w = oracle::random_matrix(4, 7, rng);
    const Decomposition d = decompose_theorem1(w, 0);
    const Vector mean = column_mean(w);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(d.w_c[i] - mean[i]) <= 1e-12);
    CHECK(d.w_s.cols() == 0);
    CHECK(d.gamma.cols() == 0);
    CHECK(d.gamma.rows() == 7);
}

TEST_CASE("k=D-1 gives the normalized pseudoinverse image of ones") {
    CounterRng rng(22, 0);
    for (int t = 0; t < 10; ++t) {
        const Matrix w = oracle::random_matrix(8, 5, rng);
        const Decomposition d = decompose_theorem1(w, 4);
        const Vector expected = oracle::normalized_pinv_ones(w);
        CHECK(norm(subtract(d.w_c, expected)) <= 1e-10 * (1.0 + norm(expected)));
    }
}

TEST_CASE("argument checks") {
    const Matrix w(3, 4, 1.0);
    CHECK_THROWS_AS(decompose_theorem1(w, 4), InvalidArgument);
    Decomposition bad;
    bad.w_c = Vector{1, 2};
    bad.w_s = Matrix(3, 1);
    bad.gamma = Matrix(4, 1);
    CHECK_THROWS_AS(decomposition_objective(w, bad), InvalidArgument);
}

TEST_CASE("objective matches a naive loop and the trivial cases") {
    CounterRng rng(23, 0);
    const Matrix w = oracle::random_matrix(5, 6, rng);
    const Decomposition d = random_feasible(5, 6, 2, rng);
    CHECK(decomposition_objective(w, d) == doctest::Approx(naive_objective(w, d)).epsilon(1e-13));

    Decomposition zero{Vector(5, 0.0), Matrix(5, 2), Matrix(6, 2)};
    CHECK(decomposition_objective(w, zero) == doctest::Approx(oracle::fro2(w)).epsilon(1e-14));
    const Matrix exact = reconstruct(d);
    CHECK(decomposition_objective(exact, d) <= 1e-12 * oracle::fro2(exact));
}

TEST_CASE("random 6x8, k=2 against a sphere-search oracle") {
    CounterRng rng(24, 0);
    const Matrix w = oracle::random_matrix(6, 8, rng);
    const double f = decomposition_objective(w, decompose_theorem1(w, 2));
    const double best = oracle::sphere_search_oracle(w, 2, 20, 400, 24);
    CHECK(f <= best * (1.0 + 1e-6));
    CHECK(std::abs(f - best) <= 1e-6 * best);
    const double pg = oracle::projected_gradient_oracle(w, 2, 20, 2000, 24);
    CHECK(std::abs(f - pg) <= 1e-6 * pg);
}

TEST_CASE("output invariants on random instances") {
    CounterRng rng(25, 0);
    for (int t = 0; t < 30; ++t) {
        const std::size_t m = 2 + rng.below(6), d = 2 + rng.below(7);
        const std::size_t k = rng.below(d);
        const Matrix w = oracle::random_matrix(m, d, rng);
        Decomposition dec;
        try {
            dec = decompose_theorem1(w, k);
        } catch (const DegenerateDecomposition&) {
            continue;
        }
        REQUIRE(dec.w_c.size() == m);
        REQUIRE(dec.w_s.rows() == m);
        REQUIRE(dec.w_s.cols() == k);
        REQUIRE(dec.gamma.rows() == d);
        CHECK(orthogonality_residual(dec) <= 1e-8);

        // Lower bound: unconstrained rank-(k+1) residual.
        const double f = decomposition_objective(w, dec);
        CHECK(f >= oracle::low_rank_residual(w, k + 1) - 1e-10);

        // 1 lies in the row space: Mᵀw_c = ‖w_c‖²·1.
        const Matrix rec = reconstruct(dec);
        const Vector lhs = transpose_times(rec, dec.w_c);
        const double n2 = dot(dec.w_c, dec.w_c);
        for (double x : lhs) CHECK(std::abs(x - n2) <= 1e-8 * (1.0 + n2));
    }
}

TEST_CASE("dominates random feasible points") {
    CounterRng rng(26, 0);
    const Matrix w = oracle::random_matrix(5, 7, rng);
    for (std::size_t k = 1; k <= 3; ++k) {
        const double f = decomposition_objective(w, decompose_theorem1(w, k));
        for (int i = 0; i < 200; ++i) CHECK(f <= decomposition_objective(w, random_feasible(5, 7, k, rng)));
    }
}

TEST_CASE("operator norm after centering and truncation") {
    CounterRng rng(27, 0);
    const Matrix w = oracle::random_matrix(6, 8, rng);
    const Matrix centered = w - outer(column_mean(w), ones(8));
    for (std::size_t k = 1; k <= 4; ++k) {
        const Matrix resid = centered - truncated_svd(centered, k).reconstruct();
        const Vector sv = oracle::singular_values(centered);
        CHECK(std::abs(operator_norm(resid) - sv[k]) <= 1e-9);
    }
}

TEST_CASE("orthogonalize") {
    CounterRng rng(28, 0);
    const Matrix w = oracle::random_matrix(5, 6, rng);
    const Decomposition d = decompose_theorem1(w, 2);
    const Decomposition again = orthogonalize(d);
    CHECK(norm(subtract(again.w_c, d.w_c)) <= 1e-8);
    CHECK(frobenius_norm(reconstruct(again) - reconstruct(d)) <= 1e-8 * (1.0 + frobenius_norm(reconstruct(d))));
    const Decomposition twice = orthogonalize(again);
    CHECK(norm(subtract(twice.w_c, again.w_c)) <= 1e-8);

    SUBCASE("orthogonal ground truth with offsets") {
        // (e_c + E_s·a)·1ᵀ + E_s·Γᵀ with e_c ⊥ E_s.
        Matrix es = oracle::random_matrix(5, 2, rng);
        Vector raw = random_vector(5, rng);
        const Vector ec = subtract(raw, project_onto_span(es, raw));
        const Vector a{0.7, -1.1};
        Decomposition mixed;
        mixed.w_c = add(ec, es * a);
        mixed.w_s = es;
        mixed.gamma = oracle::random_matrix(6, 2, rng);
        const Decomposition out = orthogonalize(mixed);
        CHECK(norm(subtract(out.w_c, ec)) <= 1e-6);
    }

    SUBCASE("non-orthogonal ground truth") {
        Matrix es = oracle::random_matrix(5, 2, rng);
        const Vector ec = random_vector(5, rng);
        Decomposition d2{ec, es, oracle::random_matrix(6, 2, rng)};
        const Decomposition out = orthogonalize(d2);
        const Vector target = subtract(ec, project_onto_span(es, ec));
        CHECK(norm(subtract(out.w_c, target)) <= 1e-6);
    }

    SUBCASE("ones outside the row space") {
        // Second domain has a zero classifier, so (1, 1) is not in the row space.
        Decomposition bad{Vector(3, 0.0), Matrix::from_rows({{1}, {0}, {0}}), Matrix::from_rows({{1}, {0}})};
        CHECK_THROWS_AS(orthogonalize(bad), DegenerateDecomposition);
    }
}

TEST_CASE("generalizing component") {
    GroundTruthModel gt{Vector{1, 1, 0}, Matrix::from_rows({{0}, {1}, {0}})};
    const Vector g = generalizing_component(gt);
    CHECK(norm(subtract(g, Vector{1, 0, 0})) <= 1e-15);
}

TEST_CASE("identifiability checks") {
    CounterRng rng(29, 0);
    SUBCASE("orthogonal instance") {
        GroundTruthModel gt{Vector{1, 0, 0}, Matrix::from_rows({{0}, {1}, {0}})};
        const Matrix gamma = oracle::random_matrix(6, 1, rng);
        const IdentifiabilityReport r = verify_lemma1(gt, gamma, 1e-6, 1);
        CHECK(r.forward_pass);
        CHECK(norm(subtract(r.recovered, Vector{1, 0, 0})) <= 1e-6);
    }
    SUBCASE("overlapping instances") {
        int converse = 0;
        for (int t = 0; t < 20; ++t) {
            GroundTruthModel gt{random_vector(6, rng), oracle::random_matrix(6, 2, rng)};
            const Matrix gamma = oracle::random_matrix(8, 2, rng);
            const IdentifiabilityReport r = verify_lemma1(gt, gamma, 1e-6, static_cast<std::uint64_t>(t));
            const Vector target = subtract(gt.e_c, project_onto_span(gt.e_s, gt.e_c));
            CHECK(norm(subtract(r.recovered, target)) <= 1e-6 * norm(target));
            CHECK(r.forward_pass);
            const Matrix w = outer(gt.e_c, ones(8)) + gt.e_s * gamma.transpose();
            CHECK(r.mixed_reconstruction <= 1e-8 * (1.0 + frobenius_norm(w)));
            converse += r.converse_pass;
        }
        CHECK(converse >= 18);
    }
    SUBCASE("rank-deficient instance") {
        GroundTruthModel gt{Vector{1, 0, 0}, Matrix::from_rows({{1}, {0}, {0}})};
        CHECK_THROWS_AS(verify_lemma1(gt, oracle::random_matrix(5, 1, rng), 1e-6), RankDeficientInstance);
    }
}

}  // TEST_SUITE
