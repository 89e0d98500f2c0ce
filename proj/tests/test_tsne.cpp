#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "pathovox/tsne.hpp"

using namespace pathovox;
using pathovox::testing::make_blobs;

namespace {

Matrix random_points(std::size_t n, std::size_t d, Rng& rng, double scale = 1.0) {
    Matrix x(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) x.at(i, c) = scale * rng.gaussian();
    return x;
}

}  // namespace

TEST_CASE("pairwise squared distances match a direct oracle") {
    Rng rng(5);
    Matrix x = random_points(12, 4, rng);
    Matrix d2 = pairwise_sqdist(x, 3);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(d2.at(i, i) == 0.0);
        for (std::size_t j = 0; j < 12; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < 4; ++c) {
                const double diff = x.at(i, c) - x.at(j, c);
                s += diff * diff;
            }
            CHECK(d2.at(i, j) == Catch::Approx(s).margin(1e-12));
            CHECK(d2.at(i, j) == d2.at(j, i));
        }
    }
}

TEST_CASE("three equidistant points give equal off-diagonal joint similarities") {
    // Unit basis vectors: pairwise squared distance is exactly 2.
    Matrix x = Matrix::from_rows({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}});
    Matrix p = conditional_p(pairwise_sqdist(x), 2.0);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(p.at(i, i) == 0.0);
        for (std::size_t j = 0; j < 3; ++j)
            if (i != j) CHECK(p.at(i, j) == Catch::Approx(1.0 / 6.0).margin(1e-12));
    }
}

TEST_CASE("joint P is symmetric, sums to one, and hits the target row perplexity") {
    Rng rng(77);
    Matrix x = random_points(200, 6, rng, 2.0);
    Matrix cond;
    Matrix p = conditional_p(pairwise_sqdist(x), 30.0, &cond);

    double total = 0.0;
    for (std::size_t i = 0; i < 200; ++i)
        for (std::size_t j = 0; j < 200; ++j) {
            total += p.at(i, j);
            REQUIRE(p.at(i, j) == p.at(j, i));
            REQUIRE(p.at(i, j) >= 0.0);
        }
    CHECK(total == Catch::Approx(1.0).margin(1e-10));

    // Entropy recomputation oracle on the returned conditional rows.
    for (std::size_t i = 0; i < 200; ++i) {
        double entropy = 0.0, row_sum = 0.0;
        for (std::size_t j = 0; j < 200; ++j) {
            const double v = cond.at(i, j);
            row_sum += v;
            if (v > 0.0) entropy -= v * std::log2(v);
        }
        REQUIRE(row_sum == Catch::Approx(1.0).margin(1e-10));
        REQUIRE(std::exp2(entropy) == Catch::Approx(30.0).margin(1e-3));
    }
}

TEST_CASE("conditional_p guards its preconditions") {
    Rng rng(3);
    Matrix x = random_points(10, 3, rng);
    Matrix d2 = pairwise_sqdist(x);
    REQUIRE_THROWS_AS(conditional_p(d2, 10.0), Error);
    REQUIRE_THROWS_AS(conditional_p(d2, 12.0), Error);
    REQUIRE_THROWS_AS(conditional_p(d2, 1.0), Error);
}

TEST_CASE("unreachable target perplexity names the offending point") {
    // Exactly equidistant rows pin every conditional at perplexity 2 for any
    // kernel width, so a different target cannot be bracketed.
    Matrix x = Matrix::from_rows({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}});
    try {
        conditional_p(pairwise_sqdist(x), 1.5);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == "tsne_no_bracket");
        CHECK(std::string(e.what()).find("point 0") != std::string::npos);
    }
}

TEST_CASE("map gradient matches central finite differences of the KL") {
    Rng rng(2025);
    Matrix x = random_points(15, 3, rng, 1.5);
    Matrix p = conditional_p(pairwise_sqdist(x), 5.0);
    Matrix y = random_points(15, 2, rng, 1.0);
    Matrix grad = tsne_gradient(p, y);

    const double eps = 1e-6;
    for (std::size_t i = 0; i < 15; ++i) {
        for (std::size_t c = 0; c < 2; ++c) {
            const double orig = y.at(i, c);
            y.at(i, c) = orig + eps;
            const double up = tsne_kl(p, y);
            y.at(i, c) = orig - eps;
            const double dn = tsne_kl(p, y);
            y.at(i, c) = orig;
            const double fd = (up - dn) / (2.0 * eps);
            const double denom = std::max({std::abs(grad.at(i, c)), std::abs(fd), 1e-8});
            REQUIRE(std::abs(grad.at(i, c) - fd) / denom <= 1e-5);
        }
    }
}

TEST_CASE("two separated clusters stay separated in the embedding") {
    Rng rng(99);
    Matrix means = Matrix::from_rows({{0.0, 0.0, 0.0, 0.0}, {20.0, 20.0, 20.0, 20.0}});
    Dataset d = make_blobs(means, {1.0, 1.0}, {50, 50}, Vocabulary({"A", "B"}), rng);
    TsneConfig cfg;
    cfg.iterations = 600;
    cfg.seed = 404;
    TsneEmbedding emb = run_tsne(d, cfg);
    REQUIRE(emb.coords.rows() == 100);
    REQUIRE(emb.coords.all_finite());

    double intra = 0.0, inter = 0.0;
    std::size_t n_intra = 0, n_inter = 0;
    for (std::size_t i = 0; i < 100; ++i)
        for (std::size_t j = i + 1; j < 100; ++j) {
            const double dx = emb.coords.at(i, 0) - emb.coords.at(j, 0);
            const double dy = emb.coords.at(i, 1) - emb.coords.at(j, 1);
            const double dist = std::sqrt(dx * dx + dy * dy);
            if (d.labels[i] == d.labels[j]) {
                intra += dist;
                ++n_intra;
            } else {
                inter += dist;
                ++n_inter;
            }
        }
    CHECK(inter / static_cast<double>(n_inter) > intra / static_cast<double>(n_intra));

    // Final recentering.
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
        mx += emb.coords.at(i, 0);
        my += emb.coords.at(i, 1);
    }
    CHECK(std::abs(mx / 100.0) <= 1e-8);
    CHECK(std::abs(my / 100.0) <= 1e-8);
}

TEST_CASE("the recorded KL trace decreases from iteration 50 to the end") {
    Rng rng(123);
    Matrix means = Matrix::from_rows({{0.0, 0.0, 0.0}, {2.0, 1.0, 0.0}});
    Dataset d = make_blobs(means, {1.0, 1.2}, {40, 40}, Vocabulary({"A", "B"}), rng);
    TsneConfig cfg;
    cfg.iterations = 300;
    cfg.perplexity = 20.0;
    cfg.seed = 11;
    TsneEmbedding emb = run_tsne(d, cfg);
    REQUIRE(emb.kl_trace.size() == 6);
    CHECK(emb.kl_trace.front().first == 50);
    CHECK(emb.kl_trace.back().first == 300);
    CHECK(emb.kl_trace.back().second < emb.kl_trace.front().second);
    for (const auto& [iter, kl] : emb.kl_trace) {
        (void)iter;
        CHECK(std::isfinite(kl));
    }
}

TEST_CASE("identical seeds give bit-identical embeddings") {
    Rng rng(7);
    Matrix means = Matrix::from_rows({{0.0, 0.0}, {4.0, 4.0}});
    Dataset d = make_blobs(means, {0.8, 0.8}, {25, 25}, Vocabulary({"A", "B"}), rng);
    TsneConfig cfg;
    cfg.iterations = 120;
    cfg.perplexity = 12.0;
    cfg.seed = 31;
    TsneEmbedding a = run_tsne(d, cfg);
    TsneEmbedding b = run_tsne(d, cfg);
    REQUIRE(a.coords == b.coords);
    cfg.seed = 32;
    TsneEmbedding c = run_tsne(d, cfg);
    CHECK_FALSE(a.coords == c.coords);
}

TEST_CASE("duplicate inputs land closer than the cluster gap") {
    Rng rng(55);
    Matrix means = Matrix::from_rows({{0.0, 0.0, 0.0}, {15.0, 15.0, 15.0}});
    Dataset d = make_blobs(means, {0.7, 0.7}, {30, 30}, Vocabulary({"A", "B"}), rng);
    // Make rows 0 and 1 exact duplicates.
    for (std::size_t c = 0; c < d.dim(); ++c) d.features.at(1, c) = d.features.at(0, c);
    TsneConfig cfg;
    cfg.iterations = 500;
    cfg.perplexity = 15.0;
    cfg.seed = 8;
    TsneEmbedding emb = run_tsne(d, cfg);

    auto dist = [&](std::size_t i, std::size_t j) {
        const double dx = emb.coords.at(i, 0) - emb.coords.at(j, 0);
        const double dy = emb.coords.at(i, 1) - emb.coords.at(j, 1);
        return std::sqrt(dx * dx + dy * dy);
    };
    double min_gap = 1e300;
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.size(); ++j)
            if (d.labels[i] == 0 && d.labels[j] == 1) min_gap = std::min(min_gap, dist(i, j));
    CHECK(dist(0, 1) < min_gap);
}

TEST_CASE("run_tsne validates config and input size") {
    Rng rng(2);
    Matrix means = Matrix::from_rows({{0.0, 0.0}, {3.0, 3.0}});
    Dataset d = make_blobs(means, {0.5, 0.5}, {10, 10}, Vocabulary({"A", "B"}), rng);
    TsneConfig cfg;
    cfg.perplexity = 25.0;  // >= N
    REQUIRE_THROWS_AS(run_tsne(d, cfg), Error);
    cfg.perplexity = 10.0;
    cfg.iterations = 0;
    REQUIRE_THROWS_AS(run_tsne(d, cfg), Error);

    Dataset tiny = d.subset({0, 1, 10});
    TsneConfig ok;
    ok.perplexity = 2.0;
    REQUIRE_THROWS_AS(run_tsne(tiny, ok), Error);
}

TEST_CASE("numerical blow-up is reported with the iteration") {
    Rng rng(13);
    Matrix means = Matrix::from_rows({{0.0, 0.0}, {5.0, 5.0}});
    Dataset d = make_blobs(means, {0.5, 0.5}, {15, 15}, Vocabulary({"A", "B"}), rng);
    TsneConfig cfg;
    cfg.iterations = 60;
    cfg.perplexity = 10.0;
    cfg.learning_rate = 1e200;
    cfg.seed = 5;
    try {
        run_tsne(d, cfg);
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.code() == "tsne_diverged");
        CHECK(std::string(e.what()).find("iteration") != std::string::npos);
    }
}
