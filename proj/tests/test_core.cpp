#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "pathovox/core.hpp"

using namespace pathovox;

TEST_CASE("rng is deterministic per seed") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        auto x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
        all_equal = all_equal && (x == y);
        any_diff = any_diff || (x != z);
    }
    REQUIRE(all_equal);
    REQUIRE(any_diff);
}

TEST_CASE("rng splitmix64 reference values") {
    // First three outputs for seed 1234567, from the published splitmix64
    // reference implementation.
    Rng r(1234567);
    REQUIRE(r.next_u64() == 6457827717110365317ull);
    REQUIRE(r.next_u64() == 3203168211198807973ull);
    REQUIRE(r.next_u64() == 9817491932198370423ull);
}

TEST_CASE("uniform stays in [0,1) with sane moments") {
    Rng r(7);
    const int n = 200000;
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    REQUIRE(std::abs(mean - 0.5) < 0.005);
    REQUIRE(std::abs(var - 1.0 / 12.0) < 0.005);
}

TEST_CASE("below is unbiased over small ranges") {
    Rng r(99);
    const int n = 60000;
    std::vector<int> counts(5, 0);
    for (int i = 0; i < n; ++i) counts[r.below(5)]++;
    for (int c : counts) REQUIRE(std::abs(c - n / 5) < n / 5 * 0.1);
    REQUIRE_THROWS_AS(r.below(0), Error);
}

TEST_CASE("gaussian moments and tail") {
    Rng r(2024);
    const int n = 200000;
    double sum = 0, sumsq = 0;
    int beyond3 = 0;
    for (int i = 0; i < n; ++i) {
        double g = r.gaussian();
        sum += g;
        sumsq += g * g;
        if (std::abs(g) > 3.0) beyond3++;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    REQUIRE(std::abs(mean) < 0.01);
    REQUIRE(std::abs(var - 1.0) < 0.02);
    // P(|Z| > 3) ~= 0.0027
    REQUIRE(beyond3 > n * 0.0015);
    REQUIRE(beyond3 < n * 0.0045);
}

TEST_CASE("fork gives decorrelated child streams") {
    Rng base(5);
    Rng f0 = base.fork(0), f1 = base.fork(1);
    int same = 0;
    for (int i = 0; i < 100; ++i)
        if (f0.next_u64() == f1.next_u64()) same++;
    REQUIRE(same == 0);

    // fork is a pure function of (state, tag)
    Rng again = Rng(5).fork(0);
    Rng f0b = Rng(5).fork(0);
    REQUIRE(again.next_u64() == f0b.next_u64());
}

TEST_CASE("argmax_tiebreak prefers the first maximum") {
    REQUIRE(argmax_tiebreak(std::vector<double>{1, 3, 2}) == 1);
    REQUIRE(argmax_tiebreak(std::vector<double>{3, 1, 3}) == 0);
    REQUIRE(argmax_tiebreak(std::vector<double>{-5}) == 0);
    REQUIRE(argmax_tiebreak(std::vector<double>{2, 2, 2}) == 0);
    REQUIRE_THROWS_AS(argmax_tiebreak(std::vector<double>{}), Error);
}

TEST_CASE("seeded_shuffle is a permutation and seed-stable") {
    Rng r1(11), r2(11), r3(12);
    auto p1 = seeded_shuffle(50, r1);
    auto p2 = seeded_shuffle(50, r2);
    auto p3 = seeded_shuffle(50, r3);
    REQUIRE(p1 == p2);
    REQUIRE(p1 != p3);
    std::set<std::size_t> seen(p1.begin(), p1.end());
    REQUIRE(seen.size() == 50);
    REQUIRE(*seen.begin() == 0);
    REQUIRE(*seen.rbegin() == 49);
}

TEST_CASE("apply_permutation reorders") {
    std::vector<int> v{10, 20, 30};
    apply_permutation(v, {2, 0, 1});
    REQUIRE(v == std::vector<int>{30, 10, 20});
}

TEST_CASE("matrix basics") {
    Matrix m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 3);
    REQUIRE(m.at(1, 2) == 6.0);
    m.at(0, 0) = -1;
    REQUIRE(m.row_copy(0) == std::vector<double>{-1, 2, 3});
    REQUIRE(m.all_finite());
    m.at(0, 1) = std::nan("");
    REQUIRE(!m.all_finite());
    REQUIRE_THROWS_AS(Matrix::from_rows({{1, 2}, {3}}), Error);
}

TEST_CASE("vocabulary ordering and lookup") {
    auto v = Vocabulary::from_observed({"PD", "CTL", "PD", "CLP"});
    REQUIRE(v.size() == 3);
    REQUIRE(v.name(0) == "CLP");
    REQUIRE(v.name(1) == "CTL");
    REQUIRE(v.name(2) == "PD");
    REQUIRE(v.require("PD") == 2);
    REQUIRE(!v.find("LAR").has_value());
    REQUIRE_THROWS_AS(v.require("LAR"), Error);
    REQUIRE_THROWS_AS(Vocabulary({"a", "a"}), Error);
}

TEST_CASE("dataset validation catches shape and label errors") {
    Dataset d;
    d.features = Matrix::from_rows({{1, 2}, {3, 4}});
    d.labels = {0, 1};
    d.vocab = Vocabulary({"a", "b"});
    REQUIRE_NOTHROW(d.validate());

    Dataset bad = d;
    bad.labels = {0, 2};
    REQUIRE_THROWS_AS(bad.validate(), Error);

    bad = d;
    bad.labels = {0};
    REQUIRE_THROWS_AS(bad.validate(), Error);

    bad = d;
    bad.features.at(0, 0) = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(bad.validate(), Error);

    bad = d;
    bad.ids = {"only-one"};
    REQUIRE_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("dataset subset carries metadata and flags") {
    Dataset d;
    d.features = Matrix::from_rows({{1, 0}, {2, 0}, {3, 0}});
    d.labels = {0, 1, 0};
    d.vocab = Vocabulary({"a", "b"});
    d.ids = {"r0", "r1", "r2"};
    d.synthetic = {0, 0, 1};
    d.layer = 7;

    Dataset s = d.subset({2, 0});
    REQUIRE(s.size() == 2);
    REQUIRE(s.features.at(0, 0) == 3.0);
    REQUIRE(s.labels == std::vector<int>{0, 0});
    REQUIRE(s.ids == std::vector<std::string>{"r2", "r0"});
    REQUIRE(s.is_synthetic(0));
    REQUIRE(!s.is_synthetic(1));
    REQUIRE(s.any_synthetic());
    REQUIRE(s.layer == 7);
    REQUIRE_THROWS_AS(d.subset({5}), Error);

    auto counts = d.class_counts();
    REQUIRE(counts == std::vector<std::size_t>{2, 1});
}

TEST_CASE("error carries kind and code") {
    try {
        fail_numeric("overflow_k", "boom");
        FAIL("unreachable");
    } catch (const Error& e) {
        REQUIRE(e.kind() == ErrorKind::Numeric);
        REQUIRE(e.code() == "overflow_k");
        REQUIRE(std::string(e.what()) == "boom");
    }
}
