#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "recsys/knn.hpp"
#include "recsys/rng.hpp"

using namespace recsys;

namespace {

// Exhaustive re-derivation: all similarities, full sort, weighted counts.
std::vector<double> knn_oracle(const SparseCounts& ud, std::size_t u, std::size_t k) {
    const std::size_t n = ud.rows();
    auto dense_row = [&](std::size_t r) {
        std::vector<double> v(ud.cols(), 0.0);
        for (const auto& e : ud.row(r)) v[e.col] = e.value;
        return v;
    };
    auto cosine_rows = [&](std::size_t a, std::size_t b) {
        auto ra = dense_row(a), rb = dense_row(b);
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t i = 0; i < ra.size(); ++i) {
            dot += ra[i] * rb[i];
            na += ra[i] * ra[i];
            nb += rb[i] * rb[i];
        }
        if (na == 0.0 || nb == 0.0) return 0.0;
        return dot / (std::sqrt(na) * std::sqrt(nb));
    };
    std::vector<std::pair<double, std::size_t>> sims;
    for (std::size_t v = 0; v < n; ++v)
        if (v != u) sims.push_back({cosine_rows(u, v), v});
    std::sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<double> scores(ud.cols(), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        auto row = dense_row(sims[i].second);
        for (std::size_t d = 0; d < row.size(); ++d) scores[d] += sims[i].first * row[d];
    }
    return scores;
}

}  // namespace

TEST_CASE("user similarity basics") {
    auto ud = SparseCounts::from_triplets(
        4, 3, {{0, 0, 2.0}, {0, 2, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}, {2, 0, 2.0}, {2, 2, 1.0}});
    CHECK(user_similarity(ud, 0, 2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(user_similarity(ud, 1, 3) == 0.0);  // row 3 empty
    CHECK(user_similarity(ud, 0, 1) ==
          doctest::Approx(2.0 / (std::sqrt(5.0) * std::sqrt(2.0))).epsilon(1e-12));

    auto disjoint = SparseCounts::from_triplets(2, 4, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 2, 3.0}});
    CHECK(user_similarity(disjoint, 0, 1) == 0.0);
}

TEST_CASE("single-neighbor recommendation") {
    // user 0 resembles user 1 only; user 1 read only d2 (index 2).
    auto ud = SparseCounts::from_triplets(3, 4, {{0, 0, 1.0}, {1, 0, 1.0}, {1, 2, 2.0}, {2, 3, 5.0}});
    auto ranked = recommend_knn(ud, 0, 1);
    REQUIRE(ranked.size() == 4);
    double sim = user_similarity(ud, 0, 1);
    CHECK(ranked[0].document == 2);  // the neighbor's strongest doc by count
    CHECK(ranked[0].score == doctest::Approx(sim * 2.0).epsilon(1e-12));
    CHECK(ranked[1].document == 0);
    CHECK(ranked[1].score == doctest::Approx(sim * 1.0).epsilon(1e-12));
    CHECK(ranked[2].score == 0.0);
}

TEST_CASE("empty user row falls back to document-index order") {
    auto ud = SparseCounts::from_triplets(3, 3, {{1, 1, 1.0}, {2, 2, 1.0}});
    auto ranked = recommend_knn(ud, 0, 2);
    REQUIRE(ranked.size() == 3);
    for (std::size_t d = 0; d < 3; ++d) {
        CHECK(ranked[d].document == d);
        CHECK(ranked[d].score == 0.0);
    }
}

TEST_CASE("k out of range is rejected") {
    auto ud = SparseCounts::from_triplets(3, 3, {{0, 0, 1.0}});
    CHECK_THROWS_AS(recommend_knn(ud, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(recommend_knn(ud, 0, 3), std::invalid_argument);
    CHECK_THROWS_AS(recommend_knn(ud, 5, 1), std::invalid_argument);
}

TEST_CASE("hand-built four-user instance matches the exhaustive oracle") {
    auto ud = SparseCounts::from_triplets(4, 5,
                                          {{0, 0, 2.0},
                                           {0, 1, 1.0},
                                           {1, 0, 1.0},
                                           {1, 2, 1.0},
                                           {2, 1, 3.0},
                                           {2, 3, 1.0},
                                           {3, 0, 1.0},
                                           {3, 4, 2.0}});
    for (std::size_t u = 0; u < 4; ++u)
        for (std::size_t k = 1; k < 4; ++k) {
            auto got = knn_scores(ud, u, k);
            auto expect = knn_oracle(ud, u, k);
            REQUIRE(got.size() == expect.size());
            for (std::size_t d = 0; d < got.size(); ++d)
                CHECK(got[d] == doctest::Approx(expect[d]).epsilon(1e-12));
        }
}

TEST_CASE("randomized instances match the oracle") {
    std::mt19937_64 gen(404);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t n_users = 3 + gen() % 6;
        std::size_t n_docs = 2 + gen() % 6;
        std::vector<SparseCounts::Entry> es;
        for (std::uint32_t u = 0; u < n_users; ++u)
            for (std::uint32_t d = 0; d < n_docs; ++d)
                if (gen() % 3 == 0) es.push_back({u, d, 1.0 + double(gen() % 4)});
        auto ud = SparseCounts::from_triplets(n_users, n_docs, es);
        std::size_t u = gen() % n_users;
        std::size_t k = 1 + gen() % (n_users - 1);
        auto got = knn_scores(ud, u, k);
        auto expect = knn_oracle(ud, u, k);
        for (std::size_t d = 0; d < got.size(); ++d)
            CHECK(got[d] == doctest::Approx(expect[d]).epsilon(1e-12));
    }
}

TEST_CASE("scores ignore users outside the neighbor set") {
    auto base = SparseCounts::from_triplets(
        4, 3, {{0, 0, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}, {2, 2, 4.0}, {3, 2, 9.0}});
    // permute the two non-neighbors (rows 2 and 3) of user 0 under k=1
    auto permuted = SparseCounts::from_triplets(
        4, 3, {{0, 0, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}, {2, 2, 9.0}, {3, 2, 4.0}});
    CHECK(knn_scores(base, 0, 1) == knn_scores(permuted, 0, 1));

    // documents no neighbor accessed score exactly zero
    auto scores = knn_scores(base, 0, 1);
    CHECK(scores[2] == 0.0);
}
