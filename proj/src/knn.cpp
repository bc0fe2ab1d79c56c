#include "recsys/knn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace recsys {

namespace {

double row_norm(std::span<const SparseCounts::Entry> row) {
    double sq = 0.0;
    for (const auto& e : row) sq += e.value * e.value;
    return std::sqrt(sq);
}

double row_dot(std::span<const SparseCounts::Entry> a, std::span<const SparseCounts::Entry> b) {
    double dot = 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (ia->col < ib->col) {
            ++ia;
        } else if (ib->col < ia->col) {
            ++ib;
        } else {
            dot += ia->value * ib->value;
            ++ia;
            ++ib;
        }
    }
    return dot;
}

}  // namespace

double user_similarity(const SparseCounts& user_doc, std::size_t a, std::size_t b) {
    auto ra = user_doc.row(a);
    auto rb = user_doc.row(b);
    double na = row_norm(ra);
    double nb = row_norm(rb);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return row_dot(ra, rb) / (na * nb);
}

std::vector<double> knn_scores(const SparseCounts& user_doc, std::size_t user, std::size_t k) {
    const std::size_t n_users = user_doc.rows();
    if (user >= n_users) throw std::invalid_argument("knn_scores: user index out of range");
    if (k < 1 || k >= n_users)
        throw std::invalid_argument("knn_scores: k must satisfy 1 <= k < number of users");

    std::vector<double> sims(n_users, 0.0);
    for (std::size_t v = 0; v < n_users; ++v)
        if (v != user) sims[v] = user_similarity(user_doc, user, v);

    std::vector<std::uint32_t> order;
    order.reserve(n_users - 1);
    for (std::size_t v = 0; v < n_users; ++v)
        if (v != user) order.push_back(static_cast<std::uint32_t>(v));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          return sims[a] != sims[b] ? sims[a] > sims[b] : a < b;
                      });
    order.resize(k);

    std::vector<double> scores(user_doc.cols(), 0.0);
    for (std::uint32_t v : order)
        for (const auto& e : user_doc.row(v)) scores[e.col] += sims[v] * e.value;
    return scores;
}

std::vector<ScoredDoc> recommend_knn(const SparseCounts& user_doc, std::size_t user,
                                     std::size_t k) {
    std::vector<double> scores = knn_scores(user_doc, user, k);
    std::vector<ScoredDoc> ranked(scores.size());
    for (std::size_t d = 0; d < scores.size(); ++d)
        ranked[d] = {static_cast<std::uint32_t>(d), scores[d]};
    std::stable_sort(ranked.begin(), ranked.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        return a.score > b.score;
    });
    return ranked;
}

}  // namespace recsys
