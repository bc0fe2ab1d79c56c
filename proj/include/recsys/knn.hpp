#pragma once

#include <cstdint>
#include <vector>

#include "recsys/sparse_counts.hpp"

namespace recsys {

// Cosine similarity between two users' document-count rows; 0 when either
// row is empty.
double user_similarity(const SparseCounts& user_doc, std::size_t a, std::size_t b);

// score(d) = sum over the k nearest neighbors v (by user_similarity, ties
// toward the smaller index, self excluded) of sim(u,v) * n(v,d).
std::vector<double> knn_scores(const SparseCounts& user_doc, std::size_t user, std::size_t k);

struct ScoredDoc {
    std::uint32_t document = 0;
    double score = 0.0;
};

// Full document ranking by knn_scores, descending, ties toward the smaller
// document index.
std::vector<ScoredDoc> recommend_knn(const SparseCounts& user_doc, std::size_t user,
                                     std::size_t k);

}  // namespace recsys
