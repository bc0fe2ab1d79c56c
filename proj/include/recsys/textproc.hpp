#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "recsys/sparse_counts.hpp"

namespace recsys {

// Sparse tf-idf vector for one document, with the Euclidean norm cached.
struct DocVector {
    std::uint32_t document = 0;
    std::vector<std::pair<std::uint32_t, double>> weights;  // sorted by word index
    double norm = 0.0;
};

// Builds a DocVector from raw weights, sorting them and computing the norm.
DocVector make_doc_vector(std::uint32_t document,
                          std::vector<std::pair<std::uint32_t, double>> weights);

// Lowercased maximal runs of ASCII alphabetic characters, in order, with
// multiplicity. Every other byte is a separator.
std::vector<std::string> tokenize(std::string_view text);

// Natural-log inverse document frequency log(|D| / df(w)).
// Throws std::invalid_argument when the word occurs in no document.
double idf(std::uint32_t word, const SparseCounts& doc_word);

// weight(d,w) = tf(w,d) * idf(w). Documents with no tokens get an empty
// vector with norm 0.
std::vector<DocVector> tfidf_vectors(const SparseCounts& doc_word);

// dot(a,b) / (|a||b|); 0 when either norm is 0.
double cosine(const DocVector& a, const DocVector& b);

}  // namespace recsys
