#include "recsys/textproc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace recsys {

DocVector make_doc_vector(std::uint32_t document,
                          std::vector<std::pair<std::uint32_t, double>> weights) {
    std::sort(weights.begin(), weights.end());
    double sq = 0.0;
    for (const auto& [w, x] : weights) {
        if (x < 0.0) throw std::invalid_argument("DocVector: negative weight");
        sq += x * x;
    }
    DocVector v;
    v.document = document;
    v.weights = std::move(weights);
    v.norm = std::sqrt(sq);
    return v;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
            current.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

double idf(std::uint32_t word, const SparseCounts& doc_word) {
    if (word >= doc_word.cols()) throw std::invalid_argument("idf: word index out of range");
    std::size_t df = 0;
    for (const auto& e : doc_word.entries())
        if (e.col == word) df++;
    if (df == 0) throw std::invalid_argument("idf: word occurs in no document");
    return std::log(static_cast<double>(doc_word.rows()) / static_cast<double>(df));
}

std::vector<DocVector> tfidf_vectors(const SparseCounts& doc_word) {
    const std::size_t n_docs = doc_word.rows();
    const std::vector<std::size_t> df = doc_word.col_nnz();
    std::vector<double> idf_cache(doc_word.cols(), 0.0);
    for (std::size_t w = 0; w < doc_word.cols(); ++w)
        if (df[w] > 0)
            idf_cache[w] = std::log(static_cast<double>(n_docs) / static_cast<double>(df[w]));

    std::vector<DocVector> vectors;
    vectors.reserve(n_docs);
    for (std::size_t d = 0; d < n_docs; ++d) {
        std::vector<std::pair<std::uint32_t, double>> weights;
        for (const auto& e : doc_word.row(d)) {
            double w = e.value * idf_cache[e.col];
            if (w != 0.0) weights.push_back({e.col, w});
        }
        vectors.push_back(make_doc_vector(static_cast<std::uint32_t>(d), std::move(weights)));
    }
    return vectors;
}

double cosine(const DocVector& a, const DocVector& b) {
    if (a.norm == 0.0 || b.norm == 0.0) return 0.0;
    double dot = 0.0;
    auto ia = a.weights.begin();
    auto ib = b.weights.begin();
    while (ia != a.weights.end() && ib != b.weights.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            dot += ia->second * ib->second;
            ++ia;
            ++ib;
        }
    }
    return dot / (a.norm * b.norm);
}

}  // namespace recsys
