#include "recsys/sparse_counts.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace recsys {

SparseCounts::SparseCounts(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols) {
    rebuild_index();
}

SparseCounts SparseCounts::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Entry> triplets) {
    for (const Entry& e : triplets) {
        if (e.row >= rows || e.col >= cols)
            throw std::invalid_argument("SparseCounts: index (" + std::to_string(e.row) +
                                        "," + std::to_string(e.col) + ") out of range");
        if (e.value < 0.0)
            throw std::invalid_argument("SparseCounts: negative value at (" +
                                        std::to_string(e.row) + "," + std::to_string(e.col) + ")");
    }
    std::sort(triplets.begin(), triplets.end(), [](const Entry& a, const Entry& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseCounts m(rows, cols);
    m.entries_.reserve(triplets.size());
    for (const Entry& e : triplets) {
        if (!m.entries_.empty() && m.entries_.back().row == e.row &&
            m.entries_.back().col == e.col) {
            m.entries_.back().value += e.value;
        } else {
            m.entries_.push_back(e);
        }
    }
    std::erase_if(m.entries_, [](const Entry& e) { return e.value == 0.0; });
    m.rebuild_index();
    return m;
}

void SparseCounts::rebuild_index() {
    row_start_.assign(rows_ + 1, 0);
    for (const Entry& e : entries_) row_start_[e.row + 1]++;
    for (std::size_t r = 0; r < rows_; ++r) row_start_[r + 1] += row_start_[r];
}

std::span<const SparseCounts::Entry> SparseCounts::row(std::size_t r) const {
    if (r >= rows_) throw std::out_of_range("SparseCounts::row");
    return {entries_.data() + row_start_[r], entries_.data() + row_start_[r + 1]};
}

double SparseCounts::value_at(std::size_t r, std::size_t c) const {
    auto span = row(r);
    auto it = std::lower_bound(span.begin(), span.end(), c,
                               [](const Entry& e, std::size_t col) { return e.col < col; });
    if (it != span.end() && it->col == c) return it->value;
    return 0.0;
}

std::vector<double> SparseCounts::row_sums() const {
    std::vector<double> sums(rows_, 0.0);
    for (const Entry& e : entries_) sums[e.row] += e.value;
    return sums;
}

std::vector<double> SparseCounts::col_sums() const {
    std::vector<double> sums(cols_, 0.0);
    for (const Entry& e : entries_) sums[e.col] += e.value;
    return sums;
}

std::vector<std::size_t> SparseCounts::col_nnz() const {
    std::vector<std::size_t> counts(cols_, 0);
    for (const Entry& e : entries_) counts[e.col]++;
    return counts;
}

SparseCounts SparseCounts::transposed() const {
    std::vector<Entry> flipped;
    flipped.reserve(entries_.size());
    for (const Entry& e : entries_) flipped.push_back({e.col, e.row, e.value});
    return from_triplets(cols_, rows_, std::move(flipped));
}

double density(const SparseCounts& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    return static_cast<double>(m.nnz()) /
           (static_cast<double>(m.rows()) * static_cast<double>(m.cols()));
}

}  // namespace recsys
