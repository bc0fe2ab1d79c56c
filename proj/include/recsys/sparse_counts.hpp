#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace recsys {

// Sparse real-valued co-occurrence matrix. Zeros are represented by absence;
// every stored value is > 0. Entries are kept sorted by (row, col) so that
// iteration order, and therefore every accumulation over a matrix, is
// deterministic.
class SparseCounts {
public:
    struct Entry {
        std::uint32_t row = 0;
        std::uint32_t col = 0;
        double value = 0.0;
        bool operator==(const Entry&) const = default;
    };

    SparseCounts() = default;
    SparseCounts(std::size_t rows, std::size_t cols);

    // Builds from triplets; duplicate cells are summed, exact zeros dropped.
    // Throws std::invalid_argument on negative values or out-of-range indices.
    static SparseCounts from_triplets(std::size_t rows, std::size_t cols,
                                      std::vector<Entry> triplets);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return entries_.size(); }

    std::span<const Entry> entries() const { return entries_; }
    std::span<const Entry> row(std::size_t r) const;

    // 0 when the cell is absent.
    double value_at(std::size_t r, std::size_t c) const;

    std::vector<double> row_sums() const;
    std::vector<double> col_sums() const;
    // Number of rows in which each column is nonzero, i.e. df per column.
    std::vector<std::size_t> col_nnz() const;

    SparseCounts transposed() const;

    bool operator==(const SparseCounts& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ &&
               entries_ == other.entries_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Entry> entries_;           // sorted by (row, col), unique
    std::vector<std::size_t> row_start_;   // rows_+1 offsets into entries_

    void rebuild_index();
};

// Fraction of nonzero cells; 0 by convention for an empty shape.
double density(const SparseCounts& m);

}  // namespace recsys
