#pragma once

#include <utility>
#include <vector>

#include "recsys/sparse_counts.hpp"
#include "recsys/textproc.hpp"

namespace recsys {

// How the fill value for a zero cell aggregates the cosines between the
// candidate document and the user's accessed documents.
enum class FillRule {
    gated_mean,     // mean over all accessed docs; the threshold gates the mean
    mean_of_gated,  // mean over the cosines >= threshold; fill when any qualify
};

// Fills zero cells of the user-document matrix with aggregate content
// similarity when it clears the threshold. Original nonzero entries are
// preserved exactly; filled values lie in (0,1].
SparseCounts smooth(const SparseCounts& user_doc, const std::vector<DocVector>& vectors,
                    double threshold, FillRule rule = FillRule::gated_mean);

// Density of smooth(...) at each threshold. Thresholds must be sorted
// ascending.
std::vector<std::pair<double, double>> density_sweep(const SparseCounts& user_doc,
                                                     const std::vector<DocVector>& vectors,
                                                     const std::vector<double>& thresholds,
                                                     FillRule rule = FillRule::gated_mean);

}  // namespace recsys
