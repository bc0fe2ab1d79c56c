#include "recsys/smoothing.hpp"

#include <algorithm>
#include <stdexcept>

namespace recsys {

SparseCounts smooth(const SparseCounts& user_doc, const std::vector<DocVector>& vectors,
                    double threshold, FillRule rule) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw std::invalid_argument("smooth: threshold must lie in [0,1]");
    if (vectors.size() < user_doc.cols())
        throw std::invalid_argument("smooth: vectors do not cover the document space");

    const std::size_t n_docs = user_doc.cols();
    std::vector<SparseCounts::Entry> out;
    out.reserve(user_doc.nnz());

    std::vector<bool> accessed(n_docs);
    for (std::size_t u = 0; u < user_doc.rows(); ++u) {
        auto row = user_doc.row(u);
        for (const auto& e : row) out.push_back(e);
        if (row.empty()) continue;  // nothing accessed, nothing to aggregate

        std::fill(accessed.begin(), accessed.end(), false);
        for (const auto& e : row) accessed[e.col] = true;

        for (std::size_t d = 0; d < n_docs; ++d) {
            if (accessed[d]) continue;
            double sum = 0.0;
            std::size_t qualifying = 0;
            for (const auto& e : row) {
                double sim = cosine(vectors[d], vectors[e.col]);
                if (rule == FillRule::gated_mean) {
                    sum += sim;
                } else if (sim >= threshold) {
                    sum += sim;
                    ++qualifying;
                }
            }
            double fill = 0.0;
            if (rule == FillRule::gated_mean) {
                double mean = sum / static_cast<double>(row.size());
                if (mean >= threshold) fill = mean;
            } else if (qualifying > 0) {
                fill = sum / static_cast<double>(qualifying);
            }
            if (fill > 0.0)
                out.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(d), fill});
        }
    }
    return SparseCounts::from_triplets(user_doc.rows(), user_doc.cols(), std::move(out));
}

std::vector<std::pair<double, double>> density_sweep(const SparseCounts& user_doc,
                                                     const std::vector<DocVector>& vectors,
                                                     const std::vector<double>& thresholds,
                                                     FillRule rule) {
    for (std::size_t i = 1; i < thresholds.size(); ++i)
        if (thresholds[i] < thresholds[i - 1])
            throw std::invalid_argument("density_sweep: thresholds must be sorted ascending");
    std::vector<std::pair<double, double>> result;
    result.reserve(thresholds.size());
    for (double t : thresholds)
        result.push_back({t, density(smooth(user_doc, vectors, t, rule))});
    return result;
}

}  // namespace recsys
