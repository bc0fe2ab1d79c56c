#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "recsys/sparse_counts.hpp"

namespace recsys {

struct UserScore {
    double r_u = 0.0;
    double r_u_max = 0.0;
};

// Rank-scoring report: per-user utilities and the aggregate
// R = 100 * sum R_u / sum R_u_max.
struct EvalReport {
    double alpha = 5.0;
    std::map<std::string, UserScore> per_user;
    double r = 0.0;
};

// Exponentially position-discounted utility of one ranked list with viewing
// half-life alpha. Ranks start at 1; test items absent from the list
// contribute 0 to R_u but are counted in R_u_max. Throws on duplicate
// documents in the ranking.
UserScore rank_score_user(const std::vector<std::uint32_t>& ranked,
                          const std::set<std::uint32_t>& test_set, double alpha);

// Aggregates rank_score_user over all test users. Every test user must have
// a ranked list (possibly empty).
EvalReport rank_score(const std::map<std::string, std::vector<std::uint32_t>>& recommendations,
                      const std::map<std::string, std::set<std::uint32_t>>& test, double alpha);

struct LinearTrend {
    double slope = 0.0;
    double intercept = 0.0;
    double p_value = 1.0;  // two-sided, for the slope coefficient
};

// Ordinary least squares fit with the standard t-test on the slope.
// Requires at least 3 points and non-degenerate x.
LinearTrend fit_linear_trend(const std::vector<std::pair<double, double>>& points);

struct EvalProtocol {
    double alpha = 5.0;
    // Rank only documents the user has not accessed in training; test items
    // also seen in training are dropped.
    bool exclude_train = true;
};

// Builds per-user ranked candidate lists from score vectors and rank-scores
// them against the test matrix. scores_for_user(u) must return one score per
// document; ties rank toward the smaller document index.
EvalReport evaluate_scores(const SparseCounts& train_user_doc, const SparseCounts& test_user_doc,
                           const std::vector<std::string>& user_ids,
                           const std::function<std::vector<double>(std::size_t)>& scores_for_user,
                           const EvalProtocol& protocol);

// One "user R_u R_u_max" line per user, then "R <value> alpha <value>".
void save_eval_report(const EvalReport& report, std::ostream& out);

}  // namespace recsys
