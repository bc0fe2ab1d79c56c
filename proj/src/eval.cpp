#include "recsys/eval.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include <boost/math/distributions/students_t.hpp>

#include "text_io.hpp"

namespace recsys {

UserScore rank_score_user(const std::vector<std::uint32_t>& ranked,
                          const std::set<std::uint32_t>& test_set, double alpha) {
    if (!(alpha > 1.0)) throw std::invalid_argument("rank_score_user: alpha must exceed 1");
    std::unordered_set<std::uint32_t> seen;
    seen.reserve(ranked.size());
    for (std::uint32_t d : ranked)
        if (!seen.insert(d).second)
            throw std::invalid_argument("rank_score_user: duplicate document in ranking");

    const double denom = alpha - 1.0;
    UserScore score;
    for (std::size_t j = 1; j <= ranked.size(); ++j)
        if (test_set.count(ranked[j - 1]))
            score.r_u += std::exp2(-static_cast<double>(j - 1) / denom);
    for (std::size_t j = 1; j <= test_set.size(); ++j)
        score.r_u_max += std::exp2(-static_cast<double>(j - 1) / denom);
    return score;
}

EvalReport rank_score(const std::map<std::string, std::vector<std::uint32_t>>& recommendations,
                      const std::map<std::string, std::set<std::uint32_t>>& test, double alpha) {
    EvalReport report;
    report.alpha = alpha;
    double sum_r = 0.0;
    double sum_max = 0.0;
    for (const auto& [user, test_set] : test) {
        auto rec = recommendations.find(user);
        if (rec == recommendations.end())
            throw std::invalid_argument("rank_score: no ranked list for test user '" + user + "'");
        UserScore s = rank_score_user(rec->second, test_set, alpha);
        sum_r += s.r_u;
        sum_max += s.r_u_max;
        report.per_user.emplace(user, s);
    }
    report.r = sum_max > 0.0 ? 100.0 * (sum_r / sum_max) : 0.0;
    return report;
}

LinearTrend fit_linear_trend(const std::vector<std::pair<double, double>>& points) {
    const std::size_t n = points.size();
    if (n < 3) throw std::invalid_argument("fit_linear_trend: need at least 3 points");

    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& [x, y] : points) {
        mean_x += x;
        mean_y += y;
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_linear_trend: x values are all equal");

    LinearTrend fit;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;

    double rss = 0.0;
    for (const auto& [x, y] : points) {
        double resid = y - (fit.intercept + fit.slope * x);
        rss += resid * resid;
    }
    const double dof = static_cast<double>(n - 2);
    const double se = std::sqrt(rss / dof / sxx);
    if (se == 0.0) {
        fit.p_value = fit.slope == 0.0 ? 1.0 : 0.0;  // exact fit
        return fit;
    }
    const double t = fit.slope / se;
    boost::math::students_t dist(dof);
    fit.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return fit;
}

EvalReport evaluate_scores(const SparseCounts& train_user_doc, const SparseCounts& test_user_doc,
                           const std::vector<std::string>& user_ids,
                           const std::function<std::vector<double>(std::size_t)>& scores_for_user,
                           const EvalProtocol& protocol) {
    if (train_user_doc.rows() != test_user_doc.rows() ||
        train_user_doc.cols() != test_user_doc.cols())
        throw std::invalid_argument("evaluate_scores: train/test matrices must share a shape");
    if (user_ids.size() != train_user_doc.rows())
        throw std::invalid_argument("evaluate_scores: user id count does not match matrix");

    const std::size_t n_docs = train_user_doc.cols();
    std::map<std::string, std::vector<std::uint32_t>> recommendations;
    std::map<std::string, std::set<std::uint32_t>> test;

    std::vector<bool> in_train(n_docs);
    for (std::size_t u = 0; u < train_user_doc.rows(); ++u) {
        auto test_row = test_user_doc.row(u);
        if (test_row.empty()) continue;

        std::fill(in_train.begin(), in_train.end(), false);
        if (protocol.exclude_train)
            for (const auto& e : train_user_doc.row(u)) in_train[e.col] = true;

        std::set<std::uint32_t> test_set;
        for (const auto& e : test_row)
            if (!in_train[e.col]) test_set.insert(e.col);

        std::vector<double> scores = scores_for_user(u);
        if (scores.size() != n_docs)
            throw std::invalid_argument("evaluate_scores: score vector has wrong length");

        std::vector<std::uint32_t> candidates;
        candidates.reserve(n_docs);
        for (std::size_t d = 0; d < n_docs; ++d)
            if (!in_train[d]) candidates.push_back(static_cast<std::uint32_t>(d));
        std::stable_sort(candidates.begin(), candidates.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return scores[a] > scores[b]; });

        recommendations.emplace(user_ids[u], std::move(candidates));
        test.emplace(user_ids[u], std::move(test_set));
    }
    return rank_score(recommendations, test, protocol.alpha);
}

void save_eval_report(const EvalReport& report, std::ostream& out) {
    for (const auto& [user, score] : report.per_user)
        out << user << ' ' << detail::fmt_double(score.r_u) << ' '
            << detail::fmt_double(score.r_u_max) << '\n';
    out << "R " << detail::fmt_double(report.r) << " alpha " << detail::fmt_double(report.alpha)
        << '\n';
}

}  // namespace recsys
