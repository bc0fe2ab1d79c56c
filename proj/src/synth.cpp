#include "recsys/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "recsys/rng.hpp"

namespace recsys {

namespace {

std::size_t in_block_cells(const SyntheticSpec& spec) {
    std::size_t cells = 0;
    for (const GroupRange& g : spec.groups)
        cells += (g.user_end - g.user_begin) * (g.doc_end - g.doc_begin);
    return cells;
}

// Alphabetic token for a word index ("wa", "wb", ..., "wba", ...), so that
// emitted texts tokenize back to the same vocabulary.
std::string word_token(std::size_t index) {
    std::string suffix;
    do {
        suffix.push_back(static_cast<char>('a' + index % 26));
        index /= 26;
    } while (index > 0);
    std::reverse(suffix.begin(), suffix.end());
    return "w" + suffix;
}

}  // namespace

void SyntheticSpec::validate() const {
    if (n_users == 0 || n_docs == 0)
        throw std::invalid_argument("SyntheticSpec: empty user or document space");
    if (!(density >= 0.0 && density <= 1.0))
        throw std::invalid_argument("SyntheticSpec: density must lie in [0,1]");
    for (const GroupRange& g : groups) {
        if (g.user_begin >= g.user_end || g.user_end > n_users || g.doc_begin >= g.doc_end ||
            g.doc_end > n_docs)
            throw std::invalid_argument("SyntheticSpec: group range out of bounds");
    }
    for (std::size_t i = 0; i < groups.size(); ++i) {
        for (std::size_t j = i + 1; j < groups.size(); ++j) {
            const GroupRange& a = groups[i];
            const GroupRange& b = groups[j];
            if (a.user_begin < b.user_end && b.user_begin < a.user_end)
                throw std::invalid_argument("SyntheticSpec: user ranges overlap");
            if (a.doc_begin < b.doc_end && b.doc_begin < a.doc_end)
                throw std::invalid_argument("SyntheticSpec: document ranges overlap");
        }
    }
    const double total = static_cast<double>(n_users) * static_cast<double>(n_docs);
    const double in_block = static_cast<double>(in_block_cells(*this));
    if (density * total > in_block)
        throw std::invalid_argument("SyntheticSpec: density unachievable within group blocks");
    if (content && (content->vocab_per_group == 0 || content->tokens_per_doc == 0))
        throw std::invalid_argument("SyntheticSpec: content sizes must be positive");
}

SyntheticSpec SyntheticSpec::blocks(std::size_t groups, std::size_t users_per_group,
                                    std::size_t docs_per_group, double density,
                                    std::uint64_t seed) {
    SyntheticSpec spec;
    spec.n_users = groups * users_per_group;
    spec.n_docs = groups * docs_per_group;
    spec.density = density;
    spec.seed = seed;
    for (std::size_t g = 0; g < groups; ++g)
        spec.groups.push_back({g * users_per_group, (g + 1) * users_per_group, g * docs_per_group,
                               (g + 1) * docs_per_group});
    return spec;
}

SyntheticData generate(const SyntheticSpec& spec) {
    spec.validate();
    const double total = static_cast<double>(spec.n_users) * static_cast<double>(spec.n_docs);
    const double in_block = static_cast<double>(in_block_cells(spec));
    const double p = in_block > 0.0 ? spec.density * total / in_block : 0.0;

    std::mt19937_64 gen(spec.seed);
    std::vector<SparseCounts::Entry> entries;
    for (const GroupRange& g : spec.groups)
        for (std::size_t u = g.user_begin; u < g.user_end; ++u)
            for (std::size_t d = g.doc_begin; d < g.doc_end; ++d)
                if (uniform01(gen) < p)
                    entries.push_back(
                        {static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(d), 1.0});

    SyntheticData data;
    data.corpus.users.reserve(spec.n_users);
    for (std::size_t u = 0; u < spec.n_users; ++u)
        data.corpus.users.push_back("u" + std::to_string(u));
    data.corpus.documents.reserve(spec.n_docs);
    for (std::size_t d = 0; d < spec.n_docs; ++d)
        data.corpus.documents.push_back("d" + std::to_string(d));
    data.corpus.user_doc =
        SparseCounts::from_triplets(spec.n_users, spec.n_docs, std::move(entries));

    if (!spec.content) {
        data.corpus.doc_word = SparseCounts(spec.n_docs, 0);
        return data;
    }

    const std::size_t vocab = spec.content->vocab_per_group;
    const std::size_t n_words = spec.groups.size() * vocab;
    data.corpus.vocabulary.reserve(n_words);
    for (std::size_t w = 0; w < n_words; ++w) data.corpus.vocabulary.push_back(word_token(w));

    std::vector<SparseCounts::Entry> word_entries;
    data.texts.assign(spec.n_docs, "");
    for (std::size_t d = 0; d < spec.n_docs; ++d) {
        std::size_t group = spec.groups.size();
        for (std::size_t g = 0; g < spec.groups.size(); ++g)
            if (d >= spec.groups[g].doc_begin && d < spec.groups[g].doc_end) {
                group = g;
                break;
            }
        if (group == spec.groups.size()) continue;  // outside every group: no text

        std::vector<double> counts(vocab, 0.0);
        std::ostringstream text;
        for (std::size_t t = 0; t < spec.content->tokens_per_doc; ++t) {
            std::size_t pick = std::min(vocab - 1, static_cast<std::size_t>(uniform01(gen) *
                                                                            static_cast<double>(vocab)));
            counts[pick] += 1.0;
            if (t) text << ' ';
            text << word_token(group * vocab + pick);
        }
        for (std::size_t w = 0; w < vocab; ++w)
            if (counts[w] > 0.0)
                word_entries.push_back({static_cast<std::uint32_t>(d),
                                        static_cast<std::uint32_t>(group * vocab + w), counts[w]});
        data.texts[d] = text.str();
    }
    data.corpus.doc_word =
        SparseCounts::from_triplets(spec.n_docs, n_words, std::move(word_entries));
    return data;
}

std::vector<OverfitPoint> overfit_experiment(const SyntheticSpec& tmpl,
                                             const std::vector<double>& densities,
                                             const OverfitExperimentConfig& config) {
    if (config.restarts == 0)
        throw std::invalid_argument("overfit_experiment: restarts must be at least 1");

    std::vector<OverfitPoint> results;
    results.reserve(densities.size());
    for (std::size_t i = 0; i < densities.size(); ++i) {
        SyntheticSpec train_spec = tmpl;
        train_spec.density = densities[i];
        train_spec.content.reset();  // the experiment uses counts only
        train_spec.seed = splitmix64(config.seed ^ (2 * i + 1));
        SyntheticSpec test_spec = train_spec;
        test_spec.seed = splitmix64(config.seed ^ (2 * i + 2));

        const SparseCounts train_ud = generate(train_spec).corpus.user_doc;
        const SparseCounts test_ud = generate(test_spec).corpus.user_doc;

        // Test events on users/documents with no training mass have zero
        // probability under every fitted model; they are excluded from the
        // validation series.
        std::vector<double> row_mass = train_ud.row_sums();
        std::vector<double> col_mass = train_ud.col_sums();
        std::vector<SparseCounts::Entry> kept;
        for (const auto& e : test_ud.entries())
            if (row_mass[e.row] > 0.0 && col_mass[e.col] > 0.0) kept.push_back(e);
        const SparseCounts valid_ud =
            SparseCounts::from_triplets(test_ud.rows(), test_ud.cols(), std::move(kept));

        OverfitPoint point;
        point.density = densities[i];
        if (train_ud.nnz() == 0) {
            point.per_restart.assign(config.restarts, config.max_iters);
        } else {
            const ObservationSet train_obs = ObservationSet::two_way(train_ud);
            const ObservationSet valid_obs = ObservationSet::two_way(valid_ud);
            for (std::size_t r = 0; r < config.restarts; ++r) {
                TrainConfig tc;
                tc.K = config.K;
                tc.max_iters = config.max_iters;
                tc.restarts = 1;
                tc.seed = splitmix64(config.seed ^ (0x9000 + i)) + r;
                tc.tempered = false;
                tc.min_ll_gain = kNoGainStop;
                TrainResult result = train(train_obs, tc, &valid_obs);
                point.per_restart.push_back(
                    result.trace.overfit_iteration.value_or(config.max_iters));
            }
        }
        double sum = 0.0;
        for (std::size_t it : point.per_restart) sum += static_cast<double>(it);
        point.mean_overfit_iteration = sum / static_cast<double>(config.restarts);
        results.push_back(std::move(point));
    }
    return results;
}

}  // namespace recsys
