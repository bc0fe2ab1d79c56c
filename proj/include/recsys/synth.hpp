#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "recsys/aspect.hpp"
#include "recsys/corpus.hpp"

namespace recsys {

// Half-open index ranges owned by one interest group.
struct GroupRange {
    std::size_t user_begin = 0, user_end = 0;
    std::size_t doc_begin = 0, doc_end = 0;
};

// Per-group disjoint vocabulary blocks; document tokens are drawn uniformly
// from the owning group's block.
struct ContentSpec {
    std::size_t vocab_per_group = 40;
    std::size_t tokens_per_doc = 60;
};

struct SyntheticSpec {
    std::size_t n_users = 0;
    std::size_t n_docs = 0;
    std::vector<GroupRange> groups;
    double density = 0.0;  // target fraction of nonzero cells over the full matrix
    std::uint64_t seed = 0;
    std::optional<ContentSpec> content;

    void validate() const;  // throws std::invalid_argument

    // The block scheme with `groups` equal groups of users_per_group x
    // docs_per_group, covering the whole matrix.
    static SyntheticSpec blocks(std::size_t groups, std::size_t users_per_group,
                                std::size_t docs_per_group, double density, std::uint64_t seed);
};

struct SyntheticData {
    Corpus corpus;
    // One text per document when content was requested (space-joined tokens);
    // empty otherwise.
    std::vector<std::string> texts;
};

// Each in-group cell is set to 1 with the probability that makes the expected
// density match spec.density; out-of-group cells are always 0.
SyntheticData generate(const SyntheticSpec& spec);

struct OverfitPoint {
    double density = 0.0;
    double mean_overfit_iteration = 0.0;
    std::vector<std::size_t> per_restart;
};

struct OverfitExperimentConfig {
    std::size_t K = 3;
    std::size_t restarts = 50;
    std::size_t max_iters = 30;
    std::uint64_t seed = 0;
};

// For each density: generate paired train/test sets, run `restarts`
// independently seeded untempered EM runs validating against the test set,
// and average the overfit iteration. Restarts that never overfit within
// max_iters contribute max_iters.
std::vector<OverfitPoint> overfit_experiment(const SyntheticSpec& tmpl,
                                             const std::vector<double>& densities,
                                             const OverfitExperimentConfig& config);

}  // namespace recsys
