#include <doctest.h>

#include <cmath>
#include <map>
#include <stdexcept>

#include "recsys/corpus.hpp"
#include "recsys/synth.hpp"

using namespace recsys;

TEST_CASE("three-group scheme keeps counts inside the blocks") {
    auto spec = SyntheticSpec::blocks(3, 50, 300, 0.04, 77);
    auto data = generate(spec);
    const auto& ud = data.corpus.user_doc;
    CHECK(ud.rows() == 150);
    CHECK(ud.cols() == 900);
    for (const auto& e : ud.entries()) {
        std::size_t user_group = e.row / 50;
        std::size_t doc_group = e.col / 300;
        CHECK(user_group == doc_group);
        CHECK(e.value == 1.0);
    }
    // user 10 reads only papers 0..299
    for (const auto& e : ud.row(10)) CHECK(e.col < 300);
}

TEST_CASE("zero density yields an empty matrix") {
    auto spec = SyntheticSpec::blocks(2, 5, 10, 0.0, 1);
    CHECK(generate(spec).corpus.user_doc.nnz() == 0);
}

TEST_CASE("realized count stays within four binomial deviations") {
    auto spec = SyntheticSpec::blocks(3, 50, 300, 0.04, 12345);
    auto ud = generate(spec).corpus.user_doc;
    double total_cells = 150.0 * 900.0;
    double in_block = 3.0 * 50.0 * 300.0;
    double p = spec.density * total_cells / in_block;
    double expected = p * in_block;
    double sigma = std::sqrt(in_block * p * (1.0 - p));
    CHECK(std::abs(double(ud.nnz()) - expected) <= 4.0 * sigma);
}

TEST_CASE("generation is deterministic per seed") {
    auto spec = SyntheticSpec::blocks(2, 10, 20, 0.1, 55);
    spec.content = ContentSpec{8, 12};
    auto a = generate(spec);
    auto b = generate(spec);
    CHECK(a.corpus.user_doc == b.corpus.user_doc);
    CHECK(a.corpus.doc_word == b.corpus.doc_word);
    CHECK(a.texts == b.texts);

    spec.seed = 56;
    CHECK(!(generate(spec).corpus.user_doc == a.corpus.user_doc));
}

TEST_CASE("unachievable density is rejected") {
    // blocks cover 1/2 of the cells, so density must stay below 0.5
    auto spec = SyntheticSpec::blocks(2, 10, 10, 0.6, 1);
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
    spec.density = 0.5;
    CHECK_NOTHROW(generate(spec));
}

TEST_CASE("group content uses disjoint vocabulary blocks") {
    auto spec = SyntheticSpec::blocks(3, 4, 6, 0.2, 9);
    spec.content = ContentSpec{5, 30};
    auto data = generate(spec);
    const auto& dw = data.corpus.doc_word;
    CHECK(dw.cols() == 15);
    for (const auto& e : dw.entries()) {
        std::size_t doc_group = e.row / 6;
        std::size_t word_group = e.col / 5;
        CHECK(doc_group == word_group);
    }
    // every document carries exactly tokens_per_doc tokens
    auto lengths = dw.row_sums();
    for (double len : lengths) CHECK(len == 30.0);
}

TEST_CASE("emitted texts tokenize back to the same counts") {
    auto spec = SyntheticSpec::blocks(2, 3, 4, 0.3, 21);
    spec.content = ContentSpec{6, 15};
    auto data = generate(spec);

    Corpus reparsed;
    reparsed.users = data.corpus.users;
    reparsed.documents = data.corpus.documents;
    reparsed.user_doc = data.corpus.user_doc;
    reparsed.doc_word = SparseCounts(reparsed.documents.size(), 0);
    std::vector<std::pair<std::string, std::string>> texts;
    for (std::size_t d = 0; d < data.texts.size(); ++d)
        texts.push_back({data.corpus.documents[d], data.texts[d]});
    ingest_documents(reparsed, texts, 1 << 20);

    // compare counts keyed by word string (interning order differs)
    std::map<std::pair<std::string, std::string>, double> expect, got;
    for (const auto& e : data.corpus.doc_word.entries())
        expect[{data.corpus.documents[e.row], data.corpus.vocabulary[e.col]}] = e.value;
    for (const auto& e : reparsed.doc_word.entries())
        got[{reparsed.documents[e.row], reparsed.vocabulary[e.col]}] = e.value;
    CHECK(expect == got);
}

TEST_CASE("overfit experiment structure and determinism") {
    auto tmpl = SyntheticSpec::blocks(3, 8, 20, 0.0, 0);
    OverfitExperimentConfig cfg;
    cfg.K = 2;
    cfg.restarts = 3;
    cfg.max_iters = 6;
    cfg.seed = 99;
    auto points = overfit_experiment(tmpl, {0.05, 0.15}, cfg);
    REQUIRE(points.size() == 2);
    for (const auto& p : points) {
        CHECK(p.per_restart.size() == 3);
        for (std::size_t it : p.per_restart) {
            CHECK(it >= 1);
            CHECK(it <= cfg.max_iters);
        }
        double sum = 0.0;
        for (std::size_t it : p.per_restart) sum += double(it);
        CHECK(p.mean_overfit_iteration == sum / 3.0);
    }
    auto again = overfit_experiment(tmpl, {0.05, 0.15}, cfg);
    CHECK(again[0].per_restart == points[0].per_restart);
    CHECK(again[1].per_restart == points[1].per_restart);
}
