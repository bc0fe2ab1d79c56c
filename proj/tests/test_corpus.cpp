#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "recsys/corpus.hpp"

using namespace recsys;

namespace {

AccessEvent ev(const char* u, const char* d, const char* ts) {
    auto t = parse_iso8601(ts);
    REQUIRE(t.has_value());
    return {u, d, *t};
}

// Counts keyed by identifier pair, independent of interning order.
std::map<std::pair<std::string, std::string>, double> counts_by_id(const Corpus& c) {
    std::map<std::pair<std::string, std::string>, double> m;
    for (const auto& e : c.user_doc.entries())
        m[{c.users[e.row], c.documents[e.col]}] = e.value;
    return m;
}

}  // namespace

TEST_CASE("iso8601 parsing and formatting") {
    auto t = parse_iso8601("2000-07-14T09:30:00");
    REQUIRE(t.has_value());
    CHECK(format_iso8601(*t) == "2000-07-14T09:30:00");
    CHECK(parse_iso8601("2000-07-14T09:30:00Z") == t);
    CHECK(parse_iso8601("1970-01-01T00:00:00") == 0);

    CHECK(!parse_iso8601("2000-07-14"));
    CHECK(!parse_iso8601("2000-13-14T09:30:00"));
    CHECK(!parse_iso8601("2000-07-14 09:30:00"));
    CHECK(!parse_iso8601("not a date"));

    // order respects time
    CHECK(*parse_iso8601("2000-10-31T23:59:59") < *parse_iso8601("2000-11-01T00:00:00"));
}

TEST_CASE("access log parsing reports malformed lines") {
    std::istringstream in(
        "alice\tdoc1\t2000-07-01T10:00:00\n"
        "broken line without tabs\n"
        "bob\tdoc2\tnot-a-time\n"
        "\tdoc3\t2000-07-01T10:00:00\n"
        "carol\tdoc1\t2000-08-02T11:30:00\n");
    std::vector<RejectedLine> rejected;
    auto events = parse_access_log(in, rejected);
    REQUIRE(events.size() == 2);
    CHECK(events[0].user == "alice");
    CHECK(events[1].user == "carol");
    REQUIRE(rejected.size() == 3);
    CHECK(rejected[0].line_number == 2);
    CHECK(rejected[1].line_number == 3);
    CHECK(rejected[1].reason.find("timestamp") != std::string::npos);
    CHECK(rejected[2].line_number == 4);
}

TEST_CASE("ingest counts repeat accesses") {
    std::vector<AccessEvent> events = {ev("A", "d1", "2000-07-01T00:00:00"),
                                       ev("A", "d1", "2000-07-02T00:00:00"),
                                       ev("B", "d2", "2000-07-03T00:00:00")};
    Corpus c = ingest_access_log(events);
    REQUIRE(c.users == std::vector<std::string>{"A", "B"});
    REQUIRE(c.documents == std::vector<std::string>{"d1", "d2"});
    CHECK(c.user_doc.value_at(0, 0) == 2.0);
    CHECK(c.user_doc.value_at(1, 1) == 1.0);
    CHECK(density(c.user_doc) == 0.5);
}

TEST_CASE("empty stream yields an empty corpus") {
    Corpus c = ingest_access_log({});
    CHECK(c.users.empty());
    CHECK(c.user_doc.rows() == 0);
    CHECK(density(c.user_doc) == 0.0);
}

TEST_CASE("ingest is order-insensitive up to interning") {
    std::vector<AccessEvent> events = {
        ev("A", "d1", "2000-07-01T00:00:00"), ev("B", "d2", "2000-07-02T00:00:00"),
        ev("A", "d2", "2000-07-03T00:00:00"), ev("C", "d1", "2000-07-04T00:00:00"),
        ev("A", "d1", "2000-07-05T00:00:00")};
    Corpus base = ingest_access_log(events);

    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(events.begin(), events.end(), gen);
        Corpus shuffled = ingest_access_log(events);
        CHECK(counts_by_id(shuffled) == counts_by_id(base));
    }
}

TEST_CASE("document ingestion tokenizes with truncation") {
    Corpus c = ingest_access_log({ev("A", "d1", "2000-07-01T00:00:00"),
                                  ev("A", "d2", "2000-07-02T00:00:00")});
    ingest_documents(c, {{"d1", "em em algorithm"}, {"d2", "the em"}}, 5120);
    REQUIRE(c.vocabulary == std::vector<std::string>{"em", "algorithm", "the"});
    CHECK(c.doc_word.value_at(0, 0) == 2.0);
    CHECK(c.doc_word.value_at(0, 1) == 1.0);
    CHECK(c.doc_word.value_at(1, 0) == 1.0);

    SUBCASE("truncation cuts the byte stream before tokenizing") {
        Corpus t = ingest_access_log({ev("A", "d1", "2000-07-01T00:00:00")});
        ingest_documents(t, {{"d1", "em em algorithm"}}, 5);
        REQUIRE(t.vocabulary == std::vector<std::string>{"em"});
        CHECK(t.doc_word.value_at(0, 0) == 2.0);  // "em em"
    }
    SUBCASE("zero truncation leaves an empty row") {
        Corpus t = ingest_access_log({ev("A", "d1", "2000-07-01T00:00:00")});
        ingest_documents(t, {{"d1", "em em algorithm"}}, 0);
        CHECK(t.doc_word.nnz() == 0);
    }
    SUBCASE("unknown document identifier is an error") {
        Corpus t = ingest_access_log({ev("A", "d1", "2000-07-01T00:00:00")});
        CHECK_THROWS_WITH_AS(ingest_documents(t, {{"dX", "words"}}, 5120),
                             doctest::Contains("dX"), std::invalid_argument);
    }
    SUBCASE("stopwords are dropped") {
        Corpus t = ingest_access_log({ev("A", "d1", "2000-07-01T00:00:00")});
        std::unordered_set<std::string> stop = {"the"};
        ingest_documents(t, {{"d1", "the em the"}}, 5120, &stop);
        REQUIRE(t.vocabulary == std::vector<std::string>{"em"});
    }
}

TEST_CASE("dense subset keeps the most active users and their documents") {
    // A: 3 accesses, B: 2, C: 2 (ties with B, interned later), D: 1
    std::vector<AccessEvent> events = {
        ev("A", "d1", "2000-07-01T00:00:00"), ev("A", "d1", "2000-07-02T00:00:00"),
        ev("A", "d2", "2000-07-03T00:00:00"), ev("B", "d2", "2000-07-04T00:00:00"),
        ev("B", "d3", "2000-07-05T00:00:00"), ev("C", "d4", "2000-07-06T00:00:00"),
        ev("C", "d4", "2000-07-07T00:00:00"), ev("D", "d1", "2000-07-08T00:00:00")};
    Corpus c = ingest_access_log(events);

    SUBCASE("activity ties break toward the earlier interned user") {
        Corpus s = select_dense_subset(c, 2, 2);
        CHECK(s.users == std::vector<std::string>{"A", "B"});
    }
    SUBCASE("documents are ranked by accesses from the kept users only") {
        Corpus s = select_dense_subset(c, 2, 2);
        // Among A and B: d1 has 2, d2 has 2, d3 has 1, d4 has 0.
        CHECK(s.documents == std::vector<std::string>{"d1", "d2"});
        CHECK(s.user_doc.value_at(0, 0) == 2.0);
        CHECK(s.user_doc.value_at(0, 1) == 1.0);
        CHECK(s.user_doc.value_at(1, 1) == 1.0);
    }
    SUBCASE("selecting everything is the identity") {
        Corpus s = select_dense_subset(c, 4, 4);
        CHECK(s.users == c.users);
        CHECK(s.documents == c.documents);
        CHECK(s.user_doc == c.user_doc);
    }
    SUBCASE("oversized requests are rejected") {
        CHECK_THROWS_AS(select_dense_subset(c, 5, 2), std::invalid_argument);
        CHECK_THROWS_AS(select_dense_subset(c, 2, 9), std::invalid_argument);
    }
    SUBCASE("subset counts are exactly the restriction of the original") {
        Corpus s = select_dense_subset(c, 3, 3);
        for (std::size_t u = 0; u < s.users.size(); ++u)
            for (std::size_t d = 0; d < s.documents.size(); ++d) {
                auto uu = c.user_index(s.users[u]);
                auto dd = c.document_index(s.documents[d]);
                REQUIRE(uu.has_value());
                REQUIRE(dd.has_value());
                CHECK(s.user_doc.value_at(u, d) == c.user_doc.value_at(*uu, *dd));
            }
    }
}

TEST_CASE("temporal split partitions events at the cutoff") {
    std::vector<AccessEvent> events = {
        ev("A", "d1", "2000-07-01T00:00:00"), ev("A", "d1", "2000-10-30T00:00:00"),
        ev("B", "d2", "2000-11-02T00:00:00"), ev("A", "d2", "2000-11-15T00:00:00")};
    auto cutoff = *parse_iso8601("2000-11-01T00:00:00");
    auto [train, test] = temporal_split(events, cutoff);

    CHECK(train.users == test.users);
    CHECK(train.documents == test.documents);
    CHECK(train.user_doc.value_at(0, 0) == 2.0);
    CHECK(test.user_doc.value_at(1, 1) == 1.0);
    CHECK(test.user_doc.value_at(0, 1) == 1.0);

    SUBCASE("train + test equals total per pair") {
        for (std::size_t u = 0; u < train.users.size(); ++u)
            for (std::size_t d = 0; d < train.documents.size(); ++d) {
                double total = 0.0;
                for (const auto& e : events)
                    if (e.user == train.users[u] && e.document == train.documents[d]) total += 1.0;
                CHECK(train.user_doc.value_at(u, d) + test.user_doc.value_at(u, d) == total);
            }
    }
    SUBCASE("an event exactly at the cutoff lands in test") {
        auto [tr, te] = temporal_split({{"A", "d1", cutoff}}, cutoff);
        CHECK(tr.user_doc.nnz() == 0);
        CHECK(te.user_doc.value_at(0, 0) == 1.0);
    }
    SUBCASE("all events before the cutoff leave test empty") {
        auto [tr, te] = temporal_split(events, *parse_iso8601("2001-01-01T00:00:00"));
        CHECK(te.user_doc.nnz() == 0);
        CHECK(tr.user_doc.nnz() == 3);
    }
}

TEST_CASE("corpus snapshot round-trips bit-exactly") {
    Corpus c = ingest_access_log({ev("alice", "paper one", "2000-07-01T12:00:00"),
                                  ev("bob", "paper two", "2000-07-02T12:00:00"),
                                  ev("alice", "paper two", "2000-07-03T12:00:00")});
    ingest_documents(c, {{"paper one", "em aspect model em"}, {"paper two", "ranking metric"}},
                     5120);
    // Inject a real-valued (smoothed-looking) entry to exercise decimals.
    auto es = c.user_doc.entries();
    std::vector<SparseCounts::Entry> with_real(es.begin(), es.end());
    with_real.push_back({1, 0, 0.12345678901234567});
    c.user_doc = SparseCounts::from_triplets(c.user_doc.rows(), c.user_doc.cols(), with_real);

    std::stringstream buf;
    save_corpus(c, buf);
    Corpus back = load_corpus(buf);
    CHECK(back.users == c.users);
    CHECK(back.documents == c.documents);
    CHECK(back.vocabulary == c.vocabulary);
    CHECK(back.user_doc == c.user_doc);
    CHECK(back.doc_word == c.doc_word);

    // Saving the reload produces identical bytes.
    std::stringstream buf2;
    save_corpus(back, buf2);
    std::stringstream buf3;
    save_corpus(c, buf3);
    CHECK(buf2.str() == buf3.str());
}
