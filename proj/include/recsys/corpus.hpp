#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "recsys/sparse_counts.hpp"

namespace recsys {

// One access-log record. Timestamps are seconds since the Unix epoch, UTC.
struct AccessEvent {
    std::string user;
    std::string document;
    std::int64_t timestamp = 0;
};

// Identifier lists plus the two count matrices. Identifier order is the
// interning (first-seen) order and is what row/column indices refer to.
struct Corpus {
    std::vector<std::string> users;
    std::vector<std::string> documents;
    std::vector<std::string> vocabulary;
    SparseCounts user_doc;  // |users| x |documents|
    SparseCounts doc_word;  // |documents| x |vocabulary|

    std::optional<std::size_t> user_index(std::string_view id) const;
    std::optional<std::size_t> document_index(std::string_view id) const;
};

// "YYYY-MM-DDTHH:MM:SS" with an optional trailing 'Z'.
std::optional<std::int64_t> parse_iso8601(std::string_view s);
std::string format_iso8601(std::int64_t t);

struct RejectedLine {
    std::size_t line_number = 0;  // 1-based
    std::string reason;
};

// Reads "user<TAB>doc<TAB>timestamp" lines. Malformed lines are collected in
// `rejected` and skipped; parsing always continues.
std::vector<AccessEvent> parse_access_log(std::istream& in,
                                          std::vector<RejectedLine>& rejected);

// Counts (u,d) access events; identifiers are interned in first-seen order.
// The doc_word matrix is left |documents| x 0.
Corpus ingest_access_log(const std::vector<AccessEvent>& events);

// Tokenizes each text (truncated to truncation_bytes first) and fills
// doc_word and vocabulary. Throws when a document identifier is unknown.
void ingest_documents(Corpus& corpus,
                      const std::vector<std::pair<std::string, std::string>>& texts,
                      std::size_t truncation_bytes,
                      const std::unordered_set<std::string>* stopwords = nullptr);

// Keeps the n_users most active users, then the n_docs documents with the
// greatest access count among those users. Ties break toward the earlier
// interned identifier. Matrices are restricted and reindexed.
Corpus select_dense_subset(const Corpus& corpus, std::size_t n_users, std::size_t n_docs);

// Events strictly before the cutoff go to train, at/after to test. Both
// corpora share the identifier interning over the full event stream.
std::pair<Corpus, Corpus> temporal_split(const std::vector<AccessEvent>& events,
                                         std::int64_t cutoff);

// Flat text snapshot; round-trips bit-exactly.
void save_corpus(const Corpus& corpus, std::ostream& out);
void save_corpus_file(const Corpus& corpus, const std::string& path);
Corpus load_corpus(std::istream& in);
Corpus load_corpus_file(const std::string& path);

// One word per line.
std::unordered_set<std::string> load_stopwords_file(const std::string& path);

}  // namespace recsys
