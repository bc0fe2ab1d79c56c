#include "recsys/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "recsys/textproc.hpp"
#include "text_io.hpp"

namespace recsys {

namespace {

// Interner preserving first-seen order.
class Interner {
public:
    std::uint32_t intern(const std::string& id) {
        auto [it, inserted] = index_.try_emplace(id, static_cast<std::uint32_t>(ids_.size()));
        if (inserted) ids_.push_back(id);
        return it->second;
    }
    std::vector<std::string> take() { return std::move(ids_); }

private:
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<std::string> ids_;
};

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

}  // namespace

std::optional<std::size_t> Corpus::user_index(std::string_view id) const {
    auto it = std::find(users.begin(), users.end(), id);
    if (it == users.end()) return std::nullopt;
    return static_cast<std::size_t>(it - users.begin());
}

std::optional<std::size_t> Corpus::document_index(std::string_view id) const {
    auto it = std::find(documents.begin(), documents.end(), id);
    if (it == documents.end()) return std::nullopt;
    return static_cast<std::size_t>(it - documents.begin());
}

std::optional<std::int64_t> parse_iso8601(std::string_view s) {
    if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
    // YYYY-MM-DDTHH:MM:SS
    if (s.size() != 19 || s[4] != '-' || s[7] != '-' || s[10] != 'T' ||
        s[13] != ':' || s[16] != ':')
        return std::nullopt;
    auto field = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        std::string_view f = s.substr(pos, len);
        if (!all_digits(f)) return std::nullopt;
        int v = 0;
        for (char c : f) v = v * 10 + (c - '0');
        return v;
    };
    auto year = field(0, 4), month = field(5, 2), day = field(8, 2);
    auto hour = field(11, 2), minute = field(14, 2), second = field(17, 2);
    if (!year || !month || !day || !hour || !minute || !second) return std::nullopt;
    if (*month < 1 || *month > 12 || *day < 1 || *day > 31) return std::nullopt;
    if (*hour > 23 || *minute > 59 || *second > 60) return std::nullopt;
    return days_from_civil(*year, static_cast<unsigned>(*month), static_cast<unsigned>(*day)) *
               86400 +
           *hour * 3600 + *minute * 60 + *second;
}

std::string format_iso8601(std::int64_t t) {
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    std::int64_t y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lld",
                  static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
    return buf;
}

std::vector<AccessEvent> parse_access_log(std::istream& in,
                                          std::vector<RejectedLine>& rejected) {
    std::vector<AccessEvent> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t t1 = line.find('\t');
        std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos ||
            line.find('\t', t2 + 1) != std::string::npos) {
            rejected.push_back({line_no, "expected 3 tab-separated fields"});
            continue;
        }
        std::string user = line.substr(0, t1);
        std::string doc = line.substr(t1 + 1, t2 - t1 - 1);
        std::string ts = line.substr(t2 + 1);
        if (user.empty() || doc.empty()) {
            rejected.push_back({line_no, "empty identifier"});
            continue;
        }
        auto when = parse_iso8601(ts);
        if (!when) {
            rejected.push_back({line_no, "bad timestamp '" + ts + "'"});
            continue;
        }
        events.push_back({std::move(user), std::move(doc), *when});
    }
    return events;
}

Corpus ingest_access_log(const std::vector<AccessEvent>& events) {
    Interner users, docs;
    std::vector<SparseCounts::Entry> triplets;
    triplets.reserve(events.size());
    for (const AccessEvent& e : events) {
        std::uint32_t u = users.intern(e.user);
        std::uint32_t d = docs.intern(e.document);
        triplets.push_back({u, d, 1.0});
    }
    Corpus corpus;
    corpus.users = users.take();
    corpus.documents = docs.take();
    corpus.user_doc = SparseCounts::from_triplets(corpus.users.size(),
                                                  corpus.documents.size(), std::move(triplets));
    corpus.doc_word = SparseCounts(corpus.documents.size(), 0);
    return corpus;
}

void ingest_documents(Corpus& corpus,
                      const std::vector<std::pair<std::string, std::string>>& texts,
                      std::size_t truncation_bytes,
                      const std::unordered_set<std::string>* stopwords) {
    std::unordered_map<std::string, std::uint32_t> doc_index;
    for (std::size_t d = 0; d < corpus.documents.size(); ++d)
        doc_index.emplace(corpus.documents[d], static_cast<std::uint32_t>(d));

    Interner words;
    std::vector<SparseCounts::Entry> triplets;
    for (const auto& [doc_id, text] : texts) {
        auto it = doc_index.find(doc_id);
        if (it == doc_index.end())
            throw std::invalid_argument("ingest_documents: unknown document '" + doc_id + "'");
        std::string_view truncated(text);
        if (truncated.size() > truncation_bytes) truncated = truncated.substr(0, truncation_bytes);
        for (const std::string& token : tokenize(truncated)) {
            if (stopwords && stopwords->count(token)) continue;
            triplets.push_back({it->second, words.intern(token), 1.0});
        }
    }
    corpus.vocabulary = words.take();
    corpus.doc_word = SparseCounts::from_triplets(corpus.documents.size(),
                                                  corpus.vocabulary.size(), std::move(triplets));
}

Corpus select_dense_subset(const Corpus& corpus, std::size_t n_users, std::size_t n_docs) {
    if (n_users > corpus.users.size() || n_docs > corpus.documents.size())
        throw std::invalid_argument("select_dense_subset: request exceeds corpus size");

    // Most active users; ties break toward the earlier interned index.
    std::vector<double> activity = corpus.user_doc.row_sums();
    std::vector<std::size_t> user_order(corpus.users.size());
    std::iota(user_order.begin(), user_order.end(), 0);
    std::stable_sort(user_order.begin(), user_order.end(),
                     [&](std::size_t a, std::size_t b) { return activity[a] > activity[b]; });
    user_order.resize(n_users);
    std::sort(user_order.begin(), user_order.end());  // keep original relative order

    // Document access counts restricted to the kept users.
    std::vector<std::uint32_t> user_map(corpus.users.size(), UINT32_MAX);
    for (std::size_t i = 0; i < user_order.size(); ++i)
        user_map[user_order[i]] = static_cast<std::uint32_t>(i);
    std::vector<double> doc_activity(corpus.documents.size(), 0.0);
    for (const auto& e : corpus.user_doc.entries())
        if (user_map[e.row] != UINT32_MAX) doc_activity[e.col] += e.value;

    std::vector<std::size_t> doc_order(corpus.documents.size());
    std::iota(doc_order.begin(), doc_order.end(), 0);
    std::stable_sort(doc_order.begin(), doc_order.end(),
                     [&](std::size_t a, std::size_t b) { return doc_activity[a] > doc_activity[b]; });
    doc_order.resize(n_docs);
    std::sort(doc_order.begin(), doc_order.end());

    std::vector<std::uint32_t> doc_map(corpus.documents.size(), UINT32_MAX);
    for (std::size_t i = 0; i < doc_order.size(); ++i)
        doc_map[doc_order[i]] = static_cast<std::uint32_t>(i);

    Corpus out;
    out.users.reserve(n_users);
    for (std::size_t u : user_order) out.users.push_back(corpus.users[u]);
    out.documents.reserve(n_docs);
    for (std::size_t d : doc_order) out.documents.push_back(corpus.documents[d]);
    out.vocabulary = corpus.vocabulary;

    std::vector<SparseCounts::Entry> ud;
    for (const auto& e : corpus.user_doc.entries())
        if (user_map[e.row] != UINT32_MAX && doc_map[e.col] != UINT32_MAX)
            ud.push_back({user_map[e.row], doc_map[e.col], e.value});
    out.user_doc = SparseCounts::from_triplets(n_users, n_docs, std::move(ud));

    std::vector<SparseCounts::Entry> dw;
    for (const auto& e : corpus.doc_word.entries())
        if (doc_map[e.row] != UINT32_MAX) dw.push_back({doc_map[e.row], e.col, e.value});
    out.doc_word = SparseCounts::from_triplets(n_docs, corpus.vocabulary.size(), std::move(dw));
    return out;
}

std::pair<Corpus, Corpus> temporal_split(const std::vector<AccessEvent>& events,
                                         std::int64_t cutoff) {
    Interner users, docs;
    std::vector<SparseCounts::Entry> train, test;
    for (const AccessEvent& e : events) {
        std::uint32_t u = users.intern(e.user);
        std::uint32_t d = docs.intern(e.document);
        (e.timestamp < cutoff ? train : test).push_back({u, d, 1.0});
    }
    Corpus a, b;
    a.users = users.take();
    a.documents = docs.take();
    b.users = a.users;
    b.documents = a.documents;
    a.user_doc = SparseCounts::from_triplets(a.users.size(), a.documents.size(), std::move(train));
    b.user_doc = SparseCounts::from_triplets(b.users.size(), b.documents.size(), std::move(test));
    a.doc_word = SparseCounts(a.documents.size(), 0);
    b.doc_word = SparseCounts(b.documents.size(), 0);
    return {std::move(a), std::move(b)};
}

namespace {

void write_ids(std::ostream& out, const char* name, const std::vector<std::string>& ids) {
    out << name << ' ' << ids.size() << '\n';
    for (const std::string& id : ids) out << id << '\n';
}

void write_matrix(std::ostream& out, const char* name, const SparseCounts& m) {
    out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
    for (const auto& e : m.entries())
        out << e.row << ' ' << e.col << ' ' << detail::fmt_double(e.value) << '\n';
}

std::string next_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(std::string("corpus snapshot: missing ") + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string f;
    while (ss >> f) fields.push_back(f);
    return fields;
}

std::vector<std::string> read_ids(std::istream& in, const std::string& name) {
    auto header = split_ws(next_line(in, "identifier header"));
    if (header.size() != 2 || header[0] != name)
        throw std::runtime_error("corpus snapshot: expected '" + name + " <count>' header");
    std::size_t n = detail::parse_size(header[1]);
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back(next_line(in, "identifier"));
    return ids;
}

SparseCounts read_matrix(std::istream& in, const std::string& name,
                         std::size_t rows, std::size_t cols) {
    auto header = split_ws(next_line(in, "matrix header"));
    if (header.size() != 5 || header[0] != "matrix" || header[1] != name)
        throw std::runtime_error("corpus snapshot: expected 'matrix " + name + "' header");
    if (detail::parse_size(header[2]) != rows || detail::parse_size(header[3]) != cols)
        throw std::runtime_error("corpus snapshot: matrix " + name + " dimensions disagree");
    std::size_t nnz = detail::parse_size(header[4]);
    std::vector<SparseCounts::Entry> triplets;
    triplets.reserve(nnz);
    for (std::size_t i = 0; i < nnz; ++i) {
        auto fields = split_ws(next_line(in, "matrix entry"));
        if (fields.size() != 3) throw std::runtime_error("corpus snapshot: bad matrix entry");
        triplets.push_back({static_cast<std::uint32_t>(detail::parse_size(fields[0])),
                            static_cast<std::uint32_t>(detail::parse_size(fields[1])),
                            detail::parse_double(fields[2])});
    }
    return SparseCounts::from_triplets(rows, cols, std::move(triplets));
}

}  // namespace

void save_corpus(const Corpus& corpus, std::ostream& out) {
    out << "recsys-corpus v1\n";
    write_ids(out, "users", corpus.users);
    write_ids(out, "documents", corpus.documents);
    write_ids(out, "vocabulary", corpus.vocabulary);
    write_matrix(out, "user_doc", corpus.user_doc);
    write_matrix(out, "doc_word", corpus.doc_word);
}

Corpus load_corpus(std::istream& in) {
    if (next_line(in, "magic") != "recsys-corpus v1")
        throw std::runtime_error("corpus snapshot: bad magic line");
    Corpus corpus;
    corpus.users = read_ids(in, "users");
    corpus.documents = read_ids(in, "documents");
    corpus.vocabulary = read_ids(in, "vocabulary");
    corpus.user_doc =
        read_matrix(in, "user_doc", corpus.users.size(), corpus.documents.size());
    corpus.doc_word =
        read_matrix(in, "doc_word", corpus.documents.size(), corpus.vocabulary.size());
    return corpus;
}

void save_corpus_file(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    save_corpus(corpus, out);
    if (!out) throw std::runtime_error("error writing '" + path + "'");
}

Corpus load_corpus_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return load_corpus(in);
}

std::unordered_set<std::string> load_stopwords_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open stopword file '" + path + "'");
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) words.insert(line);
    }
    return words;
}

}  // namespace recsys
