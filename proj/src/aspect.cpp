#include "recsys/aspect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "text_io.hpp"

namespace recsys {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::two_way: return "two_way";
        case ModelKind::three_way: return "three_way";
        case ModelKind::user_words: return "user_words";
    }
    return "?";
}

std::optional<ModelKind> model_kind_from_string(std::string_view s) {
    if (s == "two_way") return ModelKind::two_way;
    if (s == "three_way") return ModelKind::three_way;
    if (s == "user_words") return ModelKind::user_words;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

ObservationSet ObservationSet::two_way(const SparseCounts& user_doc) {
    ObservationSet set;
    set.kind_ = ModelKind::two_way;
    set.dims_ = {user_doc.rows(), user_doc.cols(), 0};
    set.pairs_.reserve(user_doc.nnz());
    for (const auto& e : user_doc.entries()) {
        set.pairs_.push_back({e.row, e.col, 0, e.value});
        set.total_weight_ += e.value;
    }
    return set;
}

ObservationSet ObservationSet::three_way(const SparseCounts& user_doc,
                                         const SparseCounts& doc_word) {
    if (doc_word.rows() != user_doc.cols())
        throw std::invalid_argument("ObservationSet: doc_word rows must match user_doc cols");
    ObservationSet set;
    set.kind_ = ModelKind::three_way;
    set.dims_ = {user_doc.rows(), user_doc.cols(), doc_word.cols()};
    set.doc_users_ = user_doc.transposed();
    set.doc_word_ = doc_word;
    const std::vector<double> access = set.doc_users_.row_sums();
    const std::vector<double> words = doc_word.row_sums();
    for (std::size_t d = 0; d < doc_word.rows(); ++d)
        set.total_weight_ += access[d] * words[d];
    return set;
}

ObservationSet ObservationSet::user_words(const SparseCounts& user_doc,
                                          const SparseCounts& doc_word) {
    if (doc_word.rows() != user_doc.cols())
        throw std::invalid_argument("ObservationSet: doc_word rows must match user_doc cols");
    ObservationSet set;
    set.kind_ = ModelKind::user_words;
    set.dims_ = {user_doc.rows(), user_doc.cols(), doc_word.cols()};

    // n(u,w) = sum_d n(u,d) * n(d,w), accumulated per user row.
    std::vector<double> acc(doc_word.cols(), 0.0);
    std::vector<std::uint32_t> touched;
    for (std::size_t u = 0; u < user_doc.rows(); ++u) {
        touched.clear();
        for (const auto& ud : user_doc.row(u)) {
            for (const auto& dw : doc_word.row(ud.col)) {
                if (acc[dw.col] == 0.0) touched.push_back(dw.col);
                acc[dw.col] += ud.value * dw.value;
            }
        }
        std::sort(touched.begin(), touched.end());
        for (std::uint32_t w : touched) {
            if (acc[w] > 0.0) {
                set.pairs_.push_back({static_cast<std::uint32_t>(u), 0, w, acc[w]});
                set.total_weight_ += acc[w];
            }
            acc[w] = 0.0;
        }
    }
    return set;
}

double ObservationView::total_weight() const {
    if (part == SplitPart::all) return set->total_weight();
    double total = 0.0;
    for_each([&](std::uint32_t, std::uint32_t, std::uint32_t, double wt) { total += wt; });
    return total;
}

// ---------------------------------------------------------------------------
// Model initialization
// ---------------------------------------------------------------------------

AspectModel init_model(ModelKind kind, std::size_t K, Dims dims, std::uint64_t seed) {
    if (K == 0) throw std::invalid_argument("init_model: K must be at least 1");
    if (dims.n_users == 0) throw std::invalid_argument("init_model: no users");
    if (kind != ModelKind::user_words && dims.n_docs == 0)
        throw std::invalid_argument("init_model: no documents");
    if (kind != ModelKind::two_way && dims.n_words == 0)
        throw std::invalid_argument("init_model: no words");

    AspectModel m;
    m.kind = kind;
    m.K = K;
    m.dims = dims;
    m.seed = seed;

    std::mt19937_64 gen(seed);
    m.pz.resize(K);
    double sum = 0.0;
    for (double& v : m.pz) {
        v = uniform01(gen);
        sum += v;
    }
    for (double& v : m.pz) v /= sum;

    auto draw_table = [&](std::size_t n) {
        std::vector<double> table(n * K);
        for (double& v : table) v = uniform01(gen);
        for (std::size_t z = 0; z < K; ++z) {
            double col = 0.0;
            for (std::size_t i = 0; i < n; ++i) col += table[i * K + z];
            for (std::size_t i = 0; i < n; ++i) table[i * K + z] /= col;
        }
        return table;
    };

    m.pu_z = draw_table(dims.n_users);
    if (m.has_docs()) m.pd_z = draw_table(dims.n_docs);
    if (m.has_words()) m.pw_z = draw_table(dims.n_words);
    return m;
}

// ---------------------------------------------------------------------------
// Likelihood and EM
// ---------------------------------------------------------------------------

namespace {

void check_kind(const AspectModel& model, const ObservationView& obs, const char* where) {
    if (!obs.set) throw std::invalid_argument(std::string(where) + ": null observation view");
    if (model.kind != obs.set->kind())
        throw std::invalid_argument(std::string(where) + ": model kind does not match observations");
}

}  // namespace

LogLikelihood log_likelihood(const AspectModel& model, const ObservationView& obs) {
    check_kind(model, obs, "log_likelihood");
    const std::size_t K = model.K;
    const bool has_d = model.has_docs();
    const bool has_w = model.has_words();
    double sum = 0.0;
    std::size_t zeros = 0;
    obs.for_each([&](std::uint32_t u, std::uint32_t d, std::uint32_t w, double wt) {
        double joint = 0.0;
        for (std::size_t z = 0; z < K; ++z) {
            double v = model.pz[z] * model.pu_z[u * K + z];
            if (has_d) v *= model.pd_z[d * K + z];
            if (has_w) v *= model.pw_z[w * K + z];
            joint += v;
        }
        if (joint > 0.0)
            sum += wt * std::log(joint);
        else
            ++zeros;
    });
    if (zeros > 0) return {-std::numeric_limits<double>::infinity(), zeros};
    return {sum, 0};
}

AspectModel em_iteration(const AspectModel& model, const ObservationView& obs, double beta,
                         EmStats* stats) {
    check_kind(model, obs, "em_iteration");
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::invalid_argument("em_iteration: beta must lie in (0,1]");

    const std::size_t K = model.K;
    const bool has_d = model.has_docs();
    const bool has_w = model.has_words();
    const bool plain = beta == 1.0;

    // Tempered parameter powers; with beta = 1 the originals are used as is.
    auto powed = [&](const std::vector<double>& t) {
        std::vector<double> p(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) p[i] = std::pow(t[i], beta);
        return p;
    };
    std::vector<double> pz_b, pu_b, pd_b, pw_b;
    const std::vector<double>* pz = &model.pz;
    const std::vector<double>* pu = &model.pu_z;
    const std::vector<double>* pd = &model.pd_z;
    const std::vector<double>* pw = &model.pw_z;
    if (!plain) {
        pz_b = powed(model.pz);
        pu_b = powed(model.pu_z);
        if (has_d) pd_b = powed(model.pd_z);
        if (has_w) pw_b = powed(model.pw_z);
        pz = &pz_b;
        pu = &pu_b;
        pd = &pd_b;
        pw = &pw_b;
    }

    std::vector<double> nu(model.pu_z.size(), 0.0);
    std::vector<double> nd(model.pd_z.size(), 0.0);
    std::vector<double> nw(model.pw_z.size(), 0.0);
    std::vector<double> nz(K, 0.0);
    std::vector<double> q(K);
    double ll_before = 0.0;
    double max_err = 0.0;
    double total = 0.0;

    obs.for_each([&](std::uint32_t u, std::uint32_t d, std::uint32_t w, double wt) {
        double s = 0.0;
        for (std::size_t z = 0; z < K; ++z) {
            double v = (*pz)[z] * (*pu)[u * K + z];
            if (has_d) v *= (*pd)[d * K + z];
            if (has_w) v *= (*pw)[w * K + z];
            q[z] = v;
            s += v;
        }
        if (!(s > 0.0)) {
            std::ostringstream msg;
            msg << "em_iteration: zero posterior normalizer at observation (u=" << u;
            if (has_d) msg << ", d=" << d;
            if (has_w) msg << ", w=" << w;
            msg << ")";
            throw std::runtime_error(msg.str());
        }

        double joint = s;
        if (!plain) {
            joint = 0.0;
            for (std::size_t z = 0; z < K; ++z) {
                double v = model.pz[z] * model.pu_z[u * K + z];
                if (has_d) v *= model.pd_z[d * K + z];
                if (has_w) v *= model.pw_z[w * K + z];
                joint += v;
            }
        }
        ll_before += wt * std::log(joint);

        const double inv = 1.0 / s;
        double psum = 0.0;
        for (std::size_t z = 0; z < K; ++z) {
            double p = q[z] * inv;
            psum += p;
            double wp = wt * p;
            nu[u * K + z] += wp;
            if (has_d) nd[d * K + z] += wp;
            if (has_w) nw[w * K + z] += wp;
            nz[z] += wp;
        }
        max_err = std::max(max_err, std::abs(psum - 1.0));
        total += wt;
    });
    if (total == 0.0) throw std::runtime_error("em_iteration: empty observation view");

    AspectModel out = model;
    auto renorm = [&](std::vector<double>& table, const std::vector<double>& acc, std::size_t n) {
        for (std::size_t z = 0; z < K; ++z) {
            if (nz[z] > 0.0) {
                for (std::size_t i = 0; i < n; ++i) table[i * K + z] = acc[i * K + z] / nz[z];
            } else {
                // Dead class: keep its columns a valid distribution.
                for (std::size_t i = 0; i < n; ++i) table[i * K + z] = 1.0 / static_cast<double>(n);
            }
        }
    };
    renorm(out.pu_z, nu, model.dims.n_users);
    if (has_d) renorm(out.pd_z, nd, model.dims.n_docs);
    if (has_w) renorm(out.pw_z, nw, model.dims.n_words);
    for (std::size_t z = 0; z < K; ++z) out.pz[z] = nz[z] / total;

    if (stats) {
        stats->ll_before = ll_before;
        stats->max_posterior_error = max_err;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    if (K == 0) throw std::invalid_argument("TrainConfig: K must be at least 1");
    if (max_iters == 0) throw std::invalid_argument("TrainConfig: max_iters must be at least 1");
    if (restarts == 0) throw std::invalid_argument("TrainConfig: restarts must be at least 1");
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("TrainConfig: eta must lie in (0,1)");
    if (!(beta_floor > 0.0 && beta_floor <= 1.0))
        throw std::invalid_argument("TrainConfig: beta_floor must lie in (0,1]");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
        throw std::invalid_argument("TrainConfig: holdout_fraction must lie in (0,1)");
    if (std::isnan(min_ll_gain)) throw std::invalid_argument("TrainConfig: min_ll_gain is NaN");
}

std::string TrainConfig::digest() const {
    std::ostringstream canon;
    canon << "K=" << K << ";max_iters=" << max_iters << ";restarts=" << restarts
          << ";seed=" << seed << ";tempered=" << (tempered ? 1 : 0)
          << ";eta=" << detail::fmt_double(eta) << ";beta_floor=" << detail::fmt_double(beta_floor)
          << ";holdout=" << detail::fmt_double(holdout_fraction)
          << ";min_ll_gain=" << detail::fmt_double(min_ll_gain);
    std::string s = canon.str();
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::optional<std::size_t> detect_overfit(const std::vector<double>& valid_ll) {
    for (std::size_t i = 1; i < valid_ll.size(); ++i)
        if (valid_ll[i] < valid_ll[i - 1]) return i;
    return std::nullopt;
}

TrainResult train(const ObservationSet& obs, const TrainConfig& config,
                  const ObservationSet* validation) {
    config.validate();
    if (obs.empty()) throw std::invalid_argument("train: empty observation set");
    if (validation) {
        if (validation->kind() != obs.kind())
            throw std::invalid_argument("train: validation kind does not match observations");
        const Dims& a = obs.dims();
        const Dims& b = validation->dims();
        if (a.n_users != b.n_users || (obs.kind() != ModelKind::user_words && a.n_docs != b.n_docs) ||
            (obs.kind() != ModelKind::two_way && a.n_words != b.n_words))
            throw std::invalid_argument("train: validation dimensions do not match observations");
    }

    const bool external = validation != nullptr;
    const ObservationView train_view =
        external ? ObservationView(obs)
                 : ObservationView(obs, SplitPart::train, config.seed, config.holdout_fraction);
    const ObservationView valid_view =
        external ? ObservationView(*validation)
                 : ObservationView(obs, SplitPart::validation, config.seed, config.holdout_fraction);
    if (!external && train_view.total_weight() == 0.0)
        throw std::runtime_error("train: holdout split left no training observations");

    std::optional<TrainResult> best;
    double best_valid = 0.0;
    for (std::size_t r = 0; r < config.restarts; ++r) {
        AspectModel model = init_model(obs.kind(), config.K, obs.dims(), config.seed + r);
        model.config_digest = config.digest();
        double beta = 1.0;

        TrainTrace trace;
        double t = log_likelihood(model, train_view).value;
        double v = log_likelihood(model, valid_view).value;
        trace.train_ll.push_back(t);
        trace.valid_ll.push_back(v);
        trace.beta.push_back(beta);

        AspectModel snapshot = model;
        double restart_best = v;
        double prev_train = t;
        double prev_valid = v;

        for (std::size_t it = 1; it <= config.max_iters; ++it) {
            model = em_iteration(model, train_view, beta);
            t = log_likelihood(model, train_view).value;
            v = log_likelihood(model, valid_view).value;
            trace.train_ll.push_back(t);
            trace.valid_ll.push_back(v);
            trace.beta.push_back(beta);
            if (v > restart_best) {
                restart_best = v;
                snapshot = model;
            }

            bool lowered = false;
            if (config.tempered && v < prev_valid) {
                double next = beta * config.eta;
                if (next < config.beta_floor) break;  // would cross the floor
                beta = next;
                lowered = true;
            }
            bool converged = !lowered && t - prev_train < config.min_ll_gain;
            prev_train = t;
            prev_valid = v;
            if (converged) break;
        }

        trace.overfit_iteration = detect_overfit(trace.valid_ll);
        if (!best || restart_best > best_valid) {
            best_valid = restart_best;
            best = TrainResult{std::move(snapshot), std::move(trace)};
        }
    }
    return std::move(*best);
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

DocumentScores score_documents(const AspectModel& model, std::size_t user,
                               const SparseCounts* doc_word, double word_prob_floor) {
    if (user >= model.dims.n_users)
        throw std::invalid_argument("score_documents: user index out of range");
    const std::size_t K = model.K;
    DocumentScores out;

    if (model.kind != ModelKind::user_words) {
        out.scores.assign(model.dims.n_docs, 0.0);
        for (std::size_t d = 0; d < model.dims.n_docs; ++d) {
            double s = 0.0;
            for (std::size_t z = 0; z < K; ++z)
                s += model.pz[z] * model.pu_z[user * K + z] * model.pd_z[d * K + z];
            out.scores[d] = s;
        }
        return out;
    }

    if (!doc_word)
        throw std::invalid_argument("score_documents: user_words model requires doc_word counts");
    if (doc_word->cols() != model.dims.n_words)
        throw std::invalid_argument("score_documents: doc_word vocabulary does not match model");

    // Pr(w|u) = Pr(u,w) / sum_w' Pr(u,w')
    std::vector<double> word_prob(model.dims.n_words, 0.0);
    double denom = 0.0;
    for (std::size_t w = 0; w < model.dims.n_words; ++w) {
        double joint = 0.0;
        for (std::size_t z = 0; z < K; ++z)
            joint += model.pz[z] * model.pu_z[user * K + z] * model.pw_z[w * K + z];
        word_prob[w] = joint;
        denom += joint;
    }
    if (denom > 0.0)
        for (double& p : word_prob) p /= denom;
    else
        std::fill(word_prob.begin(), word_prob.end(), 0.0);

    // Length-normalized geometric mean over document tokens, in log space.
    out.scores.assign(doc_word->rows(), 0.0);
    for (std::size_t d = 0; d < doc_word->rows(); ++d) {
        auto row = doc_word->row(d);
        double length = 0.0;
        for (const auto& e : row) length += e.value;
        if (length == 0.0) {
            out.empty_documents.push_back(static_cast<std::uint32_t>(d));
            continue;
        }
        double acc = 0.0;
        bool zero = false;
        for (const auto& e : row) {
            double p = word_prob[e.col];
            if (word_prob_floor > 0.0 && p < word_prob_floor) p = word_prob_floor;
            if (!(p > 0.0)) {
                zero = true;
                break;
            }
            acc += e.value * std::log(p);
        }
        out.scores[d] = zero ? 0.0 : std::exp(acc / length);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Snapshots
// ---------------------------------------------------------------------------

namespace {

void write_table(std::ostream& out, const char* name, const std::vector<double>& table,
                 std::size_t n, std::size_t k) {
    out << name << ' ' << n << ' ' << k << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t z = 0; z < k; ++z) {
            if (z) out << ' ';
            out << detail::fmt_g17(table[i * k + z]);
        }
        out << '\n';
    }
}

std::string model_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(std::string("model snapshot: missing ") + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::vector<std::string> fields_of(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string f;
    while (ss >> f) fields.push_back(f);
    return fields;
}

std::vector<double> read_table(std::istream& in, const std::string& name, std::size_t n,
                               std::size_t k) {
    auto header = fields_of(model_line(in, "table header"));
    if (header.size() != 3 || header[0] != name)
        throw std::runtime_error("model snapshot: expected '" + name + "' table");
    if (detail::parse_size(header[1]) != n || detail::parse_size(header[2]) != k)
        throw std::runtime_error("model snapshot: " + name + " dimensions disagree");
    std::vector<double> table(n * k);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = fields_of(model_line(in, "table row"));
        if (row.size() != k) throw std::runtime_error("model snapshot: short row in " + name);
        for (std::size_t z = 0; z < k; ++z) table[i * k + z] = detail::parse_double(row[z]);
    }
    return table;
}

}  // namespace

void save_model(const AspectModel& model, std::ostream& out) {
    out << "recsys-model v1\n";
    out << "kind " << to_string(model.kind) << '\n';
    out << "K " << model.K << '\n';
    out << "dims " << model.dims.n_users << ' ' << model.dims.n_docs << ' ' << model.dims.n_words
        << '\n';
    out << "seed " << model.seed << '\n';
    out << "config " << model.config_digest << '\n';
    out << "pz";
    for (double v : model.pz) out << ' ' << detail::fmt_g17(v);
    out << '\n';
    write_table(out, "pu_z", model.pu_z, model.dims.n_users, model.K);
    if (model.has_docs()) write_table(out, "pd_z", model.pd_z, model.dims.n_docs, model.K);
    if (model.has_words()) write_table(out, "pw_z", model.pw_z, model.dims.n_words, model.K);
}

AspectModel load_model(std::istream& in) {
    if (model_line(in, "magic") != "recsys-model v1")
        throw std::runtime_error("model snapshot: bad magic line");
    AspectModel m;
    auto kind_fields = fields_of(model_line(in, "kind"));
    if (kind_fields.size() != 2 || kind_fields[0] != "kind")
        throw std::runtime_error("model snapshot: bad kind line");
    auto kind = model_kind_from_string(kind_fields[1]);
    if (!kind) throw std::runtime_error("model snapshot: unknown kind '" + kind_fields[1] + "'");
    m.kind = *kind;

    auto k_fields = fields_of(model_line(in, "K"));
    if (k_fields.size() != 2 || k_fields[0] != "K")
        throw std::runtime_error("model snapshot: bad K line");
    m.K = detail::parse_size(k_fields[1]);

    auto dims_fields = fields_of(model_line(in, "dims"));
    if (dims_fields.size() != 4 || dims_fields[0] != "dims")
        throw std::runtime_error("model snapshot: bad dims line");
    m.dims = {detail::parse_size(dims_fields[1]), detail::parse_size(dims_fields[2]),
              detail::parse_size(dims_fields[3])};

    auto seed_fields = fields_of(model_line(in, "seed"));
    if (seed_fields.size() != 2 || seed_fields[0] != "seed")
        throw std::runtime_error("model snapshot: bad seed line");
    m.seed = static_cast<std::uint64_t>(std::stoull(seed_fields[1]));

    auto config_fields = fields_of(model_line(in, "config"));
    if (config_fields.size() != 2 || config_fields[0] != "config")
        throw std::runtime_error("model snapshot: bad config line");
    m.config_digest = config_fields[1];

    auto pz_fields = fields_of(model_line(in, "pz"));
    if (pz_fields.size() != m.K + 1 || pz_fields[0] != "pz")
        throw std::runtime_error("model snapshot: bad pz line");
    m.pz.resize(m.K);
    for (std::size_t z = 0; z < m.K; ++z) m.pz[z] = detail::parse_double(pz_fields[z + 1]);

    m.pu_z = read_table(in, "pu_z", m.dims.n_users, m.K);
    if (m.has_docs()) m.pd_z = read_table(in, "pd_z", m.dims.n_docs, m.K);
    if (m.has_words()) m.pw_z = read_table(in, "pw_z", m.dims.n_words, m.K);
    return m;
}

void save_model_file(const AspectModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    save_model(model, out);
    if (!out) throw std::runtime_error("error writing '" + path + "'");
}

AspectModel load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return load_model(in);
}

}  // namespace recsys
