// Command-line front end: ingestion, training, recommendation, evaluation
// sweeps, and the synthetic overfitting experiment. Data goes to stdout or
// the named output files; diagnostics go to stderr.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "recsys/aspect.hpp"
#include "recsys/corpus.hpp"
#include "recsys/eval.hpp"
#include "recsys/knn.hpp"
#include "recsys/smoothing.hpp"
#include "recsys/synth.hpp"
#include "recsys/textproc.hpp"

namespace fs = std::filesystem;
using namespace recsys;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

Corpus load_corpus_checked(const std::string& path) {
    if (!fs::exists(path)) throw std::runtime_error("corpus file '" + path + "' does not exist");
    return load_corpus_file(path);
}

ModelKind parse_kind(const std::string& s) {
    auto kind = model_kind_from_string(s);
    if (!kind)
        throw std::runtime_error("unknown model kind '" + s +
                                 "' (expected two_way, three_way, or user_words)");
    return *kind;
}

void write_trace(const TrainTrace& trace, const std::string& path) {
    auto out = open_output(path);
    out << "# iter train_ll valid_ll beta\n";
    for (std::size_t i = 0; i < trace.train_ll.size(); ++i)
        out << i << ' ' << fmt(trace.train_ll[i]) << ' ' << fmt(trace.valid_ll[i]) << ' '
            << fmt(trace.beta[i]) << '\n';
    out << "# overfit_iteration ";
    if (trace.overfit_iteration)
        out << *trace.overfit_iteration << '\n';
    else
        out << "none\n";
}

ObservationSet observations_for(ModelKind kind, const Corpus& corpus,
                                const SparseCounts& user_doc) {
    if (kind != ModelKind::two_way && corpus.doc_word.cols() == 0)
        throw std::runtime_error(
            "corpus has no document words; ingest documents first or use --kind two_way");
    switch (kind) {
        case ModelKind::two_way: return ObservationSet::two_way(user_doc);
        case ModelKind::three_way: return ObservationSet::three_way(user_doc, corpus.doc_word);
        case ModelKind::user_words: return ObservationSet::user_words(user_doc, corpus.doc_word);
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string log_path;
    std::string docs_dir;
    std::string stopwords_path;
    std::string cutoff;
    std::string output;
    std::size_t truncation_bytes = 5120;
    std::size_t select_users = 0;
    std::size_t select_docs = 0;
};

void attach_documents(Corpus& corpus, const IngestArgs& args) {
    if (args.docs_dir.empty()) return;
    if (!fs::is_directory(args.docs_dir))
        throw std::runtime_error("document directory '" + args.docs_dir + "' does not exist");
    std::unordered_set<std::string> stopwords;
    if (!args.stopwords_path.empty()) stopwords = load_stopwords_file(args.stopwords_path);

    std::vector<std::pair<std::string, std::string>> texts;
    for (const std::string& doc : corpus.documents) {
        fs::path p = fs::path(args.docs_dir) / doc;
        if (!fs::exists(p)) {
            std::cerr << "warning: no text for document '" << doc << "'\n";
            continue;
        }
        std::ifstream in(p, std::ios::binary);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        texts.push_back({doc, std::move(text)});
    }
    ingest_documents(corpus, texts, args.truncation_bytes,
                     stopwords.empty() ? nullptr : &stopwords);
}

int cmd_ingest(const IngestArgs& args) {
    std::ifstream log(args.log_path, std::ios::binary);
    if (!log) throw std::runtime_error("cannot open access log '" + args.log_path + "'");
    std::vector<RejectedLine> rejected;
    std::vector<AccessEvent> events = parse_access_log(log, rejected);
    for (const auto& r : rejected)
        std::cerr << args.log_path << ":" << r.line_number << ": rejected: " << r.reason << '\n';

    if (args.select_users > 0 || args.select_docs > 0) {
        Corpus full = ingest_access_log(events);
        std::size_t nu = args.select_users > 0 ? args.select_users : full.users.size();
        std::size_t nd = args.select_docs > 0 ? args.select_docs : full.documents.size();
        Corpus subset = select_dense_subset(full, nu, nd);
        std::unordered_set<std::string> keep_users(subset.users.begin(), subset.users.end());
        std::unordered_set<std::string> keep_docs(subset.documents.begin(),
                                                  subset.documents.end());
        std::erase_if(events, [&](const AccessEvent& e) {
            return !keep_users.count(e.user) || !keep_docs.count(e.document);
        });
    }

    if (args.cutoff.empty()) {
        Corpus corpus = ingest_access_log(events);
        attach_documents(corpus, args);
        save_corpus_file(corpus, args.output);
        std::cerr << "wrote " << args.output << ": " << corpus.users.size() << " users, "
                  << corpus.documents.size() << " documents, density "
                  << fmt(density(corpus.user_doc)) << '\n';
        return 0;
    }

    auto cutoff = parse_iso8601(args.cutoff);
    if (!cutoff) throw std::runtime_error("bad --cutoff timestamp '" + args.cutoff + "'");
    auto [train, test] = temporal_split(events, *cutoff);
    attach_documents(train, args);
    test.vocabulary = train.vocabulary;
    test.doc_word = train.doc_word;
    save_corpus_file(train, args.output + ".train");
    save_corpus_file(test, args.output + ".test");
    std::cerr << "wrote " << args.output << ".train and .test: " << train.users.size()
              << " users, " << train.documents.size() << " documents, train density "
              << fmt(density(train.user_doc)) << ", test density " << fmt(density(test.user_doc))
              << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string corpus_path;
    std::string kind = "two_way";
    std::string model_path;
    std::string trace_path;
    TrainConfig config;
    double threshold = -1.0;  // <0: no smoothing
    std::string smooth_rule = "mean";
};

int cmd_train(const TrainArgs& args) {
    Corpus corpus = load_corpus_checked(args.corpus_path);
    ModelKind kind = parse_kind(args.kind);

    SparseCounts user_doc = corpus.user_doc;
    if (args.threshold >= 0.0) {
        if (corpus.doc_word.cols() == 0)
            throw std::runtime_error("--threshold needs document words in the corpus");
        FillRule rule =
            args.smooth_rule == "pairs" ? FillRule::mean_of_gated : FillRule::gated_mean;
        user_doc = smooth(user_doc, tfidf_vectors(corpus.doc_word), args.threshold, rule);
        std::cerr << "smoothed density " << fmt(density(user_doc)) << " at threshold "
                  << fmt(args.threshold) << '\n';
    }

    ObservationSet obs = observations_for(kind, corpus, user_doc);
    TrainResult result = train(obs, args.config);
    save_model_file(result.model, args.model_path);
    if (!args.trace_path.empty()) write_trace(result.trace, args.trace_path);

    std::cerr << "trained " << to_string(kind) << " K=" << args.config.K << ": best valid LL "
              << fmt(*std::max_element(result.trace.valid_ll.begin(),
                                       result.trace.valid_ll.end()))
              << ", overfit iteration ";
    if (result.trace.overfit_iteration)
        std::cerr << *result.trace.overfit_iteration << '\n';
    else
        std::cerr << "none\n";
    return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string corpus_path;
    std::string test_path;
    std::string axis;
    std::string output;
    std::string kind = "user_words";
    double from = -1.0, to = -1.0, step = -1.0;
    double alpha = 5.0;
    std::size_t latent = 25;  // K for the threshold axis
    std::size_t restarts = 0;
    std::size_t max_iters = 100;
    std::uint64_t seed = 0;
    bool tempered = false;
    std::string exclude_train = "on";
};

EvalReport evaluate_model(const AspectModel& model, const Corpus& corpus,
                          const SparseCounts& train_ud, const SparseCounts& test_ud,
                          const EvalProtocol& protocol) {
    const SparseCounts* dw = model.kind == ModelKind::user_words ? &corpus.doc_word : nullptr;
    return evaluate_scores(train_ud, test_ud, corpus.users,
                           [&](std::size_t u) { return score_documents(model, u, dw).scores; },
                           protocol);
}

int cmd_sweep(const SweepArgs& args) {
    Corpus corpus = load_corpus_checked(args.corpus_path);
    Corpus test = load_corpus_checked(args.test_path);
    if (test.user_doc.rows() != corpus.user_doc.rows() ||
        test.user_doc.cols() != corpus.user_doc.cols())
        throw std::runtime_error("train and test corpora have different shapes");

    EvalProtocol protocol;
    protocol.alpha = args.alpha;
    protocol.exclude_train = args.exclude_train != "off";

    auto out = open_output(args.output);
    std::vector<std::pair<double, double>> table;

    if (args.axis == "k_nn") {
        double from = args.from >= 0 ? args.from : 10;
        double to = args.to >= 0 ? args.to : 60;
        double step = args.step > 0 ? args.step : 5;
        for (double k = from; k <= to + 1e-9; k += step) {
            auto report = evaluate_scores(
                corpus.user_doc, test.user_doc, corpus.users,
                [&](std::size_t u) {
                    return knn_scores(corpus.user_doc, u, static_cast<std::size_t>(k));
                },
                protocol);
            table.push_back({k, report.r});
            std::cerr << "k=" << k << " R=" << fmt(report.r) << '\n';
        }
    } else if (args.axis == "K") {
        double from = args.from >= 0 ? args.from : 10;
        double to = args.to >= 0 ? args.to : 60;
        double step = args.step > 0 ? args.step : 10;
        ModelKind kind = parse_kind(args.kind);
        for (double k = from; k <= to + 1e-9; k += step) {
            TrainConfig cfg;
            cfg.K = static_cast<std::size_t>(k);
            cfg.restarts = args.restarts > 0 ? args.restarts : 2;
            cfg.seed = args.seed;
            cfg.max_iters = args.max_iters;
            cfg.tempered = args.tempered;
            auto obs = observations_for(kind, corpus, corpus.user_doc);
            auto result = train(obs, cfg);
            auto report = evaluate_model(result.model, corpus, corpus.user_doc, test.user_doc,
                                         protocol);
            table.push_back({k, report.r});
            std::cerr << "K=" << k << " R=" << fmt(report.r) << '\n';
        }
    } else if (args.axis == "threshold") {
        double from = args.from >= 0 ? args.from : 0.0;
        double to = args.to >= 0 ? args.to : 0.9;
        double step = args.step > 0 ? args.step : 0.1;
        auto vectors = tfidf_vectors(corpus.doc_word);
        for (double t = from; t <= to + 1e-9; t += step) {
            SparseCounts smoothed = smooth(corpus.user_doc, vectors, t);
            TrainConfig cfg;
            cfg.K = args.latent;
            cfg.restarts = args.restarts > 0 ? args.restarts : 5;
            cfg.seed = args.seed;
            cfg.max_iters = args.max_iters;
            cfg.tempered = args.tempered;
            auto result = train(ObservationSet::two_way(smoothed), cfg);
            auto report =
                evaluate_model(result.model, corpus, corpus.user_doc, test.user_doc, protocol);
            table.push_back({t, report.r});
            std::cerr << "threshold=" << fmt(t) << " density=" << fmt(density(smoothed))
                      << " R=" << fmt(report.r) << '\n';
        }
    } else {
        throw std::runtime_error("unknown sweep axis '" + args.axis +
                                 "' (expected k_nn, K, or threshold)");
    }

    for (const auto& [x, r] : table) out << fmt(x) << ' ' << fmt(r) << '\n';
    if (args.axis == "threshold" && table.size() >= 3) {
        auto trend = fit_linear_trend(table);
        out << "# trend slope " << fmt(trend.slope) << " intercept " << fmt(trend.intercept)
            << " p_value " << fmt(trend.p_value) << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
    std::size_t groups = 3;
    std::size_t users_per_group = 50;
    std::size_t docs_per_group = 300;
    std::vector<double> densities = {0.01, 0.025, 0.04};
    std::size_t restarts = 50;
    std::size_t latent = 3;
    std::size_t max_iters = 30;
    std::uint64_t seed = 0;
    std::string output;
    std::string emit_corpus;
    double density = 0.0;
    double test_density = -1.0;
    std::size_t content_vocab = 0;
    std::size_t content_tokens = 60;
};

int cmd_synth(const SynthArgs& args) {
    if (!args.emit_corpus.empty()) {
        SyntheticSpec spec = SyntheticSpec::blocks(args.groups, args.users_per_group,
                                                   args.docs_per_group, args.density, args.seed);
        if (args.content_vocab > 0)
            spec.content = ContentSpec{args.content_vocab, args.content_tokens};
        SyntheticData train_data = generate(spec);

        SyntheticSpec test_spec = spec;
        test_spec.density = args.test_density >= 0 ? args.test_density : args.density;
        test_spec.seed = args.seed + 1;
        test_spec.content.reset();
        Corpus test = generate(test_spec).corpus;
        test.vocabulary = train_data.corpus.vocabulary;
        test.doc_word = train_data.corpus.doc_word;

        save_corpus_file(train_data.corpus, args.emit_corpus + ".train");
        save_corpus_file(test, args.emit_corpus + ".test");
        std::cerr << "wrote " << args.emit_corpus << ".train (density "
                  << fmt(density(train_data.corpus.user_doc)) << ") and .test (density "
                  << fmt(density(test.user_doc)) << ")\n";
        return 0;
    }

    if (args.output.empty()) throw std::runtime_error("--output is required");
    SyntheticSpec tmpl = SyntheticSpec::blocks(args.groups, args.users_per_group,
                                               args.docs_per_group, 0.0, args.seed);
    OverfitExperimentConfig cfg;
    cfg.K = args.latent;
    cfg.restarts = args.restarts;
    cfg.max_iters = args.max_iters;
    cfg.seed = args.seed;
    auto points = overfit_experiment(tmpl, args.densities, cfg);
    auto out = open_output(args.output);
    for (const auto& p : points) {
        out << fmt(p.density) << ' ' << fmt(p.mean_overfit_iteration) << '\n';
        std::cerr << "density " << fmt(p.density) << " mean overfit iteration "
                  << fmt(p.mean_overfit_iteration) << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// recommend
// ---------------------------------------------------------------------------

struct RecommendArgs {
    std::string model_path;
    std::string corpus_path;
    std::string user;
    std::size_t top = 10;
    std::string exclude_train = "on";
    double floor = 0.0;
};

int cmd_recommend(const RecommendArgs& args) {
    AspectModel model = load_model_file(args.model_path);
    Corpus corpus = load_corpus_checked(args.corpus_path);
    auto user = corpus.user_index(args.user);
    if (!user) throw std::runtime_error("unknown user id '" + args.user + "'");

    const SparseCounts* dw = model.kind == ModelKind::user_words ? &corpus.doc_word : nullptr;
    auto scored = score_documents(model, *user, dw, args.floor);
    if (scored.scores.size() != corpus.documents.size())
        throw std::runtime_error("model and corpus disagree on the document space");

    std::vector<bool> seen(corpus.documents.size(), false);
    if (args.exclude_train != "off")
        for (const auto& e : corpus.user_doc.row(*user)) seen[e.col] = true;

    std::vector<std::uint32_t> candidates;
    for (std::size_t d = 0; d < scored.scores.size(); ++d)
        if (!seen[d]) candidates.push_back(static_cast<std::uint32_t>(d));
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::uint32_t a, std::uint32_t b) {
        return scored.scores[a] > scored.scores[b];
    });
    if (candidates.size() > args.top) candidates.resize(args.top);

    for (std::size_t i = 0; i < candidates.size(); ++i)
        std::cout << (i + 1) << ' ' << corpus.documents[candidates[i]] << ' '
                  << fmt(scored.scores[candidates[i]]) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent-class recommender toolkit"};
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* cmd_i = app.add_subcommand("ingest", "build a corpus snapshot from an access log");
    cmd_i->add_option("--log", ingest.log_path, "access log (user<TAB>doc<TAB>timestamp)")
        ->required();
    cmd_i->add_option("--docs", ingest.docs_dir, "directory of document texts (filename = id)");
    cmd_i->add_option("--truncation-bytes", ingest.truncation_bytes,
                      "bytes of each text to keep (default 5120)");
    cmd_i->add_option("--stopwords", ingest.stopwords_path, "stopword list, one word per line");
    cmd_i->add_option("--cutoff", ingest.cutoff,
                      "ISO-8601 instant; events at/after it go to <output>.test");
    cmd_i->add_option("--select-users", ingest.select_users, "keep only the most active users");
    cmd_i->add_option("--select-docs", ingest.select_docs,
                      "keep only the most accessed documents among kept users");
    cmd_i->add_option("--output", ingest.output, "corpus snapshot path")->required();

    TrainArgs train_args;
    auto* cmd_t = app.add_subcommand("train", "fit an aspect model");
    cmd_t->add_option("--corpus", train_args.corpus_path)->required();
    cmd_t->add_option("--kind", train_args.kind, "two_way | three_way | user_words");
    cmd_t->add_option("--k", train_args.config.K, "latent classes (default 10)");
    cmd_t->add_option("--seed", train_args.config.seed);
    cmd_t->add_option("--restarts", train_args.config.restarts);
    cmd_t->add_flag("--tempered", train_args.config.tempered, "decrease beta on validation drops");
    cmd_t->add_option("--eta", train_args.config.eta, "beta decay rate (default 0.9)");
    cmd_t->add_option("--beta-floor", train_args.config.beta_floor);
    cmd_t->add_option("--holdout", train_args.config.holdout_fraction,
                      "validation fraction of training weight (default 0.1)");
    cmd_t->add_option("--max-iters", train_args.config.max_iters);
    cmd_t->add_option("--min-gain", train_args.config.min_ll_gain,
                      "stop when train LL improves less than this");
    cmd_t->add_option("--threshold", train_args.threshold,
                      "smooth the user-document matrix at this similarity threshold first");
    cmd_t->add_option("--smooth-rule", train_args.smooth_rule, "mean | pairs");
    cmd_t->add_option("--model", train_args.model_path, "model snapshot output")->required();
    cmd_t->add_option("--trace", train_args.trace_path, "per-iteration trace output");

    SweepArgs sweep;
    auto* cmd_s = app.add_subcommand("sweep", "evaluate R along an axis");
    cmd_s->add_option("--corpus", sweep.corpus_path, "training corpus snapshot")->required();
    cmd_s->add_option("--test", sweep.test_path, "test corpus snapshot")->required();
    cmd_s->add_option("--axis", sweep.axis, "k_nn | K | threshold")->required();
    cmd_s->add_option("--from", sweep.from);
    cmd_s->add_option("--to", sweep.to);
    cmd_s->add_option("--step", sweep.step);
    cmd_s->add_option("--alpha", sweep.alpha, "rank-scoring half-life (default 5)");
    cmd_s->add_option("--kind", sweep.kind, "model kind for the K axis (default user_words)");
    cmd_s->add_option("--k", sweep.latent, "latent classes for the threshold axis (default 25)");
    cmd_s->add_option("--restarts", sweep.restarts, "EM restarts (axis-dependent default)");
    cmd_s->add_option("--max-iters", sweep.max_iters);
    cmd_s->add_option("--seed", sweep.seed);
    cmd_s->add_flag("--tempered", sweep.tempered);
    cmd_s->add_option("--exclude-train", sweep.exclude_train,
                      "on|off: drop training documents from candidates (default on)");
    cmd_s->add_option("--output", sweep.output, "two-column table output")->required();

    SynthArgs synth;
    auto* cmd_y = app.add_subcommand("synth", "synthetic-data overfitting experiment");
    cmd_y->add_option("--groups", synth.groups);
    cmd_y->add_option("--users-per-group", synth.users_per_group);
    cmd_y->add_option("--docs-per-group", synth.docs_per_group);
    cmd_y->add_option("--densities", synth.densities, "densities to sweep")->delimiter(',');
    cmd_y->add_option("--restarts", synth.restarts, "EM restarts per density (default 50)");
    cmd_y->add_option("--k", synth.latent, "latent classes (default 3)");
    cmd_y->add_option("--max-iters", synth.max_iters);
    cmd_y->add_option("--seed", synth.seed);
    cmd_y->add_option("--output", synth.output, "density/mean-overfit-iteration table");
    cmd_y->add_option("--emit-corpus", synth.emit_corpus,
                      "instead of the experiment, write <prefix>.train/.test snapshots");
    cmd_y->add_option("--density", synth.density, "train density for --emit-corpus");
    cmd_y->add_option("--test-density", synth.test_density,
                      "test density for --emit-corpus (default: train density)");
    cmd_y->add_option("--content-vocab", synth.content_vocab,
                      "per-group vocabulary size for --emit-corpus content");
    cmd_y->add_option("--content-tokens", synth.content_tokens,
                      "tokens per document (default 60)");

    RecommendArgs recommend;
    auto* cmd_r = app.add_subcommand("recommend", "rank documents for a user");
    cmd_r->add_option("--model", recommend.model_path)->required();
    cmd_r->add_option("--corpus", recommend.corpus_path)->required();
    cmd_r->add_option("--user", recommend.user)->required();
    cmd_r->add_option("--top", recommend.top, "list length (default 10)");
    cmd_r->add_option("--exclude-train", recommend.exclude_train, "on|off (default on)");
    cmd_r->add_option("--floor", recommend.floor, "word probability floor for user_words");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_i->parsed()) return cmd_ingest(ingest);
        if (cmd_t->parsed()) return cmd_train(train_args);
        if (cmd_s->parsed()) return cmd_sweep(sweep);
        if (cmd_y->parsed()) return cmd_synth(synth);
        if (cmd_r->parsed()) return cmd_recommend(recommend);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
