#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recsys/rng.hpp"
#include "recsys/sparse_counts.hpp"

namespace recsys {

enum class ModelKind { two_way, three_way, user_words };

std::string to_string(ModelKind kind);
std::optional<ModelKind> model_kind_from_string(std::string_view s);

struct Dims {
    std::size_t n_users = 0;
    std::size_t n_docs = 0;
    std::size_t n_words = 0;
};

// Latent-class mixture parameters. Conditional tables are stored row-major as
// (entity, class); each class column sums to 1. pd_z is absent (empty) for
// user_words models, pw_z for two_way models.
struct AspectModel {
    ModelKind kind = ModelKind::two_way;
    std::size_t K = 0;
    Dims dims;
    std::vector<double> pz;    // K
    std::vector<double> pu_z;  // n_users x K
    std::vector<double> pd_z;  // n_docs x K
    std::vector<double> pw_z;  // n_words x K
    std::uint64_t seed = 0;
    std::string config_digest = "0";

    double pu(std::size_t u, std::size_t z) const { return pu_z[u * K + z]; }
    double pd(std::size_t d, std::size_t z) const { return pd_z[d * K + z]; }
    double pw(std::size_t w, std::size_t z) const { return pw_z[w * K + z]; }
    bool has_docs() const { return kind != ModelKind::user_words; }
    bool has_words() const { return kind != ModelKind::two_way; }
};

// Random positive parameters, normalized; deterministic for a fixed seed.
AspectModel init_model(ModelKind kind, std::size_t K, Dims dims, std::uint64_t seed);

// Sparse weighted observations for one model kind.
//
// two_way:    (u,d) pairs weighted by n(u,d)
// three_way:  (u,d,w) triples weighted by n(u,d,w) = n(u,d) * n(d,w); the
//              triples are never materialized, they are enumerated as nonzero
//              (u,d) paired with nonzero (d,w)
// user_words: (u,w) pairs weighted by n(u,w) = sum_d n(u,d) * n(d,w)
//
// Unused coordinates are 0. Enumeration order is deterministic.
class ObservationSet {
public:
    static ObservationSet two_way(const SparseCounts& user_doc);
    static ObservationSet three_way(const SparseCounts& user_doc, const SparseCounts& doc_word);
    static ObservationSet user_words(const SparseCounts& user_doc, const SparseCounts& doc_word);

    ModelKind kind() const { return kind_; }
    const Dims& dims() const { return dims_; }
    double total_weight() const { return total_weight_; }
    bool empty() const { return total_weight_ == 0.0; }

    template <class F>
    void for_each(F&& f) const {
        if (kind_ == ModelKind::three_way) {
            for (std::size_t d = 0; d < doc_users_.rows(); ++d) {
                auto users = doc_users_.row(d);
                if (users.empty()) continue;
                auto words = doc_word_.row(d);
                for (const auto& ue : users)
                    for (const auto& we : words)
                        f(ue.col, static_cast<std::uint32_t>(d), we.col, ue.value * we.value);
            }
        } else {
            for (const auto& o : pairs_) f(o.u, o.d, o.w, o.weight);
        }
    }

private:
    struct Obs {
        std::uint32_t u = 0, d = 0, w = 0;
        double weight = 0.0;
    };

    ModelKind kind_ = ModelKind::two_way;
    Dims dims_;
    std::vector<Obs> pairs_;   // two_way and user_words
    SparseCounts doc_users_;   // three_way: documents x users
    SparseCounts doc_word_;    // three_way
    double total_weight_ = 0.0;
};

enum class SplitPart { all, train, validation };

// A (possibly filtered) view over an ObservationSet. The train/validation
// split is a deterministic function of (split_seed, observation identity),
// so the same observation always lands on the same side.
struct ObservationView {
    const ObservationSet* set = nullptr;
    SplitPart part = SplitPart::all;
    std::uint64_t split_seed = 0;
    double holdout_fraction = 0.0;

    ObservationView(const ObservationSet& s) : set(&s) {}  // NOLINT: implicit by design
    ObservationView(const ObservationSet& s, SplitPart p, std::uint64_t seed, double holdout)
        : set(&s), part(p), split_seed(seed), holdout_fraction(holdout) {}

    template <class F>
    void for_each(F&& f) const {
        if (part == SplitPart::all) {
            set->for_each(f);
            return;
        }
        const bool want_validation = part == SplitPart::validation;
        set->for_each([&](std::uint32_t u, std::uint32_t d, std::uint32_t w, double weight) {
            bool in_validation = observation_draw(split_seed, u, d, w) < holdout_fraction;
            if (in_validation == want_validation) f(u, d, w, weight);
        });
    }

    double total_weight() const;
};

struct LogLikelihood {
    double value = 0.0;
    std::size_t zero_events = 0;  // observations with joint probability 0
};

// Sum over observations of weight * log of the model joint. When any
// observation has joint probability 0, value is -infinity and zero_events
// counts the offenders.
LogLikelihood log_likelihood(const AspectModel& model, const ObservationView& obs);

struct EmStats {
    double ll_before = 0.0;            // train LL of the input model
    double max_posterior_error = 0.0;  // max |sum_z posterior - 1| over observations
};

// One tempered EM update. The E-step posterior over z is proportional to the
// product of the kind's parameter factors, each raised to beta; the M-step
// renormalizes the posterior-weighted observation totals.
AspectModel em_iteration(const AspectModel& model, const ObservationView& obs, double beta,
                         EmStats* stats = nullptr);

struct TrainConfig {
    std::size_t K = 10;
    std::size_t max_iters = 100;
    std::size_t restarts = 1;
    std::uint64_t seed = 0;
    bool tempered = false;
    double eta = 0.9;          // beta decay rate
    double beta_floor = 0.6;   // training stops rather than drop beta below this
    double holdout_fraction = 0.1;
    double min_ll_gain = 1e-6;  // absolute train-LL improvement below which training stops

    void validate() const;  // throws std::invalid_argument
    std::string digest() const;
};

// Disables the convergence stop; used when the full iteration series matters.
inline constexpr double kNoGainStop = -std::numeric_limits<double>::infinity();

struct TrainTrace {
    // Indexed by iteration; entry 0 describes the initial random model.
    std::vector<double> train_ll;
    std::vector<double> valid_ll;
    std::vector<double> beta;
    std::optional<std::size_t> overfit_iteration;
};

struct TrainResult {
    AspectModel model;
    TrainTrace trace;
};

// EM / tempered-EM training with restarts. Validation uses `validation` when
// given, otherwise a seeded holdout split of `obs` by holdout_fraction.
// Returns the restart whose best recorded validation LL is greatest; the
// model is the snapshot from that restart's best-validation iteration.
TrainResult train(const ObservationSet& obs, const TrainConfig& config,
                  const ObservationSet* validation = nullptr);

// Smallest iteration i >= 1 whose validation LL strictly decreased.
std::optional<std::size_t> detect_overfit(const std::vector<double>& valid_ll);

struct DocumentScores {
    std::vector<double> scores;
    std::vector<std::uint32_t> empty_documents;  // user_words: docs with no tokens
};

// Per-document recommendation scores for one user. doc_word is required for
// user_words models (geometric-mean scoring over document tokens) and ignored
// otherwise. word_prob_floor, when > 0, replaces zero Pr(w|u) values.
DocumentScores score_documents(const AspectModel& model, std::size_t user,
                               const SparseCounts* doc_word = nullptr,
                               double word_prob_floor = 0.0);

// Flat text snapshot, 17 significant digits per parameter; scores round-trip
// within 1e-12 (in practice bit-exactly).
void save_model(const AspectModel& model, std::ostream& out);
void save_model_file(const AspectModel& model, const std::string& path);
AspectModel load_model(std::istream& in);
AspectModel load_model_file(const std::string& path);

}  // namespace recsys
