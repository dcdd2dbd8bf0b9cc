#pragma once

// Per-epoch HDP mixture models fitted with the direct-assignment collapsed
// Gibbs sampler over the Chinese-restaurant-franchise representation.
//
// State per epoch: a topic id z for every token, document-topic counts
// n_jk, topic-word counts n_kw, table counts m_jk and the corpus-level stick
// weights beta (one per live topic plus the unrepresented remainder beta_u).
// One sweep resamples every z given everything else, then m | z, beta and
// beta | m. Topic-word distributions are integrated out under a symmetric
// Dirichlet(eta) base measure.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <stop_token>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hdpflow/corpus.hpp"
#include "hdpflow/error.hpp"
#include "hdpflow/preprocess.hpp"

namespace hdpflow {

struct HdpConfig {
    double gamma = 1.0;  // corpus-level concentration
    double alpha = 1.0;  // document-level concentration
    double eta = 0.01;   // symmetric Dirichlet base measure over the vocabulary
    std::size_t iterations = 1000;
    std::size_t burn_in = 500;
    std::uint64_t seed = 1;
    double min_topic_mass = 0.005;
    bool resample_concentrations = false;
    // Vague Gamma(shape, rate) priors used only when resampling is on.
    double concentration_shape = 1.0;
    double concentration_rate = 1.0;

    void validate() const {
        if (!(gamma > 0)) throw InvalidConfig("gamma must be positive");
        if (!(alpha > 0)) throw InvalidConfig("alpha must be positive");
        if (!(eta > 0)) throw InvalidConfig("eta must be positive");
        if (iterations < 1) throw InvalidConfig("iterations must be positive");
        if (burn_in >= iterations) throw InvalidConfig("burn_in must be smaller than iterations");
        if (!(min_topic_mass >= 0.0 && min_topic_mass < 1.0)) throw InvalidConfig("min_topic_mass must lie in [0, 1)");
        if (!(concentration_shape > 0 && concentration_rate > 0))
            throw InvalidConfig("concentration prior parameters must be positive");
    }

    nlohmann::json to_json() const {
        return {{"gamma", gamma},
                {"alpha", alpha},
                {"eta", eta},
                {"iterations", iterations},
                {"burn_in", burn_in},
                {"seed", seed},
                {"min_topic_mass", min_topic_mass},
                {"resample_concentrations", resample_concentrations},
                {"concentration_shape", concentration_shape},
                {"concentration_rate", concentration_rate}};
    }
};

struct Topic {
    std::size_t epoch = 0;
    std::size_t id = 0;
    std::vector<double> term_dist;
    double mass = 0.0;
    std::size_t token_count = 0;
};

struct EpochModel {
    std::size_t epoch = 0;
    std::vector<Topic> topics;
    // Topic id of every token; tokens of a bag are enumerated in ascending
    // term index, each repeated by its count.
    std::vector<std::vector<std::uint32_t>> assignments;
    std::vector<double> log_likelihood_trace;

    double eta = 0.0;  // base-measure parameter of the fit; not persisted

    const Topic* find(std::size_t id) const {
        for (const auto& t : topics)
            if (t.id == id) return &t;
        return nullptr;
    }

    nlohmann::json to_json() const {
        nlohmann::json ts = nlohmann::json::array();
        for (const auto& t : topics)
            ts.push_back({{"id", t.id}, {"mass", t.mass}, {"token_count", t.token_count}, {"term_dist", t.term_dist}});
        return {{"epoch", epoch}, {"topics", std::move(ts)}, {"log_likelihood_trace", log_likelihood_trace}};
    }

    static EpochModel from_json(const nlohmann::json& j) {
        EpochModel m;
        m.epoch = j.at("epoch").get<std::size_t>();
        for (const auto& t : j.at("topics")) {
            Topic topic;
            topic.epoch = m.epoch;
            topic.id = t.at("id").get<std::size_t>();
            topic.mass = t.at("mass").get<double>();
            topic.token_count = t.at("token_count").get<std::size_t>();
            topic.term_dist = t.at("term_dist").get<std::vector<double>>();
            m.topics.push_back(std::move(topic));
        }
        m.log_likelihood_trace = j.at("log_likelihood_trace").get<std::vector<double>>();
        return m;
    }
};

/// Expands a bag into its token sequence (ascending term index).
inline std::vector<std::uint32_t> expand_tokens(const BagOfWords& bag) {
    std::vector<std::uint32_t> tokens;
    tokens.reserve(bag.total);
    for (const auto& [term, count] : bag.counts) tokens.insert(tokens.end(), count, static_cast<std::uint32_t>(term));
    return tokens;
}

namespace detail {

/// log p(w | z) with topic-word distributions integrated out, summed over
/// topics given as sparse word-count rows.
template <typename Rows>
double collapsed_word_log_likelihood(const Rows& rows, std::size_t vocab_size, double eta) {
    const double v_eta = static_cast<double>(vocab_size) * eta;
    const double lg_v_eta = std::lgamma(v_eta);
    const double lg_eta = std::lgamma(eta);
    double ll = 0.0;
    for (const auto& row : rows) {
        std::size_t total = 0;
        for (const auto& [w, n] : row) {
            if (n == 0) continue;
            ll += std::lgamma(static_cast<double>(n) + eta) - lg_eta;
            total += n;
        }
        ll += lg_v_eta - std::lgamma(static_cast<double>(total) + v_eta);
    }
    return ll;
}

class DirectAssignmentSampler {
public:
    DirectAssignmentSampler(const std::vector<BagOfWords>& bags, std::size_t vocab_size, const HdpConfig& config)
        : vocab_(vocab_size), cfg_(config), alpha_(config.alpha), gamma_(config.gamma), rng_(config.seed) {
        words_.reserve(bags.size());
        for (const auto& bag : bags) {
            for (const auto& [term, count] : bag.counts)
                if (term >= vocab_) throw ValidationError("bag '" + bag.doc_id + "' has a term index beyond the vocabulary");
            words_.push_back(expand_tokens(bag));
            total_tokens_ += words_.back().size();
        }
        z_.resize(words_.size());
        n_jk_.resize(words_.size());
        for (std::size_t j = 0; j < words_.size(); ++j) z_[j].assign(words_[j].size(), kNone);
    }

    /// Starts from a single topic holding every token.
    void initialize() {
        beta_u_ = 1.0;
        const std::uint32_t k = spawn_topic();
        for (std::size_t j = 0; j < words_.size(); ++j)
            for (std::size_t i = 0; i < words_[j].size(); ++i) add(j, i, k);
        sample_tables_and_beta();
    }

    void sweep() {
        for (std::size_t j = 0; j < words_.size(); ++j)
            for (std::size_t i = 0; i < words_[j].size(); ++i) {
                remove(j, i);
                std::uint32_t k = draw_topic(j, words_[j][i], /*allow_new=*/true);
                add(j, i, k);
            }
        sample_tables_and_beta();
        if (cfg_.resample_concentrations) resample_concentrations();
    }

    /// Collapsed log p(w | z) at the current state.
    double log_likelihood() const {
        std::vector<std::vector<std::pair<std::size_t, std::uint32_t>>> rows;
        rows.reserve(active_.size());
        for (auto k : active_) {
            std::vector<std::pair<std::size_t, std::uint32_t>> row;
            const auto& nkw = n_kw_[k];
            for (std::size_t w = 0; w < vocab_; ++w)
                if (nkw[w]) row.emplace_back(w, nkw[w]);
            rows.push_back(std::move(row));
        }
        return collapsed_word_log_likelihood(rows, vocab_, cfg_.eta);
    }

    /// Reassigns tokens of topics lighter than `min_mass` among the remaining
    /// topics (no new topics), then emits the model with topics ordered by
    /// descending mass.
    EpochModel extract(std::size_t epoch, double min_mass) {
        std::vector<std::uint32_t> survivors, dropped;
        for (auto k : active_) {
            double mass = static_cast<double>(n_k_[k]) / static_cast<double>(total_tokens_);
            (mass >= min_mass ? survivors : dropped).push_back(k);
        }
        if (survivors.empty()) {
            auto heaviest = *std::max_element(active_.begin(), active_.end(),
                                              [&](auto a, auto b) { return n_k_[a] < n_k_[b]; });
            survivors.push_back(heaviest);
            dropped.erase(std::find(dropped.begin(), dropped.end(), heaviest));
        }
        if (!dropped.empty()) {
            std::vector<char> is_dropped(n_k_.size(), 0);
            for (auto k : dropped) is_dropped[k] = 1;
            for (std::size_t j = 0; j < words_.size(); ++j)
                for (std::size_t i = 0; i < words_[j].size(); ++i) {
                    if (!is_dropped[z_[j][i]]) continue;
                    remove(j, i);
                    add(j, i, draw_among(j, words_[j][i], survivors));
                }
        }

        std::vector<std::uint32_t> order = active_;
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return n_k_[a] > n_k_[b]; });
        std::vector<std::uint32_t> new_id(n_k_.size(), kNone);

        EpochModel model;
        model.epoch = epoch;
        const double v_eta = static_cast<double>(vocab_) * cfg_.eta;
        for (std::size_t r = 0; r < order.size(); ++r) {
            auto k = order[r];
            new_id[k] = static_cast<std::uint32_t>(r);
            Topic t;
            t.epoch = epoch;
            t.id = r;
            t.token_count = n_k_[k];
            t.mass = static_cast<double>(n_k_[k]) / static_cast<double>(total_tokens_);
            t.term_dist.resize(vocab_);
            const double denom = static_cast<double>(n_k_[k]) + v_eta;
            for (std::size_t w = 0; w < vocab_; ++w) t.term_dist[w] = (static_cast<double>(n_kw_[k][w]) + cfg_.eta) / denom;
            model.topics.push_back(std::move(t));
        }
        model.assignments.resize(words_.size());
        for (std::size_t j = 0; j < words_.size(); ++j) {
            model.assignments[j].reserve(z_[j].size());
            for (auto k : z_[j]) model.assignments[j].push_back(new_id[k]);
        }
        model.eta = cfg_.eta;
        return model;
    }

    std::size_t topic_count() const noexcept { return active_.size(); }

private:
    static constexpr std::uint32_t kNone = ~std::uint32_t{0};

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
    double gamma_draw(double shape) { return std::gamma_distribution<double>(shape, 1.0)(rng_); }
    double beta_draw(double a, double b) {
        double x = gamma_draw(a), y = gamma_draw(b);
        return x / (x + y);
    }

    double word_term(std::uint32_t k, std::uint32_t w) const {
        return (static_cast<double>(n_kw_[k][w]) + cfg_.eta) /
               (static_cast<double>(n_k_[k]) + static_cast<double>(vocab_) * cfg_.eta);
    }

    std::uint32_t doc_count(std::size_t j, std::uint32_t k) const {
        return k < n_jk_[j].size() ? n_jk_[j][k] : 0;
    }

    std::uint32_t draw_topic(std::size_t j, std::uint32_t w, bool allow_new) {
        cumulative_.resize(active_.size() + 1);
        double acc = 0.0;
        for (std::size_t a = 0; a < active_.size(); ++a) {
            auto k = active_[a];
            acc += (static_cast<double>(doc_count(j, k)) + alpha_ * beta_[k]) * word_term(k, w);
            cumulative_[a] = acc;
        }
        if (allow_new) acc += alpha_ * beta_u_ / static_cast<double>(vocab_);
        cumulative_[active_.size()] = acc;
        const double u = uniform() * acc;
        std::size_t pick = static_cast<std::size_t>(
            std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
        if (pick < active_.size()) return active_[pick];
        if (!allow_new) return active_.back();
        return spawn_topic();
    }

    std::uint32_t draw_among(std::size_t j, std::uint32_t w, const std::vector<std::uint32_t>& candidates) {
        cumulative_.resize(candidates.size());
        double acc = 0.0;
        for (std::size_t a = 0; a < candidates.size(); ++a) {
            auto k = candidates[a];
            acc += (static_cast<double>(doc_count(j, k)) + alpha_ * beta_[k]) * word_term(k, w);
            cumulative_[a] = acc;
        }
        const double u = uniform() * acc;
        auto pick = static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) -
                                             cumulative_.begin());
        return candidates[std::min(pick, candidates.size() - 1)];
    }

    std::uint32_t spawn_topic() {
        std::uint32_t k;
        if (!free_.empty()) {
            k = free_.back();
            free_.pop_back();
        } else {
            k = static_cast<std::uint32_t>(n_k_.size());
            n_k_.push_back(0);
            n_kw_.emplace_back(vocab_, 0);
            beta_.push_back(0.0);
        }
        std::fill(n_kw_[k].begin(), n_kw_[k].end(), 0);
        n_k_[k] = 0;
        const double b = beta_draw(1.0, gamma_);
        beta_[k] = b * beta_u_;
        beta_u_ *= (1.0 - b);
        active_.push_back(k);
        return k;
    }

    void add(std::size_t j, std::size_t i, std::uint32_t k) {
        z_[j][i] = k;
        if (n_jk_[j].size() <= k) n_jk_[j].resize(n_k_.size(), 0);
        ++n_jk_[j][k];
        ++n_kw_[k][words_[j][i]];
        ++n_k_[k];
    }

    void remove(std::size_t j, std::size_t i) {
        auto k = z_[j][i];
        --n_jk_[j][k];
        --n_kw_[k][words_[j][i]];
        if (--n_k_[k] == 0) {
            beta_u_ += beta_[k];
            beta_[k] = 0.0;
            active_.erase(std::find(active_.begin(), active_.end(), k));
            free_.push_back(k);
        }
        z_[j][i] = kNone;
    }

    // Antoniak draw of table counts, then beta ~ Dir(m_.1, ..., m_.K, gamma).
    void sample_tables_and_beta() {
        std::vector<double> m_total(n_k_.size(), 0.0);
        total_tables_ = 0;
        for (std::size_t j = 0; j < words_.size(); ++j) {
            for (auto k : active_) {
                const std::uint32_t n = doc_count(j, k);
                if (n == 0) continue;
                const double ab = alpha_ * beta_[k];
                std::size_t m = 1;  // the first customer always opens a table
                for (std::uint32_t l = 1; l < n; ++l)
                    if (uniform() < ab / (ab + static_cast<double>(l))) ++m;
                m_total[k] += static_cast<double>(m);
                total_tables_ += m;
            }
        }
        double sum = 0.0;
        for (auto k : active_) {
            beta_[k] = gamma_draw(m_total[k]);
            sum += beta_[k];
        }
        beta_u_ = gamma_draw(gamma_);
        sum += beta_u_;
        for (auto k : active_) beta_[k] /= sum;
        beta_u_ /= sum;
    }

    // Auxiliary-variable updates for gamma and alpha under Gamma(a, b) priors.
    void resample_concentrations() {
        const double a = cfg_.concentration_shape, b = cfg_.concentration_rate;
        const double tables = static_cast<double>(total_tables_);
        const double k = static_cast<double>(active_.size());
        for (int rep = 0; rep < 20; ++rep) {
            const double x = beta_draw(gamma_ + 1.0, tables);
            const double odds = (a + k - 1.0) / (tables * (b - std::log(x)));
            const double shape = uniform() < odds / (1.0 + odds) ? a + k : a + k - 1.0;
            gamma_ = std::gamma_distribution<double>(shape, 1.0 / (b - std::log(x)))(rng_);

            double sum_log_w = 0.0, sum_s = 0.0;
            for (const auto& doc : words_) {
                if (doc.empty()) continue;
                const double n = static_cast<double>(doc.size());
                sum_log_w += std::log(beta_draw(alpha_ + 1.0, n));
                sum_s += uniform() < n / (n + alpha_) ? 1.0 : 0.0;
            }
            alpha_ = std::gamma_distribution<double>(a + tables - sum_s, 1.0 / (b - sum_log_w))(rng_);
        }
    }

    std::size_t vocab_;
    HdpConfig cfg_;
    double alpha_;
    double gamma_;
    std::mt19937_64 rng_;

    std::vector<std::vector<std::uint32_t>> words_;
    std::vector<std::vector<std::uint32_t>> z_;
    std::vector<std::vector<std::uint32_t>> n_jk_;
    std::vector<std::vector<std::uint32_t>> n_kw_;
    std::vector<std::uint32_t> n_k_;
    std::vector<double> beta_;
    double beta_u_ = 1.0;
    std::vector<std::uint32_t> active_;
    std::vector<std::uint32_t> free_;
    std::vector<double> cumulative_;
    std::size_t total_tokens_ = 0;
    std::size_t total_tables_ = 0;
};

}  // namespace detail

/// Fits one epoch. `stop` is polled between sweeps; a requested stop throws Cancelled.
inline EpochModel fit_epoch(const std::vector<BagOfWords>& bags, std::size_t vocab_size, const HdpConfig& config,
                            std::size_t epoch = 0, std::stop_token stop = {}) {
    config.validate();
    if (bags.empty()) throw NoDocuments("no documents to fit");
    if (vocab_size < 2) throw ValidationError("vocabulary must hold at least two terms");
    if (std::all_of(bags.begin(), bags.end(), [](const BagOfWords& b) { return b.empty(); }))
        throw AllBagsEmpty("every bag is empty");

    detail::DirectAssignmentSampler sampler(bags, vocab_size, config);
    sampler.initialize();
    std::vector<double> trace;
    trace.reserve(config.iterations);
    for (std::size_t it = 0; it < config.iterations; ++it) {
        if (stop.stop_requested()) throw Cancelled("fit cancelled");
        sampler.sweep();
        trace.push_back(sampler.log_likelihood());
    }
    // The final sweep is past burn-in by construction (burn_in < iterations).
    EpochModel model = sampler.extract(epoch, config.min_topic_mass);
    model.log_likelihood_trace = std::move(trace);
    return model;
}

/// Collapsed log p(w | z) of `bags` under the model's token assignments,
/// with topic-word distributions integrated out against Dirichlet(eta).
inline double log_likelihood(const std::vector<BagOfWords>& bags, const EpochModel& model) {
    if (model.assignments.size() != bags.size() || !(model.eta > 0))
        throw ValidationError("model does not carry sampler state for these bags");
    const std::size_t vocab = model.topics.empty() ? 0 : model.topics.front().term_dist.size();
    std::vector<std::map<std::size_t, std::uint32_t>> rows(model.topics.size());
    for (std::size_t j = 0; j < bags.size(); ++j) {
        auto tokens = expand_tokens(bags[j]);
        if (tokens.size() != model.assignments[j].size()) throw ValidationError("assignment length mismatch");
        for (std::size_t i = 0; i < tokens.size(); ++i) ++rows.at(model.assignments[j][i])[tokens[i]];
    }
    return detail::collapsed_word_log_likelihood(rows, vocab, model.eta);
}

struct EpochInput {
    EpochSlice slice;
    std::vector<BagOfWords> bags;
};

/// Fits every epoch with the shared configuration. Epoch t is seeded with
/// `config.seed ^ t`, so results do not depend on scheduling; up to `jobs`
/// epochs run concurrently.
inline std::vector<EpochModel> fit_corpus(const std::vector<EpochInput>& epochs, std::size_t vocab_size,
                                          const HdpConfig& config, std::size_t jobs = 1, std::stop_token stop = {},
                                          const std::function<void(std::size_t)>& on_epoch_done = {}) {
    config.validate();
    for (std::size_t t = 0; t < epochs.size(); ++t)
        if (epochs[t].slice.index != t) throw ValidationError("epoch slices must be consecutive from 0");

    std::vector<EpochModel> models(epochs.size());
    std::vector<std::exception_ptr> errors(epochs.size());
    std::atomic<std::size_t> next{0};
    std::mutex done_mutex;
    auto worker = [&] {
        for (std::size_t t; (t = next.fetch_add(1)) < epochs.size();) {
            try {
                HdpConfig local = config;
                local.seed = config.seed ^ static_cast<std::uint64_t>(t);
                models[t] = fit_epoch(epochs[t].bags, vocab_size, local, t, stop);
                if (on_epoch_done) {
                    std::lock_guard lock(done_mutex);
                    on_epoch_done(t);
                }
            } catch (...) {
                errors[t] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, epochs.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    for (std::size_t t = 0; t < errors.size(); ++t) {
        if (!errors[t]) continue;
        try {
            std::rethrow_exception(errors[t]);
        } catch (const Cancelled&) {
            throw;
        } catch (const std::exception& e) {
            throw EpochFitError(t, e.what());
        }
    }
    return models;
}

}  // namespace hdpflow
