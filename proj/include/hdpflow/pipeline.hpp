#pragma once

// End-to-end run: ingest, preprocess, per-epoch fits, graphs, pruning, events.

#include <array>
#include <functional>
#include <map>
#include <stop_token>
#include <string>
#include <vector>

#include <json.hpp>

#include "hdpflow/bundle.hpp"
#include "hdpflow/config.hpp"
#include "hdpflow/corpus.hpp"
#include "hdpflow/events.hpp"
#include "hdpflow/hdp.hpp"
#include "hdpflow/preprocess.hpp"
#include "hdpflow/relatedness.hpp"
#include "hdpflow/stopwords.hpp"

namespace hdpflow {

using ProgressFn = std::function<void(const std::string&)>;

struct PipelineOptions {
    EpochSpec epochs;
    double energy_fraction = 0.9;
    HdpConfig hdp;
    std::array<double, 3> zeta{0.5, 0.5, 0.5};
    StopWords stopwords;
    LemmaLexicon lexicon;
    std::size_t jobs = 1;
};

inline StopWords default_stopwords() {
    StopWords words;
    for (auto w : kDefaultStopWords) words.emplace(w);
    return words;
}

/// Title and body are tokenized as one text.
inline std::vector<std::string> document_tokens(const RawDocument& doc) {
    return tokenize(doc.title ? *doc.title + "\n" + doc.body : doc.body);
}

inline AnalysisBundle analyze(std::vector<RawDocument> docs, const PipelineOptions& options,
                              nlohmann::json config_snapshot = nlohmann::json::object(), const ProgressFn& progress = {},
                              std::stop_token stop = {}) {
    auto say = [&](const std::string& s) {
        if (progress) progress(s);
    };
    if (docs.empty()) throw EmptyCorpus("corpus has no documents");
    options.hdp.validate();
    std::sort(docs.begin(), docs.end(), detail::document_order);

    auto slices = partition_epochs(docs, options.epochs);
    if (slices.size() < 2) throw TooFewEpochs("the corpus spans fewer than two epochs");
    say("partitioned " + std::to_string(docs.size()) + " documents into " + std::to_string(slices.size()) + " epochs");

    std::map<std::string, std::vector<std::string>> tokens;
    std::vector<std::vector<std::string>> lemmas;
    lemmas.reserve(docs.size());
    for (const auto& d : docs) {
        auto& t = tokens[d.id] = document_tokens(d);
        lemmas.push_back(lemmatize_all(t, options.lexicon));
    }
    Vocabulary vocab = build_vocabulary(lemmas, options.stopwords, options.energy_fraction);
    say("vocabulary: " + std::to_string(vocab.size()) + " terms");

    std::vector<EpochInput> inputs;
    std::size_t empty_bags = 0;
    for (const auto& s : slices) {
        EpochInput in{s, {}};
        for (const auto& id : s.document_ids) {
            in.bags.push_back(vectorize(tokens.at(id), options.lexicon, options.stopwords, vocab, id));
            if (in.bags.back().empty()) ++empty_bags;
        }
        inputs.push_back(std::move(in));
    }
    if (empty_bags) say(std::to_string(empty_bags) + " documents have no in-vocabulary terms");

    auto models = fit_corpus(inputs, vocab.size(), options.hdp, options.jobs, stop,
                             [&](std::size_t t) { say("fitted epoch " + std::to_string(t)); });
    for (const auto& m : models)
        say("epoch " + std::to_string(m.epoch) + ": " + std::to_string(m.topics.size()) + " topics");

    AnalysisBundle bundle;
    bundle.vocabulary = std::move(vocab);
    bundle.lexicon = options.lexicon;
    bundle.stopwords = options.stopwords;
    bundle.epochs = std::move(slices);
    bundle.models = std::move(models);
    for (auto m : kAllMeasures) {
        bundle.graph(m) = prune(build_graph(bundle.models, m), options.zeta[static_cast<std::size_t>(m)]);
        say(std::string(to_string(m)) + " graph: " + std::to_string(bundle.graph(m).surviving_count()) + " of " +
            std::to_string(bundle.graph(m).edges.size()) + " edges survive");
    }
    bundle.events = classify_events(bundle.graph(Measure::bhattacharyya), bundle.graph(Measure::kld_forward),
                                    bundle.graph(Measure::kld_backward));
    bundle.config = std::move(config_snapshot);
    bundle.refresh_hash();
    return bundle;
}

inline PipelineOptions options_from(const RunConfig& config, std::size_t jobs) {
    PipelineOptions o;
    o.epochs = config.epochs;
    o.energy_fraction = config.energy_fraction;
    o.hdp = config.hdp;
    o.zeta = config.zeta;
    o.stopwords = config.stopwords ? load_stopwords(*config.stopwords) : default_stopwords();
    if (config.lexicon) o.lexicon = load_lexicon(*config.lexicon);
    o.jobs = jobs;
    return o;
}

/// Runs the configured analysis and returns the bundle; writing it is up to the caller.
inline AnalysisBundle run_pipeline(const RunConfig& config, std::size_t jobs = 1, const ProgressFn& progress = {},
                                   std::stop_token stop = {}) {
    config.validate();
    auto options = options_from(config, jobs);
    auto docs = load_corpus(config.corpus, config.format);
    if (progress) progress("read " + std::to_string(docs.size()) + " documents from " + config.corpus.string());
    return analyze(std::move(docs), options, config.snapshot(), progress, stop);
}

}  // namespace hdpflow
