#pragma once

// Read-only questions over a completed analysis: keyword search, lineage
// tracing, word clouds and corpus statistics.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hdpflow/bundle.hpp"
#include "hdpflow/error.hpp"
#include "hdpflow/events.hpp"
#include "hdpflow/preprocess.hpp"
#include "hdpflow/relatedness.hpp"

namespace hdpflow {

struct TopicHit {
    NodeRef node;
    double score = 0.0;
    std::vector<std::string> matched_terms;
};

/// Score of a topic = sum over query lemmas (with multiplicity) of its
/// probability for that lemma. Hits ordered by score desc, then epoch, id.
inline std::vector<TopicHit> search_topics(const AnalysisBundle& bundle, std::string_view query, std::size_t limit) {
    if (limit < 1) throw ValidationError("limit must be at least 1");
    const auto tokens = tokenize(query);
    if (tokens.empty()) throw EmptyQuery("query has no searchable terms");

    std::vector<std::size_t> indices;
    std::vector<std::string> matched;
    for (const auto& tok : tokens) {
        const auto& lemma = bundle.lexicon.lemmatize(tok);
        if (bundle.stopwords.count(lemma)) continue;
        auto idx = bundle.vocabulary.index_of(lemma);
        if (!idx) continue;
        indices.push_back(*idx);
        if (std::find(matched.begin(), matched.end(), lemma) == matched.end()) matched.push_back(lemma);
    }
    if (indices.empty()) throw NoVocabularyMatch("no query term is in the vocabulary");

    std::vector<TopicHit> hits;
    for (const auto& model : bundle.models)
        for (const auto& topic : model.topics) {
            double score = 0.0;
            for (auto i : indices) score += topic.term_dist.at(i);
            if (score > 0.0) hits.push_back({{model.epoch, topic.id}, score, matched});
        }
    std::sort(hits.begin(), hits.end(), [](const TopicHit& a, const TopicHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.node < b.node;
    });
    if (hits.size() > limit) hits.resize(limit);
    return hits;
}

enum class TraceDirection { backward, forward };

inline std::optional<TraceDirection> direction_from_string(std::string_view s) {
    if (s == "backward") return TraceDirection::backward;
    if (s == "forward") return TraceDirection::forward;
    return std::nullopt;
}

inline std::string_view to_string(TraceDirection d) { return d == TraceDirection::backward ? "backward" : "forward"; }

struct Lineage {
    NodeRef root;
    std::vector<NodeRef> nodes;  // sorted, includes root
    std::vector<EdgeRef> edges;  // sorted, always (earlier, later)
};

/// Breadth-first closure over surviving edges, at most `max_depth` epochs
/// away from the root.
inline Lineage trace(const TemporalGraph& graph, const NodeRef& node, TraceDirection direction, std::size_t max_depth) {
    if (!graph.has_node(node))
        throw UnknownNode("no topic " + std::to_string(node.id) + " in epoch " + std::to_string(node.epoch));
    if (!graph.pruned) throw UnprunedGraph(std::string(to_string(graph.measure)) + " graph has not been pruned");

    std::map<NodeRef, std::vector<EdgeRef>> next;
    for (const auto& e : graph.edges) {
        if (!e.surviving) continue;
        if (direction == TraceDirection::forward) next[e.from].push_back({e.from, e.to});
        else next[e.to].push_back({e.from, e.to});
    }

    std::set<NodeRef> seen{node};
    std::set<EdgeRef> edges;
    std::vector<NodeRef> frontier{node};
    for (std::size_t depth = 0; depth < max_depth && !frontier.empty(); ++depth) {
        std::vector<NodeRef> layer;
        for (const auto& n : frontier) {
            auto it = next.find(n);
            if (it == next.end()) continue;
            for (const auto& e : it->second) {
                edges.insert(e);
                const NodeRef& other = direction == TraceDirection::forward ? e.to : e.from;
                if (seen.insert(other).second) layer.push_back(other);
            }
        }
        frontier = std::move(layer);
    }
    return {node, {seen.begin(), seen.end()}, {edges.begin(), edges.end()}};
}

inline Lineage trace(const AnalysisBundle& bundle, const NodeRef& node, TraceDirection direction, Measure measure,
                     std::size_t max_depth) {
    return trace(bundle.graph(measure), node, direction, max_depth);
}

inline nlohmann::json to_json(const Lineage& l) {
    nlohmann::json nodes = nlohmann::json::array(), edges = nlohmann::json::array();
    for (const auto& n : l.nodes) nodes.push_back(to_json(n));
    for (const auto& e : l.edges) edges.push_back({{"from", to_json(e.from)}, {"to", to_json(e.to)}});
    return {{"root", to_json(l.root)}, {"nodes", nodes}, {"edges", edges}};
}

using WordCloud = std::vector<std::pair<std::string, double>>;

/// Top-n terms by probability; equal weights ordered by term.
inline WordCloud word_cloud(const Vocabulary& vocab, const Topic& topic, std::size_t n) {
    if (n < 1 || n > vocab.size()) throw ValidationError("word cloud size must lie in [1, vocabulary size]");
    if (topic.term_dist.size() != vocab.size()) throw DimensionMismatch("topic does not match the vocabulary");
    std::vector<std::size_t> order(vocab.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto better = [&](std::size_t a, std::size_t b) {
        if (topic.term_dist[a] != topic.term_dist[b]) return topic.term_dist[a] > topic.term_dist[b];
        return vocab.term(a) < vocab.term(b);
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(), better);
    WordCloud out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(vocab.term(order[i]), topic.term_dist[order[i]]);
    return out;
}

inline WordCloud word_cloud(const AnalysisBundle& bundle, const NodeRef& node, std::size_t n) {
    const Topic* topic = bundle.topic(node);
    if (!topic) throw UnknownNode("no topic " + std::to_string(node.id) + " in epoch " + std::to_string(node.epoch));
    return word_cloud(bundle.vocabulary, *topic, n);
}

struct EpochStats {
    std::size_t epoch = 0;
    std::size_t document_count = 0;
    std::size_t token_count = 0;
    std::size_t topic_count = 0;
    std::map<EventLabel, std::size_t> event_counts;
};

struct CorpusStats {
    std::size_t document_count = 0;
    std::size_t vocabulary_size = 0;
    std::vector<EpochStats> epochs;
    // surviving edges per adjacent epoch pair, per measure
    std::map<Measure, std::vector<std::size_t>> surviving_edges;
};

inline CorpusStats corpus_stats(const AnalysisBundle& bundle) {
    CorpusStats s;
    s.vocabulary_size = bundle.vocabulary.size();
    for (std::size_t t = 0; t < bundle.epochs.size(); ++t) {
        EpochStats e;
        e.epoch = t;
        e.document_count = bundle.epochs[t].document_ids.size();
        if (t < bundle.models.size()) {
            e.topic_count = bundle.models[t].topics.size();
            for (const auto& topic : bundle.models[t].topics) e.token_count += topic.token_count;
        }
        for (auto l : kAllLabels) e.event_counts[l] = 0;
        s.document_count += e.document_count;
        s.epochs.push_back(std::move(e));
    }
    for (const auto& ev : bundle.events)
        if (ev.node.epoch < s.epochs.size())
            for (auto l : ev.labels) ++s.epochs[ev.node.epoch].event_counts[l];
    const std::size_t pairs = s.epochs.empty() ? 0 : s.epochs.size() - 1;
    for (auto m : kAllMeasures) {
        auto& counts = s.surviving_edges[m];
        counts.assign(pairs, 0);
        for (const auto& e : bundle.graph(m).edges)
            if (e.surviving && e.from.epoch < pairs) ++counts[e.from.epoch];
    }
    return s;
}

inline nlohmann::json to_json(const CorpusStats& s) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : s.epochs) {
        nlohmann::json events = nlohmann::json::object();
        for (const auto& [l, c] : e.event_counts) events[std::string(to_string(l))] = c;
        epochs.push_back({{"epoch", e.epoch},
                          {"document_count", e.document_count},
                          {"token_count", e.token_count},
                          {"topic_count", e.topic_count},
                          {"event_counts", events}});
    }
    nlohmann::json edges = nlohmann::json::object();
    for (const auto& [m, counts] : s.surviving_edges) edges[std::string(to_string(m))] = counts;
    return {{"document_count", s.document_count},
            {"vocabulary_size", s.vocabulary_size},
            {"epochs", epochs},
            {"surviving_edges", edges}};
}

}  // namespace hdpflow
