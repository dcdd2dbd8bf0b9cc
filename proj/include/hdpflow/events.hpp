#pragma once

// Topic dynamics read off the pruned temporal graphs, and the cross-measure
// edge overlap statistics.
//
// Similarity view (Bhattacharyya graph): Emerged, Vanished, Evolved,
// Speciated, Converged. Envelopment view: Split from out-degree in the
// forward-KLD graph, Merged from in-degree in the backward-KLD graph.

#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hdpflow/error.hpp"
#include "hdpflow/relatedness.hpp"

namespace hdpflow {

enum class EventLabel { Emerged, Vanished, Evolved, Speciated, Converged, Split, Merged };

inline constexpr std::array<EventLabel, 7> kAllLabels{EventLabel::Emerged,   EventLabel::Vanished, EventLabel::Evolved,
                                                      EventLabel::Speciated, EventLabel::Converged, EventLabel::Split,
                                                      EventLabel::Merged};

inline std::string_view to_string(EventLabel l) {
    switch (l) {
        case EventLabel::Emerged: return "Emerged";
        case EventLabel::Vanished: return "Vanished";
        case EventLabel::Evolved: return "Evolved";
        case EventLabel::Speciated: return "Speciated";
        case EventLabel::Converged: return "Converged";
        case EventLabel::Split: return "Split";
        case EventLabel::Merged: return "Merged";
    }
    return "?";
}

inline std::optional<EventLabel> label_from_string(std::string_view s) {
    for (auto l : kAllLabels)
        if (to_string(l) == s) return l;
    return std::nullopt;
}

struct EdgeRef {
    NodeRef from;
    NodeRef to;

    friend auto operator<=>(const EdgeRef&, const EdgeRef&) = default;
};

struct TopicEventSet {
    NodeRef node;
    std::set<EventLabel> labels;
    std::map<EventLabel, std::vector<EdgeRef>> evidence;

    bool has(EventLabel l) const { return labels.count(l) > 0; }

    friend bool operator==(const TopicEventSet&, const TopicEventSet&) = default;
};

namespace detail {

/// Surviving in/out edges per node of one pruned graph.
struct Adjacency {
    std::map<NodeRef, std::vector<EdgeRef>> out, in;

    explicit Adjacency(const TemporalGraph& g) {
        for (const auto& n : g.nodes) {
            out[n];
            in[n];
        }
        for (const auto& e : g.edges)
            if (e.surviving) {
                out[e.from].push_back({e.from, e.to});
                in[e.to].push_back({e.from, e.to});
            }
    }
};

inline void require_pruned(const TemporalGraph& g) {
    if (!g.pruned) throw UnprunedInput(std::string(to_string(g.measure)) + " graph has not been pruned");
}

}  // namespace detail

/// Labels every node from the three pruned graphs. Epoch-0 nodes are never
/// Emerged and last-epoch nodes are never Vanished.
inline std::vector<TopicEventSet> classify_events(const TemporalGraph& bhd, const TemporalGraph& kld_forward,
                                                  const TemporalGraph& kld_backward) {
    if (bhd.nodes != kld_forward.nodes || bhd.nodes != kld_backward.nodes)
        throw NodeSetMismatch("graphs are built over different topic sets");
    detail::require_pruned(bhd);
    detail::require_pruned(kld_forward);
    detail::require_pruned(kld_backward);
    if (bhd.measure != Measure::bhattacharyya || kld_forward.measure != Measure::kld_forward ||
        kld_backward.measure != Measure::kld_backward)
        throw ValidationError("graphs passed in the wrong measure order");

    const detail::Adjacency sim(bhd), fwd(kld_forward), bwd(kld_backward);
    const std::size_t last_epoch = bhd.epoch_count() - 1;

    std::map<NodeRef, TopicEventSet> sets;
    for (const auto& n : bhd.nodes) sets[n].node = n;
    auto mark = [&](const NodeRef& n, EventLabel l, std::vector<EdgeRef> evidence) {
        auto& s = sets[n];
        s.labels.insert(l);
        auto& ev = s.evidence[l];
        ev.insert(ev.end(), evidence.begin(), evidence.end());
    };

    for (const auto& n : bhd.nodes) {
        const auto& out = sim.out.at(n);
        const auto& in = sim.in.at(n);
        if (n.epoch > 0 && in.empty()) mark(n, EventLabel::Emerged, {});
        if (n.epoch < last_epoch && out.empty()) mark(n, EventLabel::Vanished, {});
        if (out.size() >= 2) mark(n, EventLabel::Speciated, out);
        if (in.size() >= 2) mark(n, EventLabel::Converged, in);
        if (out.size() == 1 && sim.in.at(out.front().to).size() == 1) {
            mark(n, EventLabel::Evolved, out);
            mark(out.front().to, EventLabel::Evolved, out);
        }
        if (const auto& split = fwd.out.at(n); split.size() >= 2) mark(n, EventLabel::Split, split);
        if (const auto& merged = bwd.in.at(n); merged.size() >= 2) mark(n, EventLabel::Merged, merged);
    }

    std::vector<TopicEventSet> result;
    result.reserve(sets.size());
    for (auto& [node, s] : sets) result.push_back(std::move(s));
    return result;
}

inline nlohmann::json events_to_json(const std::vector<TopicEventSet>& events) {
    auto edge_json = [](const EdgeRef& e) { return nlohmann::json{{"from", to_json(e.from)}, {"to", to_json(e.to)}}; };
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : events) {
        nlohmann::json labels = nlohmann::json::array(), evidence = nlohmann::json::object();
        for (auto l : s.labels) labels.push_back(std::string(to_string(l)));
        for (const auto& [l, edges] : s.evidence) {
            nlohmann::json list = nlohmann::json::array();
            for (const auto& e : edges) list.push_back(edge_json(e));
            evidence[std::string(to_string(l))] = std::move(list);
        }
        out.push_back({{"epoch", s.node.epoch}, {"topic_id", s.node.id}, {"labels", labels}, {"evidence", evidence}});
    }
    return out;
}

inline std::vector<TopicEventSet> events_from_json(const nlohmann::json& j) {
    std::vector<TopicEventSet> out;
    for (const auto& item : j) {
        TopicEventSet s;
        s.node = {item.at("epoch").get<std::size_t>(), item.at("topic_id").get<std::size_t>()};
        for (const auto& l : item.at("labels")) {
            auto label = label_from_string(l.get<std::string>());
            if (!label) throw ValidationError("unknown event label " + l.get<std::string>());
            s.labels.insert(*label);
        }
        for (const auto& [key, list] : item.at("evidence").items()) {
            auto label = label_from_string(key);
            if (!label) throw ValidationError("unknown event label " + key);
            auto& ev = s.evidence[*label];
            for (const auto& e : list) ev.push_back({node_from_json(e.at("from")), node_from_json(e.at("to"))});
        }
        out.push_back(std::move(s));
    }
    return out;
}

struct OverlapRow {
    std::size_t epoch = 0;  // edges from epoch to epoch + 1
    std::size_t bhd_edge_count = 0;
    std::size_t kld_edge_count = 0;
    std::size_t shared_count = 0;
    double bhd_normalized = 0.0;  // shared / bhd; 0 when there are no BHD edges
    double kld_normalized = 0.0;  // shared / kld; 0 when there are no KLD edges
};

struct OverlapReport {
    std::vector<OverlapRow> rows;
};

/// Per adjacent epoch pair, how many surviving edges the two pruned graphs share.
inline OverlapReport overlap_statistics(const TemporalGraph& bhd, const TemporalGraph& kld) {
    if (bhd.nodes != kld.nodes) throw NodeSetMismatch("graphs are built over different topic sets");
    const std::size_t pairs = bhd.epoch_count() > 0 ? bhd.epoch_count() - 1 : 0;
    std::vector<std::set<EdgeRef>> a(pairs), b(pairs);
    for (const auto& e : bhd.edges)
        if (e.surviving) a.at(e.from.epoch).insert({e.from, e.to});
    for (const auto& e : kld.edges)
        if (e.surviving) b.at(e.from.epoch).insert({e.from, e.to});

    OverlapReport report;
    for (std::size_t t = 0; t < pairs; ++t) {
        OverlapRow row;
        row.epoch = t;
        row.bhd_edge_count = a[t].size();
        row.kld_edge_count = b[t].size();
        for (const auto& e : a[t]) row.shared_count += b[t].count(e);
        if (row.bhd_edge_count) row.bhd_normalized = static_cast<double>(row.shared_count) / static_cast<double>(row.bhd_edge_count);
        if (row.kld_edge_count) row.kld_normalized = static_cast<double>(row.shared_count) / static_cast<double>(row.kld_edge_count);
        report.rows.push_back(row);
    }
    return report;
}

inline void write_overlap_csv(std::ostream& out, const OverlapReport& report) {
    out << "epoch_pair,bhd_edges,kld_edges,shared,bhd_norm,kld_norm\n";
    for (const auto& r : report.rows)
        out << r.epoch << '-' << r.epoch + 1 << ',' << r.bhd_edge_count << ',' << r.kld_edge_count << ','
            << r.shared_count << ',' << detail::format_real(r.bhd_normalized) << ','
            << detail::format_real(r.kld_normalized) << '\n';
}

}  // namespace hdpflow
