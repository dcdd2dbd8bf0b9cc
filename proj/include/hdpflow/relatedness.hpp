#pragma once

// Inter-topic relatedness (Bhattacharyya coefficient, Kullback-Leibler
// divergence in both temporal directions), layered temporal graphs between
// adjacent epochs, and pruning at an operating point of the empirical CDF.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hdpflow/error.hpp"
#include "hdpflow/hdp.hpp"

namespace hdpflow {

inline constexpr double kKldFloor = 1e-12;

/// BC(p, q) = sum_i sqrt(p_i q_i), clamped into [0, 1].
inline double bhattacharyya_coefficient(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw DimensionMismatch("distributions differ in dimension");
    double bc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p[i] * q[i]);
    return std::clamp(bc, 0.0, 1.0);
}

inline double bhattacharyya_distance(std::span<const double> p, std::span<const double> q) {
    return -std::log(bhattacharyya_coefficient(p, q));
}

/// KL(p || q) in nats. Entries of q below 1e-12 are raised to 1e-12 and q is
/// renormalized before summing.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw DimensionMismatch("distributions differ in dimension");
    bool clamped = false;
    double q_sum = 0.0;
    for (double v : q) {
        if (v < kKldFloor) clamped = true;
        q_sum += std::max(v, kKldFloor);
    }
    const double scale = clamped ? q_sum : 1.0;
    double kld = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        const double qi = std::max(q[i], kKldFloor) / scale;
        kld += p[i] * std::log(p[i] / qi);
    }
    return std::max(kld, 0.0);
}

enum class Measure { bhattacharyya, kld_forward, kld_backward };

inline constexpr Measure kAllMeasures[] = {Measure::bhattacharyya, Measure::kld_forward, Measure::kld_backward};

inline std::string_view to_string(Measure m) {
    switch (m) {
        case Measure::bhattacharyya: return "bhattacharyya";
        case Measure::kld_forward: return "kld_forward";
        case Measure::kld_backward: return "kld_backward";
    }
    return "?";
}

inline std::optional<Measure> measure_from_string(std::string_view s) {
    for (auto m : kAllMeasures)
        if (to_string(m) == s) return m;
    return std::nullopt;
}

struct NodeRef {
    std::size_t epoch = 0;
    std::size_t id = 0;

    friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

inline nlohmann::json to_json(const NodeRef& n) { return {{"epoch", n.epoch}, {"id", n.id}}; }
inline NodeRef node_from_json(const nlohmann::json& j) {
    return {j.at("epoch").get<std::size_t>(), j.at("id").get<std::size_t>()};
}

struct Edge {
    NodeRef from;
    NodeRef to;
    double raw_weight = 0.0;
    double relatedness = 0.0;  // higher = more related, in (0, 1]
    bool surviving = true;
};

/// Right-continuous empirical CDF of a finite sample.
class EmpiricalCdf {
public:
    EmpiricalCdf() = default;

    explicit EmpiricalCdf(std::vector<double> values) : sorted_(std::move(values)) {
        if (sorted_.empty()) throw EmptyInput("empirical CDF of an empty sample");
        std::sort(sorted_.begin(), sorted_.end());
    }

    /// F(x) = #{v <= x} / n.
    double operator()(double x) const {
        auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
        return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
    }

    /// Smallest sample value v with F(v) >= zeta; -inf for zeta = 0 (keep everything).
    double quantile(double zeta) const {
        if (!(zeta >= 0.0 && zeta <= 1.0)) throw InvalidZeta("operating point must lie in [0, 1]");
        if (sorted_.empty()) throw EmptyInput("empirical CDF of an empty sample");
        if (zeta == 0.0) return -std::numeric_limits<double>::infinity();
        const double n = static_cast<double>(sorted_.size());
        // Smallest rank r (1-based) with r / n >= zeta, evaluated exactly as F does.
        auto r = static_cast<std::size_t>(std::ceil(zeta * n));
        r = std::clamp<std::size_t>(r, 1, sorted_.size());
        while (r > 1 && static_cast<double>(r - 1) / n >= zeta) --r;
        while (r < sorted_.size() && static_cast<double>(r) / n < zeta) ++r;
        return sorted_[r - 1];
    }

    std::size_t size() const noexcept { return sorted_.size(); }
    const std::vector<double>& sorted_values() const noexcept { return sorted_; }

private:
    std::vector<double> sorted_;
};

inline EmpiricalCdf empirical_cdf(std::vector<double> values) { return EmpiricalCdf(std::move(values)); }

struct TemporalGraph {
    Measure measure = Measure::bhattacharyya;
    std::vector<NodeRef> nodes;
    std::vector<Edge> edges;
    EmpiricalCdf cdf;
    std::optional<double> zeta;
    bool pruned = false;

    std::size_t epoch_count() const { return nodes.empty() ? 0 : nodes.back().epoch + 1; }

    std::size_t surviving_count() const {
        return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [](const Edge& e) { return e.surviving; }));
    }

    bool has_node(const NodeRef& n) const { return std::binary_search(nodes.begin(), nodes.end(), n); }

    nlohmann::json to_json() const {
        nlohmann::json ns = nlohmann::json::array(), es = nlohmann::json::array();
        for (const auto& n : nodes) ns.push_back(hdpflow::to_json(n));
        for (const auto& e : edges)
            es.push_back({{"from", hdpflow::to_json(e.from)},
                          {"to", hdpflow::to_json(e.to)},
                          {"raw_weight", e.raw_weight},
                          {"relatedness", e.relatedness},
                          {"surviving", e.surviving}});
        return {{"measure", std::string(to_string(measure))},
                {"zeta", zeta ? nlohmann::json(*zeta) : nlohmann::json(nullptr)},
                {"nodes", std::move(ns)},
                {"edges", std::move(es)}};
    }

    static TemporalGraph from_json(const nlohmann::json& j) {
        TemporalGraph g;
        auto m = measure_from_string(j.at("measure").get<std::string>());
        if (!m) throw ValidationError("unknown measure in graph file");
        g.measure = *m;
        for (const auto& n : j.at("nodes")) g.nodes.push_back(node_from_json(n));
        std::vector<double> rel;
        for (const auto& e : j.at("edges")) {
            Edge edge{node_from_json(e.at("from")), node_from_json(e.at("to")), e.at("raw_weight").get<double>(),
                      e.at("relatedness").get<double>(), e.at("surviving").get<bool>()};
            rel.push_back(edge.relatedness);
            g.edges.push_back(edge);
        }
        if (!rel.empty()) g.cdf = EmpiricalCdf(std::move(rel));
        if (!j.at("zeta").is_null()) {
            g.zeta = j.at("zeta").get<double>();
            g.pruned = true;
        }
        return g;
    }
};

/// Raw edge weight from the topic at epoch t (`earlier`) to the one at t+1 (`later`).
inline double raw_weight(Measure m, std::span<const double> earlier, std::span<const double> later) {
    switch (m) {
        case Measure::bhattacharyya: return bhattacharyya_coefficient(earlier, later);
        case Measure::kld_forward: return kl_divergence(later, earlier);   // does the parent envelop the child
        case Measure::kld_backward: return kl_divergence(earlier, later);  // does the child envelop the parent
    }
    return 0.0;
}

inline double relatedness_of(Measure m, double raw) { return m == Measure::bhattacharyya ? raw : std::exp(-raw); }

/// Complete bipartite graph between every pair of adjacent epochs. Unpruned.
inline TemporalGraph build_graph(const std::vector<EpochModel>& models, Measure measure) {
    if (models.size() < 2) throw TooFewEpochs("a temporal graph needs at least two epochs");
    TemporalGraph g;
    g.measure = measure;
    for (std::size_t t = 0; t < models.size(); ++t) {
        if (models[t].epoch != t) throw ValidationError("epoch models must be ordered from 0");
        for (const auto& topic : models[t].topics) g.nodes.push_back({t, topic.id});
    }
    std::sort(g.nodes.begin(), g.nodes.end());
    std::vector<double> rel;
    for (std::size_t t = 0; t + 1 < models.size(); ++t)
        for (const auto& a : models[t].topics)
            for (const auto& b : models[t + 1].topics) {
                const double raw = raw_weight(measure, a.term_dist, b.term_dist);
                Edge e{{t, a.id}, {t + 1, b.id}, raw, relatedness_of(measure, raw), true};
                rel.push_back(e.relatedness);
                g.edges.push_back(e);
            }
    g.cdf = EmpiricalCdf(std::move(rel));
    return g;
}

/// Marks an edge surviving iff its relatedness >= F^{-1}(zeta). Raw edges are
/// kept, so a pruned graph can be re-pruned at any other operating point.
inline TemporalGraph prune(const TemporalGraph& graph, double zeta) {
    if (!(zeta >= 0.0 && zeta <= 1.0)) throw InvalidZeta("zeta must lie in [0, 1]");
    TemporalGraph out = graph;
    const double threshold = out.cdf.quantile(zeta);
    for (auto& e : out.edges) e.surviving = e.relatedness >= threshold;
    out.zeta = zeta;
    out.pruned = true;
    return out;
}

namespace detail {
inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace detail

/// Pre-pruning edge strengths for every adjacent-epoch topic pair, one CSV row each.
inline void write_scatter_csv(std::ostream& out, const TemporalGraph& bc, const TemporalGraph& kld_forward,
                              const TemporalGraph& kld_backward) {
    if (bc.edges.size() != kld_forward.edges.size() || bc.edges.size() != kld_backward.edges.size())
        throw NodeSetMismatch("graphs do not share an edge set");
    out << "bc,kld_forward,kld_backward\n";
    for (std::size_t i = 0; i < bc.edges.size(); ++i) {
        const auto& a = bc.edges[i];
        const auto& f = kld_forward.edges[i];
        const auto& b = kld_backward.edges[i];
        if (a.from != f.from || a.to != f.to || a.from != b.from || a.to != b.to)
            throw NodeSetMismatch("graphs do not share an edge set");
        out << detail::format_real(a.raw_weight) << ',' << detail::format_real(f.raw_weight) << ','
            << detail::format_real(b.raw_weight) << '\n';
    }
}

}  // namespace hdpflow
