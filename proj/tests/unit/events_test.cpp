#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "hdpflow/events.hpp"
#include "support/synthetic.hpp"

using namespace hdpflow;

namespace {

using Pairs = std::vector<std::pair<NodeRef, NodeRef>>;

/// A pruned graph over `nodes` whose surviving edges are exactly `alive`,
/// every other adjacent pair present but pruned.
TemporalGraph pruned_graph(Measure m, std::vector<NodeRef> nodes, const Pairs& alive) {
    TemporalGraph g;
    g.measure = m;
    std::sort(nodes.begin(), nodes.end());
    g.nodes = nodes;
    std::vector<double> rel;
    for (const auto& a : nodes)
        for (const auto& b : nodes)
            if (b.epoch == a.epoch + 1) {
                const bool keep = std::find(alive.begin(), alive.end(), std::make_pair(a, b)) != alive.end();
                g.edges.push_back({a, b, keep ? 0.9 : 0.1, keep ? 0.9 : 0.1, keep});
                rel.push_back(keep ? 0.9 : 0.1);
            }
    if (!rel.empty()) g.cdf = EmpiricalCdf(rel);
    g.zeta = 0.5;
    g.pruned = true;
    return g;
}

std::vector<TopicEventSet> classify_same(const std::vector<NodeRef>& nodes, const Pairs& alive) {
    return classify_events(pruned_graph(Measure::bhattacharyya, nodes, alive),
                           pruned_graph(Measure::kld_forward, nodes, alive),
                           pruned_graph(Measure::kld_backward, nodes, alive));
}

const TopicEventSet& at(const std::vector<TopicEventSet>& ev, NodeRef n) {
    auto it = std::find_if(ev.begin(), ev.end(), [&](const TopicEventSet& s) { return s.node == n; });
    if (it == ev.end()) throw std::runtime_error("node missing");
    return *it;
}

std::vector<double> smooth(std::vector<double> v) {
    double s = 0;
    for (auto& x : v) s += (x += 1e-10);
    for (auto& x : v) x /= s;
    return v;
}

// Smallest v with #{x <= v}/n >= zeta, by linear scan.
double naive_quantile(std::vector<double> xs, double zeta) {
    std::sort(xs.begin(), xs.end());
    for (double v : xs) {
        double below = 0;
        for (double x : xs) below += x <= v;
        if (below / static_cast<double>(xs.size()) >= zeta) return v;
    }
    return xs.back();
}

}  // namespace

TEST(ClassifyEvents, EmergedWithoutIncomingEdges) {
    std::vector<NodeRef> nodes;
    for (std::size_t t = 0; t < 5; ++t) nodes.push_back({t, 0});
    nodes.push_back({3, 1});
    Pairs alive{{{0, 0}, {1, 0}}, {{1, 0}, {2, 0}}, {{2, 0}, {3, 0}}, {{3, 0}, {4, 0}}, {{3, 1}, {4, 0}}};
    auto ev = classify_same(nodes, alive);
    EXPECT_TRUE(at(ev, {3, 1}).has(EventLabel::Emerged));
    EXPECT_FALSE(at(ev, {3, 0}).has(EventLabel::Emerged));
    EXPECT_FALSE(at(ev, {0, 0}).has(EventLabel::Emerged));
    EXPECT_FALSE(at(ev, {4, 0}).has(EventLabel::Vanished));
    EXPECT_TRUE(at(ev, {4, 0}).has(EventLabel::Converged));
    EXPECT_TRUE(at(ev, {4, 0}).has(EventLabel::Merged));
    EXPECT_TRUE(at(ev, {3, 1}).evidence.at(EventLabel::Emerged).empty());
}

TEST(ClassifyEvents, EvolvedChainCarriesEvidence) {
    std::vector<NodeRef> nodes{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    auto ev = classify_same(nodes, {{{0, 0}, {1, 0}}});
    const EdgeRef edge{{0, 0}, {1, 0}};
    for (NodeRef n : {NodeRef{0, 0}, NodeRef{1, 0}}) {
        EXPECT_TRUE(at(ev, n).has(EventLabel::Evolved));
        EXPECT_EQ(at(ev, n).evidence.at(EventLabel::Evolved), std::vector<EdgeRef>{edge});
    }
    EXPECT_FALSE(at(ev, {1, 0}).has(EventLabel::Emerged));
    EXPECT_FALSE(at(ev, {0, 0}).has(EventLabel::Vanished));
    EXPECT_TRUE(at(ev, {0, 1}).has(EventLabel::Vanished));
    EXPECT_TRUE(at(ev, {1, 1}).has(EventLabel::Emerged));
}

TEST(ClassifyEvents, SharedSuccessorIsNotEvolved) {
    std::vector<NodeRef> nodes{{0, 0}, {0, 1}, {1, 0}};
    auto ev = classify_same(nodes, {{{0, 0}, {1, 0}}, {{0, 1}, {1, 0}}});
    EXPECT_FALSE(at(ev, {0, 0}).has(EventLabel::Evolved));
    EXPECT_FALSE(at(ev, {1, 0}).has(EventLabel::Evolved));
    EXPECT_TRUE(at(ev, {1, 0}).has(EventLabel::Converged));
}

TEST(ClassifyEvents, SplitImpliesSpeciatedWhenGraphsAgree) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<NodeRef> nodes;
        for (std::size_t t = 0; t < 3; ++t)
            for (std::size_t k = 0; k < 1 + rng() % 4; ++k) nodes.push_back({t, k});
        Pairs alive;
        for (const auto& a : nodes)
            for (const auto& b : nodes)
                if (b.epoch == a.epoch + 1 && rng() % 2) alive.push_back({a, b});
        auto ev = classify_same(nodes, alive);
        for (const auto& s : ev) {
            EXPECT_EQ(s.has(EventLabel::Split), s.has(EventLabel::Speciated));
            EXPECT_EQ(s.has(EventLabel::Merged), s.has(EventLabel::Converged));
            if (s.node.epoch == 0) {
                EXPECT_FALSE(s.has(EventLabel::Emerged));
            }
            if (s.node.epoch == 2) {
                EXPECT_FALSE(s.has(EventLabel::Vanished));
            }
            if (s.has(EventLabel::Emerged) && s.has(EventLabel::Evolved)) {
                for (const auto& e : s.evidence.at(EventLabel::Evolved)) EXPECT_FALSE(e.to == s.node);
            }
            if (s.has(EventLabel::Vanished) && s.has(EventLabel::Evolved)) {
                for (const auto& e : s.evidence.at(EventLabel::Evolved)) EXPECT_FALSE(e.from == s.node);
            }
            // Evidence edges exist and survive.
            for (const auto& [label, edges] : s.evidence)
                for (const auto& e : edges)
                    EXPECT_NE(std::find(alive.begin(), alive.end(), std::make_pair(e.from, e.to)), alive.end());
        }
    }
}

// Parent P envelops two sharply different successors A and B: the similarity
// view prunes both links, the forward divergence keeps both.
TEST(ClassifyEvents, SplitButNotSpeciatedToy) {
    const auto P = smooth({.4, .4, .1, .1, 0, 0});
    const auto A = smooth({.8, .2, 0, 0, 0, 0});
    const auto B = smooth({0, 0, .5, .5, 0, 0});
    std::vector<std::vector<double>> at_t{P}, at_next{A, B};
    for (int i = 0; i < 4; ++i) at_t.push_back(smooth({0, 0, 0, 0, 1, 1e-9}));
    for (int i = 0; i < 4; ++i) at_next.push_back(smooth({0, 0, 0, 0, .9, .1}));
    std::vector<EpochModel> models(2);
    for (std::size_t t = 0; t < 2; ++t) {
        models[t].epoch = t;
        const auto& ds = t == 0 ? at_t : at_next;
        for (std::size_t k = 0; k < ds.size(); ++k) models[t].topics.push_back({t, k, ds[k], 0.1, 1});
    }
    auto bhd = build_graph(models, Measure::bhattacharyya);
    auto fwd = build_graph(models, Measure::kld_forward);
    auto bwd = build_graph(models, Measure::kld_backward);

    auto rel_of = [](const TemporalGraph& g, NodeRef a, NodeRef b) {
        for (const auto& e : g.edges)
            if (e.from == a && e.to == b) return e.relatedness;
        return -1.0;
    };
    auto all_rel = [](const TemporalGraph& g) {
        std::vector<double> v;
        for (const auto& e : g.edges) v.push_back(e.relatedness);
        return v;
    };
    const double bhd_threshold = naive_quantile(all_rel(bhd), 0.5);
    const double fwd_threshold = naive_quantile(all_rel(fwd), 0.5);
    EXPECT_EQ(bhd.edges.size(), 30u);
    EXPECT_LT(rel_of(bhd, {0, 0}, {1, 0}), bhd_threshold);
    EXPECT_LT(rel_of(bhd, {0, 0}, {1, 1}), bhd_threshold);
    EXPECT_GE(rel_of(fwd, {0, 0}, {1, 0}), fwd_threshold);
    EXPECT_GE(rel_of(fwd, {0, 0}, {1, 1}), fwd_threshold);

    auto ev = classify_events(prune(bhd, 0.5), prune(fwd, 0.5), prune(bwd, 0.5));
    const auto& p = at(ev, {0, 0});
    EXPECT_TRUE(p.has(EventLabel::Split));
    EXPECT_FALSE(p.has(EventLabel::Speciated));
    EXPECT_EQ(p.evidence.at(EventLabel::Split), (std::vector<EdgeRef>{{{0, 0}, {1, 0}}, {{0, 0}, {1, 1}}}));
}

TEST(ClassifyEvents, Errors) {
    std::vector<NodeRef> nodes{{0, 0}, {1, 0}};
    auto g = pruned_graph(Measure::bhattacharyya, nodes, {});
    auto f = pruned_graph(Measure::kld_forward, nodes, {});
    auto b = pruned_graph(Measure::kld_backward, nodes, {});
    auto other = pruned_graph(Measure::kld_forward, {{0, 0}, {1, 0}, {1, 1}}, {});
    EXPECT_THROW(classify_events(g, other, b), NodeSetMismatch);
    auto raw = f;
    raw.pruned = false;
    EXPECT_THROW(classify_events(g, raw, b), UnprunedInput);
    EXPECT_THROW(classify_events(g, b, f), ValidationError);
}

TEST(ClassifyEvents, JsonRoundTrip) {
    std::vector<NodeRef> nodes{{0, 0}, {0, 1}, {1, 0}, {1, 1}, {1, 2}};
    auto ev = classify_same(nodes, {{{0, 0}, {1, 0}}, {{0, 0}, {1, 1}}});
    auto back = events_from_json(nlohmann::json::parse(events_to_json(ev).dump()));
    EXPECT_EQ(back, ev);
    EXPECT_THROW(events_from_json(nlohmann::json::parse(R"([{"epoch":0,"topic_id":0,"labels":["Bogus"],"evidence":{}}])")),
                 ValidationError);
}

TEST(Overlap, HandEnumeration) {
    std::vector<NodeRef> nodes{{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}};
    const std::pair<NodeRef, NodeRef> e1{{0, 0}, {1, 0}}, e2{{0, 0}, {1, 1}}, e3{{0, 1}, {1, 0}}, e4{{0, 1}, {1, 2}},
        e5{{0, 2}, {1, 2}};
    auto bhd = pruned_graph(Measure::bhattacharyya, nodes, {e1, e2, e3, e4});
    auto kld = pruned_graph(Measure::kld_forward, nodes, {e2, e5});
    auto r = overlap_statistics(bhd, kld);
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0].shared_count, 1u);
    EXPECT_DOUBLE_EQ(r.rows[0].bhd_normalized, 0.25);
    EXPECT_DOUBLE_EQ(r.rows[0].kld_normalized, 0.5);

    auto swapped = overlap_statistics(kld, bhd);
    EXPECT_EQ(swapped.rows[0].shared_count, 1u);
    EXPECT_DOUBLE_EQ(swapped.rows[0].bhd_normalized, 0.5);
    EXPECT_DOUBLE_EQ(swapped.rows[0].kld_normalized, 0.25);

    auto same = overlap_statistics(bhd, pruned_graph(Measure::kld_forward, nodes, {e1, e2, e3, e4}));
    EXPECT_DOUBLE_EQ(same.rows[0].bhd_normalized, 1.0);
    EXPECT_DOUBLE_EQ(same.rows[0].kld_normalized, 1.0);
    auto disjoint = overlap_statistics(bhd, pruned_graph(Measure::kld_forward, nodes, {e5}));
    EXPECT_EQ(disjoint.rows[0].bhd_normalized, 0.0);
    EXPECT_EQ(disjoint.rows[0].kld_normalized, 0.0);

    EXPECT_THROW(overlap_statistics(bhd, pruned_graph(Measure::kld_forward, {{0, 0}, {1, 0}}, {})), NodeSetMismatch);
}

TEST(Overlap, CsvOneRowPerEpochPair) {
    std::vector<NodeRef> nodes{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
    auto g = pruned_graph(Measure::bhattacharyya, nodes, {{{0, 0}, {1, 0}}});
    std::ostringstream out;
    write_overlap_csv(out, overlap_statistics(g, pruned_graph(Measure::kld_forward, nodes, {{{0, 0}, {1, 0}}})));
    EXPECT_EQ(out.str(),
              "epoch_pair,bhd_edges,kld_edges,shared,bhd_norm,kld_norm\n"
              "0-1,1,1,1,1,1\n"
              "1-2,0,0,0,0,0\n"
              "2-3,0,0,0,0,0\n");
}
