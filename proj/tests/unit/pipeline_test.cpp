#include <gtest/gtest.h>

#include "hdpflow/pipeline.hpp"
#include "support/synthetic.hpp"

using namespace hdpflow;

namespace {

PipelineOptions small_options(std::size_t jobs = 1) {
    PipelineOptions o;
    o.hdp.iterations = 60;
    o.hdp.burn_in = 30;
    o.epochs.min_documents = 5;
    o.stopwords = default_stopwords();
    o.jobs = jobs;
    return o;
}

std::vector<RawDocument> small_corpus(std::uint64_t seed) {
    return synth::event_corpus(synth::Scenario::splitting, seed, 10, 30).docs;
}

}  // namespace

TEST(Analyze, ProducesConsistentBundle) {
    std::vector<std::string> progress;
    auto b = analyze(small_corpus(1), small_options(), {{"tag", 1}}, [&](const std::string& s) { progress.push_back(s); });
    ASSERT_EQ(b.epochs.size(), 2u);
    ASSERT_EQ(b.models.size(), 2u);
    EXPECT_EQ(b.epochs[0].document_ids.size(), 40u);
    EXPECT_EQ(b.epochs[1].document_ids.size(), 50u);
    EXPECT_FALSE(progress.empty());
    EXPECT_EQ(b.config["tag"], 1);
    EXPECT_EQ(b.content_hash, b.compute_content_hash());
    for (auto m : kAllMeasures) {
        EXPECT_TRUE(b.graph(m).pruned);
        EXPECT_EQ(b.graph(m).zeta, 0.5);
        // Every graph node is a topic of some model.
        for (const auto& n : b.graph(m).nodes) EXPECT_NE(b.topic(n), nullptr);
    }
    EXPECT_EQ(b.events.size(), b.graph(Measure::bhattacharyya).nodes.size());
    for (const auto& t : b.vocabulary.terms()) EXPECT_FALSE(b.stopwords.count(t.term));
}

TEST(Analyze, DeterministicAndIndependentOfJobs) {
    auto a = analyze(small_corpus(2), small_options(1));
    auto b = analyze(small_corpus(2), small_options(2));
    EXPECT_EQ(a.content_hash, b.content_hash);
    auto docs = small_corpus(2);
    std::reverse(docs.begin(), docs.end());
    EXPECT_EQ(analyze(docs, small_options(1)).content_hash, a.content_hash);
    auto other = small_options(1);
    other.hdp.seed = 99;
    EXPECT_NE(analyze(small_corpus(2), other).content_hash, a.content_hash);
}

TEST(Analyze, PerMeasureOperatingPoints) {
    auto o = small_options();
    o.zeta = {0.0, 0.9, 0.5};
    auto b = analyze(small_corpus(3), o);
    EXPECT_EQ(b.graph(Measure::bhattacharyya).surviving_count(), b.graph(Measure::bhattacharyya).edges.size());
    EXPECT_EQ(b.graph(Measure::kld_forward).zeta, 0.9);
}

TEST(Analyze, Errors) {
    EXPECT_THROW(analyze({}, small_options()), EmptyCorpus);
    auto docs = small_corpus(4);
    std::erase_if(docs, [](const RawDocument& d) { return d.timestamp.year() == std::chrono::year{2002}; });
    EXPECT_THROW(analyze(docs, small_options()), TooFewEpochs);
    std::stop_source stop;
    stop.request_stop();
    EXPECT_THROW(analyze(small_corpus(4), small_options(), {}, {}, stop.get_token()), Cancelled);
}

TEST(DocumentTokens, TitleAndBody) {
    RawDocument d{"x", {}, std::string("Insulin Resistance"), "in obese mice"};
    EXPECT_EQ(document_tokens(d), (std::vector<std::string>{"insulin", "resistance", "in", "obese", "mice"}));
}
