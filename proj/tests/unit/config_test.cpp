#include <gtest/gtest.h>

#include <fstream>

#include "hdpflow/config.hpp"
#include "support/fixture.hpp"

using namespace hdpflow;

namespace {

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const InvalidConfig& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(RunConfig, DefaultTextParses) {
    auto c = RunConfig::parse(kDefaultConfigToml, "/base");
    EXPECT_EQ(c.corpus, std::filesystem::path("/base/example_corpus.jsonl"));
    EXPECT_EQ(c.stopwords, std::filesystem::path("/base/stopwords.txt"));
    EXPECT_EQ(c.output, std::filesystem::path("/base/bundle"));
    EXPECT_EQ(c.format, CorpusFormat::jsonl);
    EXPECT_EQ(c.epochs.length_months, 12);
    EXPECT_EQ(c.epochs.min_documents, 20u);
    EXPECT_EQ(c.hdp.iterations, 1000u);
    EXPECT_EQ(c.hdp.burn_in, 500u);
    EXPECT_DOUBLE_EQ(c.energy_fraction, 0.9);
    for (auto m : kAllMeasures) EXPECT_DOUBLE_EQ(c.zeta_for(m), 0.5);
}

TEST(RunConfig, ShippedExampleValidates) {
    auto c = RunConfig::load(std::filesystem::path(HDPFLOW_SOURCE_DIR) / "data" / "example.toml");
    EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, OverridesAndBoundaries) {
    auto c = RunConfig::parse(R"(
[paths]
corpus = "/abs/papers.csv"
output = "out"
[epochs]
mode = "explicit_boundaries"
boundaries = ["2000-01-01", 2005-01-01]
min_documents = 5
[hdp]
seed = 42
resample_concentrations = true
[pruning]
kld_forward = 0.25
)",
                              "/cfg");
    EXPECT_EQ(c.corpus, std::filesystem::path("/abs/papers.csv"));
    EXPECT_EQ(c.format, CorpusFormat::csv);
    EXPECT_FALSE(c.stopwords.has_value());
    EXPECT_EQ(c.output, std::filesystem::path("/cfg/out"));
    EXPECT_EQ(c.epochs.mode, EpochSpec::Mode::explicit_boundaries);
    EXPECT_EQ(c.epochs.boundaries, (std::vector<Date>{fixture::ymd(2000, 1, 1), fixture::ymd(2005, 1, 1)}));
    EXPECT_EQ(c.hdp.seed, 42u);
    EXPECT_TRUE(c.hdp.resample_concentrations);
    EXPECT_DOUBLE_EQ(c.zeta_for(Measure::kld_forward), 0.25);
    EXPECT_DOUBLE_EQ(c.zeta_for(Measure::bhattacharyya), 0.5);
}

TEST(RunConfig, Rejections) {
    EXPECT_NE(message_of([] { RunConfig::parse("[paths]\ncorpus = \"a\"\ncorpse = 1\n", "."); }).find("corpse"),
              std::string::npos);
    EXPECT_NE(message_of([] { RunConfig::parse("[paths]\ncorpus = \"a\"\n[hdp]\nalpha = \"high\"\n", "."); })
                  .find("hdp.alpha"),
              std::string::npos);
    EXPECT_NE(message_of([] { RunConfig::parse("[paths]\ncorpus = \"a\"\n\nbroken = = 1\n", "."); }).find("line 4"),
              std::string::npos);
    EXPECT_THROW(RunConfig::parse("[paths]\noutput = \"x\"\n", "."), InvalidConfig);
    EXPECT_THROW(RunConfig::parse("[paths]\ncorpus = \"a\"\nformat = \"xml\"\n", "."), InvalidConfig);
    EXPECT_THROW(RunConfig::parse("[paths]\ncorpus = \"a\"\n[epochs]\nmode = \"weekly\"\n", "."), InvalidConfig);
    EXPECT_THROW(RunConfig::parse("[paths]\ncorpus = \"a\"\n[extra]\n", "."), InvalidConfig);
    EXPECT_THROW(RunConfig::load("/nonexistent/run.toml"), InvalidConfig);
}

TEST(RunConfig, ValidateNamesMissingFiles) {
    fixture::TempDir tmp("config");
    std::ofstream(tmp / "corpus.jsonl") << "";
    auto c = RunConfig::parse("[paths]\ncorpus = \"corpus.jsonl\"\nlexicon = \"nope.tsv\"\n", tmp.path());
    EXPECT_NE(message_of([&] { c.validate(); }).find("nope.tsv"), std::string::npos);
    c.lexicon.reset();
    EXPECT_NO_THROW(c.validate());
    c.zeta[0] = 1.5;
    EXPECT_THROW(c.validate(), InvalidConfig);
    auto missing = RunConfig::parse("[paths]\ncorpus = \"absent.jsonl\"\n", tmp.path());
    EXPECT_NE(message_of([&] { missing.validate(); }).find("absent.jsonl"), std::string::npos);
}

TEST(RunConfig, SnapshotKeepsPathsAsWrittenAndOmitsOutput) {
    auto c = RunConfig::parse(kDefaultConfigToml, "/somewhere/else");
    auto s = c.snapshot();
    EXPECT_EQ(s["paths"]["corpus"], "example_corpus.jsonl");
    EXPECT_FALSE(s["paths"].contains("output"));
    EXPECT_EQ(s["hdp"]["seed"], 1);
    EXPECT_EQ(s["epochs"]["length_months"], 12);
    EXPECT_EQ(s["pruning"]["kld_backward"], 0.5);
    EXPECT_EQ(RunConfig::parse(kDefaultConfigToml, "/other").snapshot(), s);
}
