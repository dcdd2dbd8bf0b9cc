#include <gtest/gtest.h>

#include <fstream>

#include "hdpflow/bundle.hpp"
#include "support/fixture.hpp"

using namespace hdpflow;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<bool> survival(const TemporalGraph& g) {
    std::vector<bool> out;
    for (const auto& e : g.edges) out.push_back(e.surviving);
    return out;
}

}  // namespace

TEST(Sha256, KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Bundle, WriteReadRoundTrip) {
    fixture::TempDir tmp("bundle");
    const auto b = fixture::bundle();
    write_bundle(b, tmp / "out");
    for (const char* f : {"manifest.json", "vocabulary.json", "preprocess.json", "epochs.json", "events.json",
                          "models/epoch-0.json", "models/epoch-2.json", "graphs/bhattacharyya.json",
                          "graphs/kld_forward.json", "graphs/kld_backward.json"})
        EXPECT_TRUE(fs::exists(tmp / "out" / f)) << f;

    auto back = read_bundle(tmp / "out");
    EXPECT_EQ(back.content_hash, b.content_hash);
    EXPECT_EQ(back.serialize_parts(), b.serialize_parts());
    EXPECT_EQ(back.config, b.config);
    EXPECT_EQ(back.vocabulary, b.vocabulary);
    EXPECT_EQ(back.lexicon.entries(), b.lexicon.entries());
    EXPECT_EQ(back.stopwords, b.stopwords);
    EXPECT_EQ(back.epochs, b.epochs);
    EXPECT_EQ(back.events, b.events);
    for (auto m : kAllMeasures) {
        EXPECT_TRUE(back.graph(m).pruned);
        EXPECT_EQ(survival(back.graph(m)), survival(b.graph(m)));
    }
    auto manifest = nlohmann::json::parse(slurp(tmp / "out" / "manifest.json"));
    EXPECT_EQ(manifest["format_version"], 1);
    EXPECT_EQ(manifest["content_hash"], b.content_hash);
}

TEST(Bundle, OverwriteLeavesNoStagingDirectories) {
    fixture::TempDir tmp("bundle");
    write_bundle(fixture::bundle(0.5), tmp / "out");
    const auto second = fixture::bundle(0.2);
    write_bundle(second, tmp / "out");
    EXPECT_EQ(read_bundle(tmp / "out").content_hash, second.content_hash);
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(tmp.path())) ++entries;
    EXPECT_EQ(entries, 1u);
}

TEST(Bundle, WriteFailureIsIoError) {
    fixture::TempDir tmp("bundle");
    std::ofstream(tmp / "file") << "x";
    EXPECT_THROW(write_bundle(fixture::bundle(), tmp / "file" / "out"), IoError);
}

TEST(Bundle, ReadRejectsTamperingAndMissingData) {
    fixture::TempDir tmp("bundle");
    EXPECT_THROW(read_bundle(tmp / "missing"), IoError);

    write_bundle(fixture::bundle(), tmp / "out");
    {
        auto events = nlohmann::json::parse(slurp(tmp / "out" / "events.json"));
        events[0]["labels"] = nlohmann::json::array({"Emerged"});
        std::ofstream(tmp / "out" / "events.json") << events.dump();
    }
    EXPECT_THROW(read_bundle(tmp / "out"), ValidationError);

    write_bundle(fixture::bundle(), tmp / "out");
    std::ofstream(tmp / "out" / "vocabulary.json") << "{ not json";
    EXPECT_THROW(read_bundle(tmp / "out"), ValidationError);

    write_bundle(fixture::bundle(), tmp / "out");
    fs::remove(tmp / "out" / "graphs" / "kld_forward.json");
    EXPECT_THROW(read_bundle(tmp / "out"), IoError);

    write_bundle(fixture::bundle(), tmp / "out");
    auto manifest = nlohmann::json::parse(slurp(tmp / "out" / "manifest.json"));
    manifest["format_version"] = 99;
    std::ofstream(tmp / "out" / "manifest.json") << manifest.dump();
    EXPECT_THROW(read_bundle(tmp / "out"), ValidationError);
}

TEST(ContentHash, DeterministicAndSensitiveToContent) {
    auto a = fixture::bundle(), b = fixture::bundle();
    EXPECT_EQ(a.content_hash, b.content_hash);
    EXPECT_EQ(a.content_hash.size(), 64u);
    b.models[0].topics[0].term_dist[0] += 1e-9;
    EXPECT_NE(b.compute_content_hash(), a.content_hash);
    auto c = fixture::bundle();
    c.config["hdp"]["seed"] = 2;
    EXPECT_NE(c.compute_content_hash(), a.content_hash);
}

TEST(ContentHash, FollowsSurvivalNotOperatingPoint) {
    const auto base = fixture::bundle(0.5);
    for (auto m : kAllMeasures)
        for (double zeta : {0.0, 0.1, 0.3, 0.45, 0.6, 0.8, 1.0}) {
            auto next = reprune(base, m, zeta);
            EXPECT_EQ(next.config["pruning"][std::string(to_string(m))], zeta);
            EXPECT_EQ(next.graph(m).zeta, zeta);
            const bool same = survival(next.graph(m)) == survival(base.graph(m)) && next.events == base.events;
            EXPECT_EQ(next.content_hash == base.content_hash, same) << to_string(m) << " " << zeta;
            EXPECT_EQ(next.content_hash, next.compute_content_hash());
        }
}

TEST(Reprune, ReclassifiesEvents) {
    const auto base = fixture::bundle(0.5);
    auto all = reprune(base, Measure::bhattacharyya, 0.0);
    EXPECT_EQ(all.graph(Measure::bhattacharyya).surviving_count(), 8u);
    for (const auto& ev : all.events) {
        EXPECT_FALSE(ev.has(EventLabel::Emerged));
        EXPECT_FALSE(ev.has(EventLabel::Vanished));
        EXPECT_TRUE(ev.has(EventLabel::Speciated) || ev.node.epoch == 2);
    }
    EXPECT_THROW(reprune(base, Measure::kld_forward, 1.5), InvalidZeta);
}
