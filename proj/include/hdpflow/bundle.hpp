#pragma once

// AnalysisBundle: everything a completed run produced, persisted as a
// directory
//
//   manifest.json          {format_version, content_hash, config}
//   vocabulary.json        {energy_fraction, terms:[{term, count}]}
//   preprocess.json        {stopwords:[...], lexicon:{surface: lemma}}
//   epochs.json            [{index, start, end, document_ids}]
//   models/epoch-<t>.json  {epoch, topics:[...], log_likelihood_trace}
//   graphs/<measure>.json  {measure, zeta, nodes, edges}
//   events.json            [{epoch, topic_id, labels, evidence}]
//
// The content hash is SHA-256 over the canonical serialization of every
// constituent. Operating points (graph zeta, the config's pruning table) are
// left out so the hash identifies the analysis result: it changes exactly
// when a surviving edge or an event label changes.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "hdpflow/corpus.hpp"
#include "hdpflow/error.hpp"
#include "hdpflow/events.hpp"
#include "hdpflow/hdp.hpp"
#include "hdpflow/preprocess.hpp"
#include "hdpflow/relatedness.hpp"

namespace hdpflow {

inline constexpr int kBundleFormatVersion = 1;

inline std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

inline nlohmann::json slices_to_json(const std::vector<EpochSlice>& slices) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : slices)
        out.push_back({{"index", s.index},
                       {"start", format_date(s.start)},
                       {"end", format_date(s.end)},
                       {"document_ids", s.document_ids}});
    return out;
}

inline std::vector<EpochSlice> slices_from_json(const nlohmann::json& j) {
    std::vector<EpochSlice> out;
    for (const auto& s : j) {
        auto start = parse_date(s.at("start").get<std::string>());
        auto end = parse_date(s.at("end").get<std::string>());
        if (!start || !end) throw ValidationError("bad date in epochs.json");
        out.push_back({s.at("index").get<std::size_t>(), *start, *end, s.at("document_ids").get<std::vector<std::string>>()});
    }
    return out;
}

struct AnalysisBundle {
    Vocabulary vocabulary;
    LemmaLexicon lexicon;
    StopWords stopwords;
    std::vector<EpochSlice> epochs;
    std::vector<EpochModel> models;
    std::array<TemporalGraph, 3> graphs;  // indexed by Measure
    std::vector<TopicEventSet> events;
    nlohmann::json config = nlohmann::json::object();
    std::string content_hash;

    const TemporalGraph& graph(Measure m) const { return graphs[static_cast<std::size_t>(m)]; }
    TemporalGraph& graph(Measure m) { return graphs[static_cast<std::size_t>(m)]; }

    const Topic* topic(const NodeRef& n) const {
        if (n.epoch >= models.size()) return nullptr;
        return models[n.epoch].find(n.id);
    }

    nlohmann::json preprocess_json() const {
        std::vector<std::string> stop(stopwords.begin(), stopwords.end());
        std::sort(stop.begin(), stop.end());
        return {{"stopwords", stop}, {"lexicon", lexicon.entries()}};
    }

    nlohmann::json manifest_json() const {
        return {{"format_version", kBundleFormatVersion}, {"content_hash", content_hash}, {"config", config}};
    }

    /// Every constituent file except the manifest, keyed by relative path.
    std::map<std::string, std::string> serialize_parts() const {
        std::map<std::string, std::string> parts;
        parts["vocabulary.json"] = vocabulary.to_json().dump();
        parts["preprocess.json"] = preprocess_json().dump();
        parts["epochs.json"] = slices_to_json(epochs).dump();
        for (const auto& m : models) parts["models/epoch-" + std::to_string(m.epoch) + ".json"] = m.to_json().dump();
        for (auto m : kAllMeasures) parts["graphs/" + std::string(to_string(m)) + ".json"] = graph(m).to_json().dump();
        parts["events.json"] = events_to_json(events).dump();
        return parts;
    }

    std::string compute_content_hash() const {
        auto parts = serialize_parts();
        for (auto m : kAllMeasures) {
            auto g = graph(m).to_json();
            g.erase("zeta");
            parts["graphs/" + std::string(to_string(m)) + ".json"] = g.dump();
        }
        auto cfg = config;
        if (cfg.is_object()) cfg.erase("pruning");
        parts["config"] = cfg.dump();
        std::string canonical;
        for (const auto& [name, body] : parts) {
            canonical += name;
            canonical += '\0';
            canonical += std::to_string(body.size());
            canonical += '\0';
            canonical += body;
        }
        return sha256_hex(canonical);
    }

    void refresh_hash() { content_hash = compute_content_hash(); }
};

/// Re-prunes one measure's graph at `zeta` and re-derives the event sets.
inline AnalysisBundle reprune(const AnalysisBundle& bundle, Measure measure, double zeta) {
    AnalysisBundle next = bundle;
    next.graph(measure) = prune(bundle.graph(measure), zeta);
    next.events = classify_events(next.graph(Measure::bhattacharyya), next.graph(Measure::kld_forward),
                                  next.graph(Measure::kld_backward));
    if (next.config.is_object()) next.config["pruning"][std::string(to_string(measure))] = zeta;
    next.refresh_hash();
    return next;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& body) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << body << '\n';
    if (!out) throw IoError("short write to " + path.string());
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace detail

/// Writes the bundle into a sibling temporary directory and renames it into
/// place, so `dir` never holds a partial bundle.
inline void write_bundle(const AnalysisBundle& bundle, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    const fs::path target = fs::absolute(dir);
    const fs::path staging = target.parent_path() / (target.filename().string() + ".tmp-" + std::to_string(::getpid()));
    const fs::path retired = target.parent_path() / (target.filename().string() + ".old-" + std::to_string(::getpid()));
    std::error_code ec;
    fs::remove_all(staging, ec);
    try {
        fs::create_directories(staging);
        for (const auto& [name, body] : bundle.serialize_parts()) detail::write_file(staging / name, body);
        detail::write_file(staging / "manifest.json", bundle.manifest_json().dump(2));
        if (fs::exists(target)) fs::rename(target, retired);
        fs::rename(staging, target);
    } catch (const fs::filesystem_error& e) {
        fs::remove_all(staging, ec);
        if (!fs::exists(target) && fs::exists(retired)) fs::rename(retired, target, ec);
        throw IoError(std::string("writing bundle failed: ") + e.what());
    } catch (...) {
        fs::remove_all(staging, ec);
        throw;
    }
    fs::remove_all(retired, ec);
}

inline AnalysisBundle read_bundle(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("not a bundle directory: " + dir.string());
    auto manifest = detail::read_json(dir / "manifest.json");
    if (manifest.value("format_version", 0) != kBundleFormatVersion)
        throw ValidationError("unsupported bundle format version in " + dir.string());

    AnalysisBundle b;
    b.config = manifest.at("config");
    b.vocabulary = Vocabulary::from_json(detail::read_json(dir / "vocabulary.json"));
    auto pre = detail::read_json(dir / "preprocess.json");
    for (const auto& w : pre.at("stopwords")) b.stopwords.insert(w.get<std::string>());
    b.lexicon = LemmaLexicon(pre.at("lexicon").get<std::map<std::string, std::string>>());
    b.epochs = slices_from_json(detail::read_json(dir / "epochs.json"));
    for (std::size_t t = 0; t < b.epochs.size(); ++t)
        b.models.push_back(EpochModel::from_json(detail::read_json(dir / "models" / ("epoch-" + std::to_string(t) + ".json"))));
    for (auto m : kAllMeasures)
        b.graph(m) = TemporalGraph::from_json(detail::read_json(dir / "graphs" / (std::string(to_string(m)) + ".json")));
    b.events = events_from_json(detail::read_json(dir / "events.json"));
    b.content_hash = manifest.at("content_hash").get<std::string>();
    if (b.compute_content_hash() != b.content_hash)
        throw ValidationError("bundle content does not match its manifest hash: " + dir.string());
    return b;
}

}  // namespace hdpflow
