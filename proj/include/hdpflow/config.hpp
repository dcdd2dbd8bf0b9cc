#pragma once

// Run configuration read from TOML. Relative paths are resolved against the
// directory of the config file.

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>
#include <toml.hpp>

#include "hdpflow/corpus.hpp"
#include "hdpflow/error.hpp"
#include "hdpflow/hdp.hpp"
#include "hdpflow/relatedness.hpp"

namespace hdpflow {

inline constexpr std::string_view kDefaultConfigToml = R"(# hdpflow run configuration

[paths]
corpus = "example_corpus.jsonl"
format = "jsonl"            # jsonl | csv
stopwords = "stopwords.txt" # one word per line; omit to use the built-in list
lexicon = "lemmas.tsv"      # surface<TAB>lemma; omit for no lemmatization
output = "bundle"

[epochs]
mode = "fixed_length"       # fixed_length | explicit_boundaries
length_months = 12
# boundaries = ["2000-01-01", "2005-01-01", "2010-01-01"]
min_documents = 20

[preprocess]
energy_fraction = 0.9

[hdp]
gamma = 1.0
alpha = 1.0
eta = 0.01
iterations = 1000
burn_in = 500
seed = 1
min_topic_mass = 0.005
resample_concentrations = false
concentration_shape = 1.0
concentration_rate = 1.0

[pruning]
bhattacharyya = 0.5
kld_forward = 0.5
kld_backward = 0.5
)";

struct RunConfig {
    std::filesystem::path corpus;
    CorpusFormat format = CorpusFormat::jsonl;
    std::optional<std::filesystem::path> stopwords;
    std::optional<std::filesystem::path> lexicon;
    std::filesystem::path output;
    EpochSpec epochs;
    double energy_fraction = 0.9;
    HdpConfig hdp;
    std::array<double, 3> zeta{0.5, 0.5, 0.5};  // indexed by Measure

    // Paths exactly as written in the file, for the bundle's config snapshot.
    std::string corpus_as_written, stopwords_as_written, lexicon_as_written;

    double zeta_for(Measure m) const { return zeta[static_cast<std::size_t>(m)]; }

    static RunConfig parse(std::string_view text, const std::filesystem::path& base_dir);
    static RunConfig load(const std::filesystem::path& path);

    /// Checks ranges and that every input file exists.
    void validate() const {
        auto require_file = [](const std::filesystem::path& p, const char* what) {
            if (!std::filesystem::is_regular_file(p)) throw InvalidConfig(std::string(what) + " not found: " + p.string());
        };
        require_file(corpus, "corpus file");
        if (stopwords) require_file(*stopwords, "stop-word file");
        if (lexicon) require_file(*lexicon, "lexicon file");
        if (output.empty()) throw InvalidConfig("paths.output must be set");
        epochs.validate();
        if (!(energy_fraction > 0.0 && energy_fraction <= 1.0)) throw InvalidConfig("energy_fraction must lie in (0, 1]");
        hdp.validate();
        for (auto m : kAllMeasures)
            if (!(zeta_for(m) >= 0.0 && zeta_for(m) <= 1.0))
                throw InvalidConfig("pruning." + std::string(to_string(m)) + " must lie in [0, 1]");
    }

    /// Everything that determines the analysis, with paths as written. The
    /// output location is not part of it.
    nlohmann::json snapshot() const {
        nlohmann::json ep{{"mode", epochs.mode == EpochSpec::Mode::fixed_length ? "fixed_length" : "explicit_boundaries"},
                          {"min_documents", epochs.min_documents}};
        if (epochs.mode == EpochSpec::Mode::fixed_length) {
            ep["length_months"] = epochs.length_months;
        } else {
            nlohmann::json b = nlohmann::json::array();
            for (const auto& d : epochs.boundaries) b.push_back(format_date(d));
            ep["boundaries"] = b;
        }
        nlohmann::json pruning = nlohmann::json::object();
        for (auto m : kAllMeasures) pruning[std::string(to_string(m))] = zeta_for(m);
        return {{"paths",
                 {{"corpus", corpus_as_written},
                  {"format", format == CorpusFormat::jsonl ? "jsonl" : "csv"},
                  {"stopwords", stopwords_as_written},
                  {"lexicon", lexicon_as_written}}},
                {"epochs", ep},
                {"preprocess", {{"energy_fraction", energy_fraction}}},
                {"hdp", hdp.to_json()},
                {"pruning", pruning}};
    }
};

namespace detail {

inline void reject_unknown_keys(const toml::table& table, std::string_view section, std::set<std::string_view> allowed) {
    for (const auto& [key, value] : table)
        if (!allowed.count(key.str()))
            throw InvalidConfig("unknown key '" + std::string(key.str()) + "' in " + std::string(section));
}

template <typename T>
T toml_value(const toml::table& table, std::string_view section, std::string_view key, T fallback) {
    const toml::node* node = table.get(key);
    if (!node) return fallback;
    auto where = std::string(section) + "." + std::string(key);
    if constexpr (std::is_same_v<T, double>) {
        if (auto v = node->value<double>()) return *v;
        throw InvalidConfig(where + " must be a number");
    } else if constexpr (std::is_same_v<T, bool>) {
        if (auto v = node->as_boolean()) return v->get();
        throw InvalidConfig(where + " must be a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (auto v = node->as_string()) return v->get();
        throw InvalidConfig(where + " must be a string");
    } else {
        auto v = node->as_integer();
        if (!v) throw InvalidConfig(where + " must be an integer");
        if (v->get() < 0) throw InvalidConfig(where + " must not be negative");
        return static_cast<T>(v->get());
    }
}

inline const toml::table& section(const toml::table& root, std::string_view name) {
    static const toml::table empty;
    const toml::node* node = root.get(name);
    if (!node) return empty;
    if (!node->is_table()) throw InvalidConfig("[" + std::string(name) + "] must be a table");
    return *node->as_table();
}

}  // namespace detail

inline RunConfig RunConfig::parse(std::string_view text, const std::filesystem::path& base_dir) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "config line " << e.source().begin.line << ": " << e.description();
        throw InvalidConfig(msg.str());
    }
    detail::reject_unknown_keys(root, "config", {"paths", "epochs", "preprocess", "hdp", "pruning"});

    RunConfig c;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };

    const auto& paths = detail::section(root, "paths");
    detail::reject_unknown_keys(paths, "[paths]", {"corpus", "format", "stopwords", "lexicon", "output"});
    c.corpus_as_written = detail::toml_value<std::string>(paths, "paths", "corpus", "");
    if (c.corpus_as_written.empty()) throw InvalidConfig("paths.corpus must be set");
    c.corpus = resolve(c.corpus_as_written);
    auto default_format = c.corpus.extension() == ".csv" ? "csv" : "jsonl";
    auto fmt = corpus_format_from_string(detail::toml_value<std::string>(paths, "paths", "format", default_format));
    if (!fmt) throw InvalidConfig("paths.format must be jsonl or csv");
    c.format = *fmt;
    c.stopwords_as_written = detail::toml_value<std::string>(paths, "paths", "stopwords", "");
    if (!c.stopwords_as_written.empty()) c.stopwords = resolve(c.stopwords_as_written);
    c.lexicon_as_written = detail::toml_value<std::string>(paths, "paths", "lexicon", "");
    if (!c.lexicon_as_written.empty()) c.lexicon = resolve(c.lexicon_as_written);
    c.output = resolve(detail::toml_value<std::string>(paths, "paths", "output", "bundle"));

    const auto& ep = detail::section(root, "epochs");
    detail::reject_unknown_keys(ep, "[epochs]", {"mode", "length_months", "boundaries", "min_documents"});
    auto mode = detail::toml_value<std::string>(ep, "epochs", "mode", "fixed_length");
    if (mode == "fixed_length") c.epochs.mode = EpochSpec::Mode::fixed_length;
    else if (mode == "explicit_boundaries") c.epochs.mode = EpochSpec::Mode::explicit_boundaries;
    else throw InvalidConfig("epochs.mode must be fixed_length or explicit_boundaries");
    c.epochs.length_months = detail::toml_value<int>(ep, "epochs", "length_months", c.epochs.length_months);
    c.epochs.min_documents = detail::toml_value<std::size_t>(ep, "epochs", "min_documents", c.epochs.min_documents);
    if (const toml::node* b = ep.get("boundaries")) {
        const toml::array* arr = b->as_array();
        if (!arr) throw InvalidConfig("epochs.boundaries must be an array of dates");
        for (const auto& item : *arr) {
            std::optional<Date> d;
            if (auto s = item.as_string()) d = parse_date(s->get());
            else if (auto td = item.as_date()) {
                const auto& v = td->get();
                d = Date{std::chrono::year{v.year}, std::chrono::month{v.month}, std::chrono::day{v.day}};
            }
            if (!d || !d->ok()) throw InvalidConfig("epochs.boundaries holds an invalid date");
            c.epochs.boundaries.push_back(*d);
        }
    }

    const auto& pre = detail::section(root, "preprocess");
    detail::reject_unknown_keys(pre, "[preprocess]", {"energy_fraction"});
    c.energy_fraction = detail::toml_value<double>(pre, "preprocess", "energy_fraction", c.energy_fraction);

    const auto& hdp = detail::section(root, "hdp");
    detail::reject_unknown_keys(hdp, "[hdp]",
                                {"gamma", "alpha", "eta", "iterations", "burn_in", "seed", "min_topic_mass",
                                 "resample_concentrations", "concentration_shape", "concentration_rate"});
    auto& h = c.hdp;
    h.gamma = detail::toml_value<double>(hdp, "hdp", "gamma", h.gamma);
    h.alpha = detail::toml_value<double>(hdp, "hdp", "alpha", h.alpha);
    h.eta = detail::toml_value<double>(hdp, "hdp", "eta", h.eta);
    h.iterations = detail::toml_value<std::size_t>(hdp, "hdp", "iterations", h.iterations);
    h.burn_in = detail::toml_value<std::size_t>(hdp, "hdp", "burn_in", h.burn_in);
    h.seed = detail::toml_value<std::uint64_t>(hdp, "hdp", "seed", h.seed);
    h.min_topic_mass = detail::toml_value<double>(hdp, "hdp", "min_topic_mass", h.min_topic_mass);
    h.resample_concentrations = detail::toml_value<bool>(hdp, "hdp", "resample_concentrations", h.resample_concentrations);
    h.concentration_shape = detail::toml_value<double>(hdp, "hdp", "concentration_shape", h.concentration_shape);
    h.concentration_rate = detail::toml_value<double>(hdp, "hdp", "concentration_rate", h.concentration_rate);

    const auto& pr = detail::section(root, "pruning");
    detail::reject_unknown_keys(pr, "[pruning]", {"bhattacharyya", "kld_forward", "kld_backward"});
    for (auto m : kAllMeasures)
        c.zeta[static_cast<std::size_t>(m)] =
            detail::toml_value<double>(pr, "pruning", to_string(m), c.zeta[static_cast<std::size_t>(m)]);
    return c;
}

inline RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidConfig("config file not found: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), std::filesystem::absolute(path).parent_path());
}

}  // namespace hdpflow
