#pragma once

// Text normalization: tokenization, soft lemmatization, stop-word removal,
// energy-rule vocabulary selection and bag-of-words vectorization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <boost/locale.hpp>
#include <json.hpp>

#include "hdpflow/error.hpp"

namespace hdpflow {

using StopWords = std::unordered_set<std::string>;

namespace detail {

inline const std::locale& utf8_locale() {
    static const std::locale loc = [] {
        boost::locale::generator gen;
        return gen("en_US.UTF-8");
    }();
    return loc;
}

inline bool is_ascii(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

}  // namespace detail

/// Lowercased alphabetic tokens. After NFKC folding every character outside
/// [a-z] separates tokens; tokens shorter than two characters are dropped.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::string folded;
    if (detail::is_ascii(text)) {
        folded.assign(text);
    } else {
        folded = boost::locale::normalize(std::string(text), boost::locale::norm_nfkc, detail::utf8_locale());
    }
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (current.size() >= 2) tokens.push_back(current);
        current.clear();
    };
    for (char raw : folded) {
        char c = raw;
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (c >= 'a' && c <= 'z')
            current += c;
        else
            flush();
    }
    flush();
    return tokens;
}

/// Surface form -> lemma table. Every lemma is a fixed point of the mapping.
class LemmaLexicon {
public:
    LemmaLexicon() = default;

    explicit LemmaLexicon(std::map<std::string, std::string> entries) : table_(std::move(entries)) {
        for (const auto& [surface, lemma] : table_) {
            if (!is_lower(surface)) throw ValidationError("lexicon key is not lowercase: " + surface);
            auto it = table_.find(lemma);
            if (it != table_.end() && it->second != lemma)
                throw ValidationError("lexicon lemma '" + lemma + "' is not a fixed point (maps to '" + it->second + "')");
        }
    }

    const std::string& lemmatize(const std::string& token) const {
        auto it = table_.find(token);
        return it == table_.end() ? token : it->second;
    }

    const std::map<std::string, std::string>& entries() const noexcept { return table_; }
    std::size_t size() const noexcept { return table_.size(); }

private:
    static bool is_lower(std::string_view s) {
        return std::none_of(s.begin(), s.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
    }

    std::map<std::string, std::string> table_;
};

/// Soft lemmatization: lexicon lookup with identity fallback, never stemming.
inline std::string lemmatize(const std::string& token, const LemmaLexicon& lexicon) {
    return lexicon.lemmatize(token);
}

inline std::vector<std::string> lemmatize_all(const std::vector<std::string>& tokens, const LemmaLexicon& lexicon) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(lexicon.lemmatize(t));
    return out;
}

/// Reads a two-column `surface<TAB>lemma` file. Blank lines and `#` comments are skipped.
inline LemmaLexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read lemma lexicon: " + path.string());
    std::map<std::string, std::string> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
            throw ParseError(lineno, "expected exactly two tab-separated columns");
        auto surface = line.substr(0, tab), lemma = line.substr(tab + 1);
        if (surface.empty() || lemma.empty()) throw ParseError(lineno, "empty column");
        entries[surface] = lemma;
    }
    try {
        return LemmaLexicon(std::move(entries));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

/// One lowercase word per line; `#` starts a comment.
inline StopWords load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read stop-word file: " + path.string());
    StopWords words;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        std::string w = line.substr(b, e - b + 1);
        for (auto& c : w)
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        words.insert(std::move(w));
    }
    return words;
}

struct VocabularyTerm {
    std::string term;
    std::size_t count = 0;

    friend bool operator==(const VocabularyTerm&, const VocabularyTerm&) = default;
};

/// Ordered term set: descending corpus count, ties lexicographic.
class Vocabulary {
public:
    Vocabulary() = default;

    Vocabulary(std::vector<VocabularyTerm> terms, double energy_fraction)
        : terms_(std::move(terms)), energy_fraction_(energy_fraction) {
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            if (!index_.emplace(terms_[i].term, i).second)
                throw ValidationError("duplicate vocabulary term: " + terms_[i].term);
        }
    }

    std::size_t size() const noexcept { return terms_.size(); }
    const std::vector<VocabularyTerm>& terms() const noexcept { return terms_; }
    const std::string& term(std::size_t i) const { return terms_.at(i).term; }
    double energy_fraction() const noexcept { return energy_fraction_; }

    std::optional<std::size_t> index_of(const std::string& term) const {
        auto it = index_.find(term);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    nlohmann::json to_json() const {
        nlohmann::json terms = nlohmann::json::array();
        for (const auto& t : terms_) terms.push_back({{"term", t.term}, {"count", t.count}});
        return {{"energy_fraction", energy_fraction_}, {"terms", std::move(terms)}};
    }

    static Vocabulary from_json(const nlohmann::json& j) {
        std::vector<VocabularyTerm> terms;
        for (const auto& t : j.at("terms")) terms.push_back({t.at("term").get<std::string>(), t.at("count").get<std::size_t>()});
        return Vocabulary(std::move(terms), j.at("energy_fraction").get<double>());
    }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.terms_ == b.terms_ && a.energy_fraction_ == b.energy_fraction_;
    }

private:
    std::vector<VocabularyTerm> terms_;
    std::unordered_map<std::string, std::size_t> index_;
    double energy_fraction_ = 1.0;
};

/// Keeps the shortest most-frequent prefix of terms whose cumulative count
/// covers `energy_fraction` of all non-stop-word tokens in `docs`.
inline Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& docs, const StopWords& stopwords,
                                   double energy_fraction) {
    if (!(energy_fraction > 0.0 && energy_fraction <= 1.0))
        throw ValidationError("energy_fraction must lie in (0, 1]");
    if (docs.empty()) throw EmptyInput("no documents to build a vocabulary from");

    std::unordered_map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (const auto& doc : docs)
        for (const auto& tok : doc) {
            if (stopwords.count(tok)) continue;
            ++counts[tok];
            ++total;
        }
    if (total == 0) throw EmptyAfterFiltering("every token was a stop-word");

    std::vector<VocabularyTerm> ranked;
    ranked.reserve(counts.size());
    for (auto& [term, count] : counts) ranked.push_back({term, count});
    std::sort(ranked.begin(), ranked.end(), [](const VocabularyTerm& a, const VocabularyTerm& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.term < b.term;
    });

    // Relative slack absorbs rounding in energy_fraction * total (0.9 * 20 etc.).
    const double target = energy_fraction * static_cast<double>(total) * (1.0 - 1e-12);
    std::size_t cumulative = 0, keep = 0;
    while (keep < ranked.size() && static_cast<double>(cumulative) < target) cumulative += ranked[keep++].count;
    ranked.resize(keep);
    return Vocabulary(std::move(ranked), energy_fraction);
}

struct BagOfWords {
    std::string doc_id;
    std::map<std::size_t, std::size_t> counts;  // term index -> positive count
    std::size_t total = 0;

    bool empty() const noexcept { return total == 0; }
};

/// Lemmatizes `tokens`, drops stop-words and out-of-vocabulary lemmas, and counts the rest.
inline BagOfWords vectorize(const std::vector<std::string>& tokens, const LemmaLexicon& lexicon,
                            const StopWords& stopwords, const Vocabulary& vocab, std::string doc_id = {}) {
    BagOfWords bag{std::move(doc_id), {}, 0};
    for (const auto& tok : tokens) {
        const auto& lemma = lexicon.lemmatize(tok);
        if (stopwords.count(lemma)) continue;
        if (auto idx = vocab.index_of(lemma)) {
            ++bag.counts[*idx];
            ++bag.total;
        }
    }
    return bag;
}

}  // namespace hdpflow
