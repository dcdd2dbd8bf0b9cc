#pragma once

// Corpus ingestion: timestamped documents from jsonl/csv and their
// partition into contiguous epochs.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hdpflow/error.hpp"

namespace hdpflow {

using Date = std::chrono::year_month_day;

inline constexpr Date kEarliestDate{std::chrono::year{1800}, std::chrono::January, std::chrono::day{1}};

inline Date today() {
    return Date{std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now())};
}

/// Parses `YYYY-MM-DD`, optionally followed by a `T...` time part which is ignored.
inline std::optional<Date> parse_date(std::string_view text) {
    if (text.size() > 10 && (text[10] == 'T' || text[10] == ' ')) text = text.substr(0, 10);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    auto number = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        int v = 0;
        auto first = text.data() + pos;
        auto [ptr, ec] = std::from_chars(first, first + len, v);
        if (ec != std::errc{} || ptr != first + len) return std::nullopt;
        return v;
    };
    auto y = number(0, 4), m = number(5, 2), d = number(8, 2);
    if (!y || !m || !d) return std::nullopt;
    Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
              std::chrono::day{static_cast<unsigned>(*d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

inline std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

struct RawDocument {
    std::string id;
    Date timestamp;
    std::optional<std::string> title;
    std::string body;
};

enum class CorpusFormat { jsonl, csv };

inline std::optional<CorpusFormat> corpus_format_from_string(std::string_view s) {
    if (s == "jsonl") return CorpusFormat::jsonl;
    if (s == "csv") return CorpusFormat::csv;
    return std::nullopt;
}

struct EpochSpec {
    enum class Mode { fixed_length, explicit_boundaries };

    Mode mode = Mode::fixed_length;
    int length_months = 12;
    std::vector<Date> boundaries;
    std::size_t min_documents = 20;

    void validate() const {
        if (min_documents < 1) throw InvalidSpec("min_documents must be >= 1");
        if (mode == Mode::fixed_length) {
            if (length_months < 1) throw InvalidSpec("epoch length must be >= 1 month");
        } else {
            if (boundaries.size() < 2) throw InvalidSpec("explicit mode needs at least two boundaries");
            for (std::size_t i = 1; i < boundaries.size(); ++i)
                if (!(boundaries[i - 1] < boundaries[i])) throw InvalidSpec("boundaries must be strictly ascending");
        }
    }
};

/// A contiguous time bucket `[start, end)` and the documents it owns.
struct EpochSlice {
    std::size_t index = 0;
    Date start;
    Date end;
    std::vector<std::string> document_ids;

    friend bool operator==(const EpochSlice&, const EpochSlice&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline RawDocument make_document(std::size_t line, std::string id, std::string_view timestamp,
                                 std::optional<std::string> title, std::string body) {
    if (id.empty()) throw ParseError(line, "empty id");
    auto date = parse_date(timestamp);
    if (!date) throw ParseError(line, "unparseable timestamp '" + std::string(timestamp) + "'");
    if (*date < kEarliestDate || *date > today())
        throw ParseError(line, "timestamp out of range: " + std::string(timestamp));
    if (trim(body).empty()) throw ParseError(line, "empty body");
    return RawDocument{std::move(id), *date, std::move(title), std::move(body)};
}

inline std::vector<RawDocument> parse_jsonl(std::istream& in) {
    std::vector<RawDocument> docs;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (trim(text).empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line, std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object()) throw ParseError(line, "record is not an object");
        auto string_field = [&](const char* key, bool required) -> std::optional<std::string> {
            auto it = obj.find(key);
            if (it == obj.end() || it->is_null()) {
                if (required) throw ParseError(line, std::string("missing field '") + key + "'");
                return std::nullopt;
            }
            if (!it->is_string()) throw ParseError(line, std::string("field '") + key + "' is not a string");
            return it->get<std::string>();
        };
        auto id = string_field("id", true);
        auto ts = string_field("timestamp", true);
        auto title = string_field("title", false);
        auto body = string_field("body", true);
        docs.push_back(make_document(line, std::move(*id), *ts, std::move(title), std::move(*body)));
    }
    return docs;
}

struct CsvRecord {
    std::size_t line;
    std::vector<std::string> fields;
};

/// RFC-4180 reader; quoted fields may span lines. `line` is where each record starts.
inline std::vector<CsvRecord> read_csv(std::istream& in) {
    std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    std::vector<CsvRecord> records;
    std::size_t line = 1;
    std::size_t i = 0;
    const std::size_t n = data.size();
    while (i < n) {
        CsvRecord rec{line, {}};
        std::string field;
        bool done = false;
        while (!done) {
            field.clear();
            if (i < n && data[i] == '"') {
                ++i;
                for (;;) {
                    if (i >= n) throw ParseError(rec.line, "unterminated quoted field");
                    char c = data[i++];
                    if (c == '"') {
                        if (i < n && data[i] == '"') {
                            field += '"';
                            ++i;
                        } else {
                            break;
                        }
                    } else {
                        if (c == '\n') ++line;
                        field += c;
                    }
                }
                if (i < n && data[i] != ',' && data[i] != '\n' && data[i] != '\r')
                    throw ParseError(rec.line, "unexpected character after closing quote");
            } else {
                while (i < n && data[i] != ',' && data[i] != '\n' && data[i] != '\r') {
                    if (data[i] == '"') throw ParseError(rec.line, "quote inside unquoted field");
                    field += data[i++];
                }
            }
            rec.fields.push_back(field);
            if (i >= n) {
                done = true;
            } else if (data[i] == ',') {
                ++i;
            } else {
                if (data[i] == '\r') ++i;
                if (i < n && data[i] == '\n') ++i;
                ++line;
                done = true;
            }
        }
        if (!(rec.fields.size() == 1 && rec.fields[0].empty())) records.push_back(std::move(rec));
    }
    return records;
}

inline std::vector<RawDocument> parse_csv(std::istream& in) {
    auto records = read_csv(in);
    if (records.empty()) return {};
    const std::vector<std::string> header{"id", "timestamp", "title", "body"};
    if (records.front().fields != header) throw ParseError(records.front().line, "header must be id,timestamp,title,body");
    std::vector<RawDocument> docs;
    for (std::size_t r = 1; r < records.size(); ++r) {
        auto& rec = records[r];
        if (rec.fields.size() != 4)
            throw ParseError(rec.line, "expected 4 fields, got " + std::to_string(rec.fields.size()));
        std::optional<std::string> title;
        if (!rec.fields[2].empty()) title = rec.fields[2];
        docs.push_back(make_document(rec.line, std::move(rec.fields[0]), rec.fields[1], std::move(title),
                                     std::move(rec.fields[3])));
    }
    return docs;
}

inline bool document_order(const RawDocument& a, const RawDocument& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.id < b.id;
}

inline int month_ordinal(const Date& d) {
    return static_cast<int>(d.year()) * 12 + static_cast<int>(static_cast<unsigned>(d.month())) - 1;
}

inline Date month_start(int ordinal) {
    int y = ordinal >= 0 ? ordinal / 12 : (ordinal - 11) / 12;
    int m = ordinal - y * 12;
    return Date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m + 1)}, std::chrono::day{1}};
}

}  // namespace detail

/// Parses and validates a corpus held in memory. Sorted by (timestamp, id).
inline std::vector<RawDocument> parse_corpus(std::istream& in, CorpusFormat format) {
    auto docs = format == CorpusFormat::jsonl ? detail::parse_jsonl(in) : detail::parse_csv(in);
    std::set<std::string> seen;
    for (const auto& d : docs)
        if (!seen.insert(d.id).second) throw DuplicateId(d.id);
    std::sort(docs.begin(), docs.end(), detail::document_order);
    return docs;
}

inline std::vector<RawDocument> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read corpus file: " + path.string());
    return parse_corpus(in, format);
}

/// Buckets `docs` (sorted by (timestamp, id)) into epochs, merging slices
/// holding fewer than `spec.min_documents` documents into their predecessor.
inline std::vector<EpochSlice> partition_epochs(const std::vector<RawDocument>& docs, const EpochSpec& spec) {
    if (docs.empty()) throw EmptyCorpus("corpus is empty");
    spec.validate();
    if (!std::is_sorted(docs.begin(), docs.end(), detail::document_order))
        throw InvalidSpec("documents must be sorted by (timestamp, id)");

    std::vector<EpochSlice> raw;
    if (spec.mode == EpochSpec::Mode::fixed_length) {
        const int len = spec.length_months;
        auto bucket_of = [&](const Date& d) {
            int m = detail::month_ordinal(d);
            return (m >= 0 ? m / len : (m - len + 1) / len);
        };
        const int first = bucket_of(docs.front().timestamp);
        const int last = bucket_of(docs.back().timestamp);
        for (int b = first; b <= last; ++b)
            raw.push_back(EpochSlice{0, detail::month_start(b * len), detail::month_start((b + 1) * len), {}});
        for (const auto& d : docs) raw[static_cast<std::size_t>(bucket_of(d.timestamp) - first)].document_ids.push_back(d.id);
    } else {
        const auto& bounds = spec.boundaries;
        auto bucket_of = [&](const Date& d) -> std::size_t {
            if (d < bounds.front() || !(d < bounds.back()))
                throw InvalidSpec("document dated " + format_date(d) + " lies outside the epoch boundaries");
            auto it = std::upper_bound(bounds.begin(), bounds.end(), d);
            return static_cast<std::size_t>(it - bounds.begin()) - 1;
        };
        const std::size_t first = bucket_of(docs.front().timestamp);
        const std::size_t last = bucket_of(docs.back().timestamp);
        for (std::size_t b = first; b <= last; ++b) raw.push_back(EpochSlice{0, bounds[b], bounds[b + 1], {}});
        for (const auto& d : docs) raw[bucket_of(d.timestamp) - first].document_ids.push_back(d.id);
    }

    auto absorb = [](EpochSlice& into, EpochSlice&& from) {
        if (from.start < into.start) into.start = from.start;
        if (into.end < from.end) into.end = from.end;
        into.document_ids.insert(into.document_ids.end(), from.document_ids.begin(), from.document_ids.end());
    };

    std::vector<EpochSlice> out;
    std::optional<EpochSlice> pending;  // underfilled leading slices, merged forward
    for (auto& s : raw) {
        if (pending) {
            EpochSlice merged = std::move(*pending);
            pending.reset();
            absorb(merged, std::move(s));
            s = std::move(merged);
        }
        if (s.document_ids.size() >= spec.min_documents) {
            out.push_back(std::move(s));
        } else if (!out.empty()) {
            absorb(out.back(), std::move(s));
        } else {
            pending = std::move(s);
        }
    }
    if (pending) {
        if (out.empty())
            out.push_back(std::move(*pending));
        else
            absorb(out.back(), std::move(*pending));
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].index = i;
    return out;
}

}  // namespace hdpflow
