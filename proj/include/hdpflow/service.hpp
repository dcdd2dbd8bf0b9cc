#pragma once

// JSON-over-HTTP view of one analysis bundle. ApiService does the routing and
// rendering and knows nothing about sockets; HttpServer binds it to
// cpp-httplib under /api/v1.
//
// Revisions are immutable. A reprune builds the next revision off to the
// side and swaps the pointer; requests already holding the old revision
// finish against it.

#include <charconv>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "hdpflow/bundle.hpp"
#include "hdpflow/error.hpp"
#include "hdpflow/events.hpp"
#include "hdpflow/queries.hpp"
#include "hdpflow/relatedness.hpp"

namespace hdpflow {

inline constexpr std::string_view kApiPrefix = "/api/v1";

struct ApiResponse {
    int status = 200;
    std::string body;
};

struct ApiError {
    int status;
    std::string code;  // unknown_topic | bad_param | empty_query | no_vocab_match | internal_error
    std::string message;

    ApiResponse render() const {
        return {status, nlohmann::json{{"error", {{"code", code}, {"message", message}}}}.dump()};
    }
};

using QueryParams = std::map<std::string, std::string>;

class ApiService {
public:
    explicit ApiService(AnalysisBundle bundle)
        : current_(std::make_shared<const AnalysisBundle>(std::move(bundle))) {}

    std::shared_ptr<const AnalysisBundle> revision() const {
        std::lock_guard lock(swap_mutex_);
        return current_;
    }

    /// Re-prunes one graph and publishes the result as the current revision.
    std::shared_ptr<const AnalysisBundle> reprune(Measure measure, double zeta) {
        std::lock_guard writer(write_mutex_);
        auto next = std::make_shared<const AnalysisBundle>(hdpflow::reprune(*revision(), measure, zeta));
        std::lock_guard lock(swap_mutex_);
        current_ = next;
        return next;
    }

    /// `path` includes the /api/v1 prefix; /health is also answered bare.
    ApiResponse handle(std::string_view method, std::string_view path, const QueryParams& params = {},
                       std::string_view body = {}) {
        try {
            return route(method, path, params, body);
        } catch (const ApiError& e) {
            return e.render();
        } catch (const UnknownNode& e) {
            return ApiError{404, "unknown_topic", e.what()}.render();
        } catch (const EmptyQuery& e) {
            return ApiError{400, "empty_query", e.what()}.render();
        } catch (const NoVocabularyMatch& e) {
            return ApiError{400, "no_vocab_match", e.what()}.render();
        } catch (const ValidationError& e) {
            return ApiError{400, "bad_param", e.what()}.render();
        } catch (const std::exception& e) {
            return ApiError{500, "internal_error", e.what()}.render();
        }
    }

private:
    static std::vector<std::string_view> split(std::string_view path) {
        std::vector<std::string_view> parts;
        while (!path.empty()) {
            auto slash = path.find('/');
            auto part = path.substr(0, slash);
            if (!part.empty()) parts.push_back(part);
            if (slash == std::string_view::npos) break;
            path.remove_prefix(slash + 1);
        }
        return parts;
    }

    static std::size_t parse_index(std::string_view s, std::string_view what) {
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
            throw ApiError{400, "bad_param", std::string(what) + " must be a non-negative integer"};
        return v;
    }

    static std::optional<std::string> param(const QueryParams& params, const std::string& key) {
        auto it = params.find(key);
        if (it == params.end()) return std::nullopt;
        return it->second;
    }

    static Measure measure_param(const QueryParams& params) {
        auto m = param(params, "measure");
        if (!m) return Measure::bhattacharyya;
        auto measure = measure_from_string(*m);
        if (!measure) throw ApiError{400, "bad_param", "unknown measure '" + *m + "'"};
        return *measure;
    }

    static const Topic& topic_or_404(const AnalysisBundle& b, const NodeRef& n) {
        const Topic* t = b.topic(n);
        if (!t)
            throw ApiError{404, "unknown_topic",
                           "no topic " + std::to_string(n.id) + " in epoch " + std::to_string(n.epoch)};
        return *t;
    }

    static nlohmann::json cloud_json(const WordCloud& cloud) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& [term, weight] : cloud) out.push_back({{"term", term}, {"weight", weight}});
        return out;
    }

    static ApiResponse ok(nlohmann::json body) { return {200, body.dump()}; }

    ApiResponse route(std::string_view method, std::string_view path, const QueryParams& params, std::string_view body) {
        if (path.substr(0, kApiPrefix.size()) == kApiPrefix) path.remove_prefix(kApiPrefix.size());
        else if (path != "/health") throw ApiError{404, "bad_param", "no such endpoint: " + std::string(path)};
        const auto parts = split(path);
        const auto bundle = revision();
        const AnalysisBundle& b = *bundle;
        const std::string& rev = b.content_hash;

        if (method == "POST") {
            if (parts.size() == 1 && parts[0] == "reprune") return post_reprune(body);
            throw ApiError{404, "bad_param", "no such endpoint: POST " + std::string(path)};
        }
        if (method != "GET") throw ApiError{405, "bad_param", "method not allowed"};
        if (parts.empty()) throw ApiError{404, "bad_param", "no such endpoint"};

        const auto& head = parts[0];
        if (head == "health" && parts.size() == 1) return ok({{"status", "ok"}, {"bundle_hash", rev}});

        if (head == "epochs" && parts.size() == 1) {
            nlohmann::json epochs = nlohmann::json::array();
            for (const auto& s : b.epochs)
                epochs.push_back({{"index", s.index},
                                  {"start", format_date(s.start)},
                                  {"end", format_date(s.end)},
                                  {"document_count", s.document_ids.size()},
                                  {"topic_count", s.index < b.models.size() ? b.models[s.index].topics.size() : 0}});
            return ok({{"revision", rev}, {"epochs", epochs}});
        }

        if (head == "epochs" && parts.size() == 3 && parts[2] == "topics") {
            const auto t = parse_index(parts[1], "epoch");
            if (t >= b.models.size()) throw ApiError{404, "unknown_topic", "no epoch " + std::to_string(t)};
            nlohmann::json topics = nlohmann::json::array();
            for (const auto& topic : b.models[t].topics)
                topics.push_back({{"id", topic.id},
                                  {"mass", topic.mass},
                                  {"token_count", topic.token_count},
                                  {"top_terms", cloud_json(word_cloud(b.vocabulary, topic, std::min<std::size_t>(10, b.vocabulary.size())))}});
            return ok({{"revision", rev}, {"epoch", t}, {"topics", topics}});
        }

        if (head == "topics" && parts.size() >= 3) {
            const NodeRef node{parse_index(parts[1], "epoch"), parse_index(parts[2], "topic id")};
            const Topic& topic = topic_or_404(b, node);
            if (parts.size() == 3) return get_topic(b, node, topic);
            if (parts.size() == 4 && parts[3] == "wordcloud") {
                std::size_t n = std::min<std::size_t>(20, b.vocabulary.size());
                if (auto v = param(params, "n")) n = parse_index(*v, "n");
                if (n < 1 || n > b.vocabulary.size())
                    throw ApiError{400, "bad_param", "n must lie in [1, " + std::to_string(b.vocabulary.size()) + "]"};
                return ok({{"revision", rev}, {"node", to_json(node)}, {"terms", cloud_json(word_cloud(b, node, n))}});
            }
            if (parts.size() == 4 && parts[3] == "trace") {
                auto direction = TraceDirection::backward;
                if (auto d = param(params, "direction")) {
                    auto parsed = direction_from_string(*d);
                    if (!parsed) throw ApiError{400, "bad_param", "direction must be backward or forward"};
                    direction = *parsed;
                }
                const Measure measure = measure_param(params);
                std::size_t depth = b.epochs.size();
                if (auto d = param(params, "depth")) depth = parse_index(*d, "depth");
                auto lineage = trace(b, node, direction, measure, depth);
                return ok({{"revision", rev},
                           {"measure", std::string(to_string(measure))},
                           {"direction", std::string(to_string(direction))},
                           {"depth", depth},
                           {"lineage", to_json(lineage)}});
            }
        }

        if (head == "graph" && parts.size() == 1) {
            const Measure measure = measure_param(params);
            bool only_surviving = false;
            if (auto s = param(params, "surviving")) {
                if (*s == "true" || *s == "1") only_surviving = true;
                else if (*s != "false" && *s != "0") throw ApiError{400, "bad_param", "surviving must be true or false"};
            }
            const auto& g = b.graph(measure);
            auto j = g.to_json();
            if (only_surviving) {
                nlohmann::json kept = nlohmann::json::array();
                for (auto& e : j["edges"])
                    if (e["surviving"].get<bool>()) kept.push_back(e);
                j["edges"] = kept;
            }
            j["revision"] = rev;
            j["total_edge_count"] = g.edges.size();
            j["surviving_edge_count"] = g.surviving_count();
            return ok(j);
        }

        if (head == "events" && parts.size() == 1) return ok({{"revision", rev}, {"events", events_to_json(b.events)}});
        if (head == "stats" && parts.size() == 1) return ok({{"revision", rev}, {"stats", to_json(corpus_stats(b))}});

        if (head == "search" && parts.size() == 1) {
            auto q = param(params, "q").value_or("");
            std::size_t limit = 10;
            if (auto l = param(params, "limit")) limit = parse_index(*l, "limit");
            if (limit < 1) throw ApiError{400, "bad_param", "limit must be at least 1"};
            nlohmann::json hits = nlohmann::json::array();
            for (const auto& h : search_topics(b, q, limit))
                hits.push_back({{"epoch", h.node.epoch}, {"id", h.node.id}, {"score", h.score}, {"matched_terms", h.matched_terms}});
            return ok({{"revision", rev}, {"query", q}, {"hits", hits}});
        }

        throw ApiError{404, "bad_param", "no such endpoint: " + std::string(path)};
    }

    ApiResponse get_topic(const AnalysisBundle& b, const NodeRef& node, const Topic& topic) {
        nlohmann::json events = nlohmann::json::array();
        for (const auto& ev : b.events)
            if (ev.node == node) events = events_to_json({ev}).at(0);
        const std::size_t top = std::min<std::size_t>(10, b.vocabulary.size());
        return ok({{"revision", b.content_hash},
                   {"epoch", node.epoch},
                   {"id", node.id},
                   {"mass", topic.mass},
                   {"token_count", topic.token_count},
                   {"top_terms", cloud_json(word_cloud(b.vocabulary, topic, top))},
                   {"events", events}});
    }

    ApiResponse post_reprune(std::string_view body) {
        nlohmann::json req;
        try {
            req = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception&) {
            throw ApiError{400, "bad_param", "request body must be JSON {measure, zeta}"};
        }
        if (!req.is_object() || !req.contains("measure") || !req.contains("zeta") || !req["measure"].is_string() ||
            !req["zeta"].is_number())
            throw ApiError{400, "bad_param", "request body must be JSON {measure, zeta}"};
        auto measure = measure_from_string(req["measure"].get<std::string>());
        if (!measure) throw ApiError{400, "bad_param", "unknown measure"};
        const double zeta = req["zeta"].get<double>();
        if (!(zeta >= 0.0 && zeta <= 1.0)) throw ApiError{400, "bad_param", "zeta must lie in [0, 1]"};
        auto next = reprune(*measure, zeta);
        return ok({{"revision_hash", next->content_hash},
                   {"measure", std::string(to_string(*measure))},
                   {"zeta", zeta},
                   {"surviving_edge_count", next->graph(*measure).surviving_count()},
                   {"total_edge_count", next->graph(*measure).edges.size()}});
    }

    mutable std::mutex swap_mutex_;
    std::mutex write_mutex_;
    std::shared_ptr<const AnalysisBundle> current_;
};

/// cpp-httplib front end for an ApiService.
class HttpServer {
public:
    explicit HttpServer(ApiService& service, std::string allowed_origin = "*") : service_(service) {
        // SO_REUSEADDR only: with httplib's default SO_REUSEPORT a second server
        // could silently share a port that is already taken.
        server_.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });
        server_.set_default_headers({{"Access-Control-Allow-Origin", allowed_origin},
                                     {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                     {"Access-Control-Allow-Headers", "Content-Type"}});
        auto forward = [this](const char* method) {
            return [this, method](const httplib::Request& req, httplib::Response& res) {
                QueryParams params;
                for (const auto& [k, v] : req.params) params.emplace(k, v);
                auto out = service_.handle(method, req.path, params, req.body);
                res.status = out.status;
                res.set_content(out.body, "application/json; charset=utf-8");
            };
        };
        server_.Get(".*", forward("GET"));
        server_.Post(".*", forward("POST"));
        server_.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }

    /// Binds without serving; false if the port is unavailable.
    bool bind(const std::string& host, int port) { return server_.bind_to_port(host.c_str(), port); }
    int bind_any(const std::string& host) { return server_.bind_to_any_port(host.c_str()); }

    /// Blocks until stop() is called.
    bool serve() { return server_.listen_after_bind(); }
    void stop() { server_.stop(); }
    void wait_until_ready() const { server_.wait_until_ready(); }

private:
    ApiService& service_;
    httplib::Server server_;
};

}  // namespace hdpflow
