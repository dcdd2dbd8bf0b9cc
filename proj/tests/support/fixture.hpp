#pragma once

// Small hand-built bundle: three epochs, two topics each, six terms.
// Topic 0 is an insulin topic carried through all epochs; topic 1 is a
// liver topic in epochs 0-1 that turns into a cell topic in epoch 2.

#include <filesystem>
#include <string>
#include <unistd.h>

#include "hdpflow/bundle.hpp"

namespace fixture {

inline hdpflow::Date ymd(int y, unsigned m, unsigned d) {
    return hdpflow::Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

inline std::vector<double> normalized(std::vector<double> v) {
    double s = 0;
    for (double x : v) s += x;
    for (auto& x : v) x /= s;
    return v;
}

// vocabulary order: insulin, obesity, liver, glucose, lipid, cell
inline hdpflow::AnalysisBundle bundle(double zeta = 0.5) {
    using namespace hdpflow;
    AnalysisBundle b;
    b.vocabulary = Vocabulary({{"insulin", 40}, {"obesity", 30}, {"liver", 25}, {"glucose", 20}, {"lipid", 10}, {"cell", 5}},
                              0.9);
    b.lexicon = LemmaLexicon({{"insulins", "insulin"}, {"livers", "liver"}});
    b.stopwords = {"the", "of", "and"};
    const std::vector<std::vector<double>> insulin{normalized({50, 20, 2, 25, 2, 1}), normalized({48, 22, 3, 24, 2, 1}),
                                                   normalized({45, 25, 2, 25, 2, 1})};
    const std::vector<std::vector<double>> second{normalized({2, 10, 60, 3, 24, 1}), normalized({3, 12, 55, 4, 25, 1}),
                                                  normalized({2, 3, 5, 5, 10, 75})};
    for (std::size_t t = 0; t < 3; ++t) {
        EpochModel m;
        m.epoch = t;
        m.topics.push_back({t, 0, insulin[t], 0.6, 60 + 10 * t});
        m.topics.push_back({t, 1, second[t], 0.4, 40});
        m.log_likelihood_trace = {-500.0, -400.0, -390.5};
        b.models.push_back(std::move(m));
        EpochSlice s;
        s.index = t;
        s.start = ymd(2000 + static_cast<int>(t), 1, 1);
        s.end = ymd(2001 + static_cast<int>(t), 1, 1);
        for (std::size_t d = 0; d < 2 + t; ++d) s.document_ids.push_back("p" + std::to_string(t) + "-" + std::to_string(d));
        b.epochs.push_back(std::move(s));
    }
    for (auto m : kAllMeasures) b.graph(m) = prune(build_graph(b.models, m), zeta);
    b.events = classify_events(b.graph(Measure::bhattacharyya), b.graph(Measure::kld_forward),
                               b.graph(Measure::kld_backward));
    b.config = {{"hdp", {{"seed", 1}}}, {"pruning", {{"bhattacharyya", zeta}, {"kld_forward", zeta}, {"kld_backward", zeta}}}};
    b.refresh_hash();
    return b;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("hdpflow-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace fixture
