// hdpflow command-line driver: run, export, serve, reprune.
//
// Exit codes: 0 success, 1 invalid input (config, corpus, bundle, flags),
// 2 runtime failure.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <stop_token>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "hdpflow/hdpflow.hpp"

namespace {

using namespace hdpflow;

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

void progress(const std::string& line) { std::cerr << "hdpflow: " << line << '\n'; }

Measure parse_measure(const std::string& s) {
    auto m = measure_from_string(s);
    if (!m) throw ValidationError("unknown measure '" + s + "' (bhattacharyya, kld_forward, kld_backward)");
    return *m;
}

/// Blocks SIGINT/SIGTERM in every thread and hands them to `on_signal` on a
/// dedicated waiter thread.
class SignalWaiter {
public:
    template <typename F>
    explicit SignalWaiter(F on_signal) {
        sigemptyset(&set_);
        sigaddset(&set_, SIGINT);
        sigaddset(&set_, SIGTERM);
        sigaddset(&set_, SIGUSR1);
        pthread_sigmask(SIG_BLOCK, &set_, nullptr);
        thread_ = std::thread([this, on_signal] {
            int sig = 0;
            sigwait(&set_, &sig);
            done_ = true;
            if (sig != SIGUSR1) on_signal();
        });
    }

    ~SignalWaiter() {
        if (!done_) pthread_kill(thread_.native_handle(), SIGUSR1);
        thread_.join();
        pthread_sigmask(SIG_UNBLOCK, &set_, nullptr);
    }

private:
    sigset_t set_{};
    std::atomic<bool> done_{false};
    std::thread thread_;
};

int cmd_run(const std::string& config_path, std::size_t jobs, std::optional<std::uint64_t> seed) {
    RunConfig config = RunConfig::load(config_path);
    if (seed) config.hdp.seed = *seed;
    config.validate();

    std::stop_source stop;
    AnalysisBundle bundle;
    {
        SignalWaiter waiter([&] {
            progress("interrupted; stopping after the current sweep");
            stop.request_stop();
        });
        bundle = run_pipeline(config, jobs, progress, stop.get_token());
    }
    try {
        write_bundle(bundle, config.output);
    } catch (const IoError& e) {
        std::cerr << "hdpflow: " << e.what() << '\n';
        return kExitRuntime;
    }
    progress("wrote " + config.output.string());
    std::cout << bundle.content_hash << '\n';
    return 0;
}

void write_output(const std::string& out, const std::function<void(std::ostream&)>& write) {
    if (out == "-") {
        write(std::cout);
        return;
    }
    std::ofstream file(out, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write " + out);
    write(file);
    file.flush();
    if (!file) throw IoError("short write to " + out);
}

int cmd_export(const std::string& bundle_dir, const std::string& what, const std::string& out,
               std::optional<double> zeta, std::optional<std::string> measure_name) {
    AnalysisBundle bundle = read_bundle(bundle_dir);
    if (zeta) {
        if (!(*zeta >= 0.0 && *zeta <= 1.0)) throw InvalidZeta("zeta must lie in [0, 1]");
        for (auto m : kAllMeasures) bundle.graph(m) = prune(bundle.graph(m), *zeta);
        bundle.events = classify_events(bundle.graph(Measure::bhattacharyya), bundle.graph(Measure::kld_forward),
                                        bundle.graph(Measure::kld_backward));
    }
    if (what == "scatter") {
        write_output(out, [&](std::ostream& os) {
            write_scatter_csv(os, bundle.graph(Measure::bhattacharyya), bundle.graph(Measure::kld_forward),
                              bundle.graph(Measure::kld_backward));
        });
    } else if (what == "overlap") {
        const Measure kld = measure_name ? parse_measure(*measure_name) : Measure::kld_forward;
        if (kld == Measure::bhattacharyya) throw ValidationError("overlap compares the BHD graph with a KLD graph");
        auto report = overlap_statistics(bundle.graph(Measure::bhattacharyya), bundle.graph(kld));
        write_output(out, [&](std::ostream& os) { write_overlap_csv(os, report); });
    } else if (what == "graph") {
        const Measure m = measure_name ? parse_measure(*measure_name) : Measure::bhattacharyya;
        write_output(out, [&](std::ostream& os) { os << bundle.graph(m).to_json().dump(2) << '\n'; });
    } else if (what == "events") {
        write_output(out, [&](std::ostream& os) { os << events_to_json(bundle.events).dump(2) << '\n'; });
    } else {
        throw ValidationError("--what must be one of scatter, overlap, graph, events");
    }
    return 0;
}

int cmd_serve(const std::string& bundle_dir, int port, const std::string& host) {
    ApiService service(read_bundle(bundle_dir));
    HttpServer server(service);
    if (!server.bind(host, port)) {
        std::cerr << "hdpflow: cannot listen on " << host << ':' << port << '\n';
        return kExitValidation;
    }
    SignalWaiter waiter([&] { server.stop(); });
    progress("serving " + bundle_dir + " on http://" + host + ":" + std::to_string(port) + std::string(kApiPrefix));
    server.serve();
    progress("shut down");
    return 0;
}

int cmd_reprune(const std::string& bundle_dir, const std::string& measure_name, double zeta) {
    const Measure measure = parse_measure(measure_name);
    AnalysisBundle next = reprune(read_bundle(bundle_dir), measure, zeta);
    try {
        write_bundle(next, bundle_dir);
    } catch (const IoError& e) {
        std::cerr << "hdpflow: " << e.what() << '\n';
        return kExitRuntime;
    }
    std::cout << next.content_hash << ' ' << next.graph(measure).surviving_count() << '/'
              << next.graph(measure).edges.size() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal topic analysis with per-epoch HDP models"};
    app.require_subcommand(0, 1);
    bool print_default = false;
    app.add_flag("--print-default-config", print_default, "Print the default TOML run configuration");

    auto* run = app.add_subcommand("run", "Run the full pipeline and write a bundle");
    std::string config_path;
    std::size_t jobs = 1;
    std::optional<std::uint64_t> seed;
    run->add_option("--config", config_path, "TOML run configuration")->required();
    run->add_option("--jobs", jobs, "Epochs fitted concurrently")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Override hdp.seed");

    auto* exp = app.add_subcommand("export", "Write figure data from a bundle");
    std::string bundle_dir, what, out;
    std::optional<double> zeta;
    std::optional<std::string> measure;
    exp->add_option("--bundle", bundle_dir, "Bundle directory")->required();
    exp->add_option("--what", what, "scatter | overlap | graph | events")->required();
    exp->add_option("--out", out, "Output file, or - for stdout")->required();
    exp->add_option("--zeta", zeta, "Re-prune every graph at this operating point first");
    exp->add_option("--measure", measure, "Graph to export (graph) or KLD graph to compare (overlap)");

    auto* serve = app.add_subcommand("serve", "Serve a bundle over HTTP");
    int port = 8080;
    std::string host = "127.0.0.1";
    serve->add_option("--bundle", bundle_dir, "Bundle directory")->required();
    serve->add_option("--port", port, "TCP port")->required();
    serve->add_option("--host", host, "Listen address");

    auto* rep = app.add_subcommand("reprune", "Re-prune one graph of a bundle in place");
    std::string rep_measure;
    double rep_zeta = 0.5;
    rep->add_option("--bundle", bundle_dir, "Bundle directory")->required();
    rep->add_option("--measure", rep_measure, "bhattacharyya | kld_forward | kld_backward")->required();
    rep->add_option("--zeta", rep_zeta, "Operating point in [0, 1]")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (print_default) {
            std::cout << kDefaultConfigToml;
            return 0;
        }
        if (*run) return cmd_run(config_path, jobs, seed);
        if (*exp) return cmd_export(bundle_dir, what, out, zeta, measure);
        if (*serve) return cmd_serve(bundle_dir, port, host);
        if (*rep) return cmd_reprune(bundle_dir, rep_measure, rep_zeta);
        std::cerr << app.help();
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::cerr << "hdpflow: " << e.what() << '\n';
        return kExitValidation;
    } catch (const IoError& e) {
        std::cerr << "hdpflow: " << e.what() << '\n';
        return *run ? kExitRuntime : kExitValidation;
    } catch (const Cancelled& e) {
        std::cerr << "hdpflow: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "hdpflow: " << e.what() << '\n';
        return kExitRuntime;
    }
}
