#include "leaderaffect/analysis.hpp"
#include "leaderaffect/config.hpp"
#include "leaderaffect/errors.hpp"
#include "leaderaffect/pipeline.hpp"
#include "leaderaffect/review_server.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

namespace la = leaderaffect;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kConfigError = 2;

struct Common {
    std::string config;
    std::string strategy;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool with_strategy = true) {
    cmd->add_option("--config", c.config, "Pipeline configuration (JSON)")->required()->check(CLI::ExistingFile);
    if (with_strategy) cmd->add_option("--strategy", c.strategy, "Frame sampling strategy, e.g. uniform300 or stride50");
    cmd->add_option("--out", c.out, "Output directory (overrides the configuration)");
}

la::config::PipelineConfig load(const Common& c, bool verify_models) {
    auto cfg = la::config::load_config(c.config, verify_models);
    if (!c.strategy.empty()) cfg.strategy = la::sampler::SamplingStrategy::parse(c.strategy);
    if (!c.out.empty()) cfg.output_dir = fs::absolute(c.out);
    return cfg;
}

int cmd_ingest(const Common& c) {
    const auto cfg = load(c, false);
    const auto rep = la::pipeline::ingest(cfg);
    std::cout << "manifest rows: " << rep.manifest_rows << " (" << rep.pluralist << " pluralist, " << rep.populist
              << " populist)\nfetched: " << rep.fetched << "\nretriable failures: " << rep.retriable_failures
              << "\npermanent failures: " << rep.permanent_failures << '\n';
    for (const auto& f : rep.failures) std::cerr << "  " << f << '\n';
    return rep.failures.empty() ? kOk : kPartial;
}

int cmd_process(const Common& c, bool force, int jobs, bool fresh_review) {
    auto cfg = load(c, true);
    la::pipeline::RunOptions opt;
    opt.force = force;
    opt.jobs = jobs > 0 ? jobs : cfg.jobs;
    opt.fresh_review = fresh_review;
    opt.on_video = [](const la::pipeline::VideoRecord& r) {
        std::cout << r.video_id << ": " << la::pipeline::to_string(r.outcome);
        if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
        std::cout << std::endl;
    };
    const auto rep = la::pipeline::run_pipeline(cfg, opt);
    std::cout << cfg.strategy.name() << ": " << rep.processed << " processed, " << rep.review_pending
              << " awaiting review, " << rep.discarded << " discarded, " << rep.failed << " failed\n";
    return rep.failed == 0 ? kOk : kPartial;
}

la::review::ReviewServer* g_server = nullptr;

int cmd_review_serve(const Common& c, int port, const std::string& static_dir) {
    const auto cfg = load(c, false);
    const auto layout = la::pipeline::layout_for(cfg.output_dir, cfg.strategy.name());
    if (!fs::is_directory(layout.review_dir())) {
        throw la::Error("no review bundles at " + layout.review_dir().string() + "; run process first");
    }
    la::review::ReviewServer server(layout.review_dir(), port, "127.0.0.1",
                                    static_dir.empty() ? std::nullopt : std::optional<fs::path>(static_dir));
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    std::cout << "review server on http://127.0.0.1:" << server.port() << " (" << layout.review_dir().string() << ")"
              << std::endl;
    server.run();
    g_server = nullptr;
    return kOk;
}

int cmd_analyze(const Common& c, bool report, bool figures) {
    const auto cfg = load(c, false);
    std::vector<std::string> strategies;
    if (!c.strategy.empty()) {
        strategies.push_back(cfg.strategy.name());
    } else {
        strategies = la::analysis::available_strategies(cfg.output_dir);
        if (strategies.empty()) throw la::Error("no summary.csv under " + cfg.output_dir.string() + "; run process first");
    }
    int code = kOk;
    for (const auto& s : strategies) {
        try {
            const auto out = la::analysis::analyze_strategy(cfg.output_dir, s, cfg.t_test, cfg.seed, report, figures);
            for (const auto& p : out.written) std::cout << s << ": wrote " << p.string() << '\n';
            for (const auto& [name, why] : out.skipped_figures) std::cout << s << ": skipped " << name << " (" << why << ")\n";
        } catch (const la::ConfigError&) {
            throw;
        } catch (const la::Error& e) {
            std::cerr << s << ": " << e.what() << '\n';
            code = kPartial;
        }
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Facial affect pipeline for political leader videos"};
    app.require_subcommand(1);

    Common common;
    bool force = false;
    bool fresh_review = false;
    int jobs = 0;
    int port = 8765;
    std::string static_dir;

    auto* ingest = app.add_subcommand("ingest", "Validate manifest and labels, fetch media");
    add_common(ingest, common, false);

    auto* process = app.add_subcommand("process", "Sample frames, detect and score faces, resolve targets");
    add_common(process, common);
    process->add_flag("--force", force, "Recompute cached observations");
    process->add_option("--jobs", jobs, "Parallel videos (default: from configuration)")->check(CLI::PositiveNumber);
    process->add_flag("--fresh-review", fresh_review, "Ignore verifications made under other strategies");

    auto* review = app.add_subcommand("review", "Manual face verification");
    review->require_subcommand(1);
    auto* serve = review->add_subcommand("serve", "Serve review bundles over HTTP on localhost");
    add_common(serve, common);
    serve->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
    serve->add_option("--static", static_dir, "Directory with the review UI build")->check(CLI::ExistingDirectory);

    auto* analyze = app.add_subcommand("analyze", "Statistics reports and figures");
    add_common(analyze, common);
    auto* figures = app.add_subcommand("figures", "Figures only");
    add_common(figures, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*ingest) return cmd_ingest(common);
        if (*process) return cmd_process(common, force, jobs, fresh_review);
        if (*serve) return cmd_review_serve(common, port, static_dir);
        if (*analyze) return cmd_analyze(common, true, true);
        if (*figures) return cmd_analyze(common, false, true);
    } catch (const la::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const la::SchemaError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kConfigError;
    } catch (const la::JoinError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kPartial;
    }
    return kOk;
}
