#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rqm/errors.hpp"
#include "rqm/experiments.hpp"

namespace {

int run_verb(const std::string& verb, const std::string& config_path,
             const std::string& out_override, unsigned threads) {
    rqm::ExperimentConfig cfg = rqm::load_config(config_path);
    const std::string expected =
        verb == "unitarity-sweep" ? "unitarity_sweep" : verb;
    if (cfg.experiment.empty()) {
        cfg.experiment = expected;
    } else if (cfg.experiment != expected) {
        throw rqm::config_error("config sets experiment = '" + cfg.experiment +
                                "' but the CLI verb is '" + verb + "'");
    }
    if (!out_override.empty()) cfg.output_path = out_override;
    if (cfg.output_path.empty()) {
        throw rqm::config_error(
            "no output path: set output_path in the config or pass --out");
    }
    if (expected == "lightcone") {
        rqm::emit_table(rqm::run_lightcone(cfg, threads), cfg.output_path);
    } else if (expected == "smoothing") {
        rqm::emit_table(rqm::run_smoothing(cfg, threads), cfg.output_path);
    } else if (expected == "unitarity_sweep") {
        const rqm::SweepOutput out = rqm::run_unitarity_sweep(cfg, threads);
        rqm::emit_table(out.summary, cfg.output_path);
        const std::string companion = rqm::spectra_path(cfg.output_path);
        rqm::emit_table(out.spectra, companion);
        std::cout << "wrote " << companion << "\n";
    } else {
        rqm::emit_table(rqm::run_completeness(cfg, threads), cfg.output_path);
    }
    std::cout << "wrote " << cfg.output_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "rqmeas: restricted-propagation position measurement of a free "
        "relativistic scalar particle (1+1d, natural units)"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    unsigned threads = 1;

    const char* verbs[] = {"lightcone", "smoothing", "unitarity-sweep",
                           "completeness"};
    const char* blurbs[] = {
        "outside-cone weight decay of sharp position detection (E1)",
        "pairwise outcome-weight smoothness at sub-Compton separations (E2)",
        "generalized-unitarity defect vs measurement error (E3)",
        "lattice completeness and composition residuals (E4)"};
    for (int i = 0; i < 4; ++i) {
        CLI::App* sub = app.add_subcommand(verbs[i], blurbs[i]);
        sub->add_option("--config", config_path, "key=value config file")
            ->required();
        sub->add_option("--out", out_path,
                        "output CSV path (overrides output_path)");
        sub->add_option("--threads", threads, "worker thread count")
            ->check(CLI::Range(1u, 256u));
    }
    app.add_subcommand("check", "run the fast invariant self-check battery");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const std::string verb = app.get_subcommands().front()->get_name();
        if (verb == "check") {
            const int failures = rqm::run_check(std::cout);
            if (failures != 0) {
                std::cerr << failures << " check(s) failed\n";
                return 1;
            }
            return 0;
        }
        return run_verb(verb, config_path, out_path, threads);
    } catch (const rqm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == rqm::ErrorKind::numeric ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
