#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "doctest.h"
#include "rqm/errors.hpp"
#include "rqm/experiments.hpp"

using namespace rqm;

namespace {

std::string error_text(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

std::filesystem::path temp_file(const char* stem) {
    static int counter = 0;
    return std::filesystem::temp_directory_path() /
           (std::string("rqm_test_") + stem + "_" +
            std::to_string(::getpid()) + "_" + std::to_string(counter++) +
            ".csv");
}

double metadata_number(const ResultTable& t, const std::string& key) {
    for (const auto& kv : t.metadata) {
        if (kv.first == key) return std::stod(kv.second);
    }
    FAIL("missing metadata key " << key);
    return 0.0;
}

}  // namespace

TEST_CASE("config parsing: defaults and a full file") {
    const ExperimentConfig d = parse_config("");
    CHECK(d.n_modes == 256);
    CHECK(d.extent == 200.0);
    CHECK(d.mass == 1.0);
    CHECK(d.kernel == "sharp");
    CHECK(d.delta_a_list.size() == 7);
    CHECK(d.levels == 2);

    const std::string text =
        "# full example\n"
        "experiment = unitarity_sweep   # trailing comment\n"
        "n_modes = 128\n"
        "extent = 80.0\n"
        "mass = 2\n"
        "sigma = 4.5e0\n"
        "kernel = \"gaussian\"\n"
        "delta_a_list = [0.5, 1.0, 2.0]\n"
        "band = 0.25\n"
        "\n"
        "output_path = 'sweep.csv'\n";
    const ExperimentConfig c = parse_config(text);
    CHECK(c.experiment == "unitarity_sweep");
    CHECK(c.n_modes == 128);
    CHECK(c.extent == 80.0);
    CHECK(c.mass == 2.0);
    CHECK(c.sigma == 4.5);
    CHECK(c.kernel == "gaussian");
    REQUIRE(c.delta_a_list.size() == 3);
    CHECK(c.delta_a_list[1] == 1.0);
    CHECK(c.band == 0.25);
    CHECK(c.output_path == "sweep.csv");

    // bare comma list is accepted too
    CHECK(parse_config("delta_a_list = 1, 2, 4\n").delta_a_list.size() == 3);

    const GridSpec g = c.grid();
    CHECK(g.n_modes == 128);
    CHECK(g.mass == 2.0);
    CHECK(g.band_limit == doctest::Approx(kPi / g.dx()));
}

TEST_CASE("config parsing: diagnostics carry line numbers and suggestions") {
    const std::string near_miss = error_text([] { parse_config("sigm = 2\n"); });
    CHECK(near_miss.find("config line 1") != std::string::npos);
    CHECK(near_miss.find("unknown key 'sigm'") != std::string::npos);
    CHECK(near_miss.find("did you mean 'sigma'?") != std::string::npos);

    const std::string dup =
        error_text([] { parse_config("sigma = 2\nsigma = 3\n"); });
    CHECK(dup.find("config line 2") != std::string::npos);
    CHECK(dup.find("first set on line 1") != std::string::npos);

    const std::string bad =
        error_text([] { parse_config("mass = 1\nsigma = abc\n"); });
    CHECK(bad.find("config line 2") != std::string::npos);

    CHECK(error_text([] { parse_config("sigma\n"); })
              .find("expected 'key = value'") != std::string::npos);
    CHECK(error_text([] { parse_config("delta_a_list = [1, 2\n"); })
              .find("unterminated") != std::string::npos);
    CHECK(error_text([] { parse_config("delta_a_list = []\n"); })
              .find("empty") != std::string::npos);
}

TEST_CASE("config parsing: semantic validation") {
    CHECK_THROWS_AS(parse_config("experiment = warp\n"), Error);
    CHECK_THROWS_AS(parse_config("kernel = cubic\n"), Error);
    CHECK_THROWS_AS(parse_config("n_modes = 63\n"), Error);
    CHECK_THROWS_AS(parse_config("n_modes = 16384\n"), Error);
    CHECK_THROWS_AS(parse_config("n_modes = 2.5\n"), Error);
    CHECK_THROWS_AS(parse_config("levels = 9\n"), Error);
    CHECK_THROWS_AS(parse_config("sigma = -1\n"), Error);
    CHECK_THROWS_AS(parse_config("extent = 0\n"), Error);
    CHECK_THROWS_AS(
        parse_config("fit_window_lo = 5\nfit_window_hi = 3\n"), Error);
    CHECK_THROWS_AS(parse_config("delta_a_list = [1, 1, 2]\n"), Error);
    CHECK_THROWS_AS(
        parse_config("pair_separation = 2\nmax_pair_separation = 1\n"), Error);
}

TEST_CASE("tables: render, emit, read back, strip volatile lines") {
    ResultTable t;
    t.columns = {"x", "y"};
    t.rows = {{1.0 / 3.0, -2.5e-17}, {6.02214076e23, 0.0}};
    t.metadata = {{"generator", "rqmeas test"},
                  {"note", "alpha beta"},
                  {"wall_time_s", "0.123"}};
    const std::string body = render_table(t);
    CHECK(body.find("# note = alpha beta\n") != std::string::npos);
    CHECK(body.find("x,y\n") != std::string::npos);

    const std::string stripped = strip_volatile_metadata(body);
    CHECK(stripped.find("wall_time_s") == std::string::npos);
    CHECK(stripped.find("# note = alpha beta\n") != std::string::npos);

    const auto path = temp_file("roundtrip");
    emit_table(t, path.string());
    const ResultTable back = read_table(path.string());
    std::filesystem::remove(path);
    REQUIRE(back.columns == t.columns);
    REQUIRE(back.rows.size() == t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        for (std::size_t j = 0; j < t.columns.size(); ++j) {
            CHECK(back.rows[i][j] == t.rows[i][j]);  // bit-exact round trip
        }
    }
    bool found = false;
    for (const auto& kv : back.metadata) {
        if (kv.first == "note" && kv.second == "alpha beta") found = true;
    }
    CHECK(found);

    ResultTable ragged = t;
    ragged.rows.push_back({1.0});
    CHECK_THROWS_AS(render_table(ragged), Error);
    CHECK_THROWS_AS(read_table("/nonexistent/rqm.csv"), Error);
    CHECK_THROWS_AS(emit_table(t, "/nonexistent/dir/rqm.csv"), Error);
}

TEST_CASE("spectra companion path derivation") {
    CHECK(spectra_path("out/foo.csv") == "out/foo.spectra.csv");
    CHECK(spectra_path("foo.csv") == "foo.spectra.csv");
    CHECK(spectra_path("results") == "results.spectra.csv");
    CHECK(spectra_path("a.b/results") == "a.b/results.spectra.csv");
}

TEST_CASE("lightcone experiment recovers compton-scale decay") {
    ExperimentConfig cfg;
    cfg.experiment = "lightcone";
    cfg.n_modes = 256;
    cfg.extent = 100.0;
    cfg.sigma = 0.8;
    cfg.t_meas = 2.0;
    cfg.fit_window_lo = 3.0;
    cfg.fit_window_hi = 6.0;
    const ResultTable t = run_lightcone(cfg);
    REQUIRE(t.columns.size() == 7);
    CHECK(t.columns[2] == "s_excess");
    REQUIRE(t.rows.size() == cfg.n_modes + 1);
    CHECK(t.rows.back()[0] == 1.0);  // summary row

    const double decay = metadata_number(t, "summary.decay_length");
    CHECK(decay > 0.6);
    CHECK(decay < 1.4);
    CHECK(metadata_number(t, "summary.fit_r2") > 0.95);
    CHECK(metadata_number(t, "summary.n_fit_points") >= 8.0);

    // detection inside the cone dominates detection well outside it
    double inside = 0.0, outside = 0.0;
    for (const auto& row : t.rows) {
        if (row[0] != 0.0) continue;
        if (row[2] < 0.0) inside = std::max(inside, row[3]);
        if (row[2] > 3.0) outside = std::max(outside, row[3]);
    }
    CHECK(inside > 100.0 * outside);
}

TEST_CASE("lightcone experiment refuses a starved fit window") {
    ExperimentConfig cfg;
    cfg.experiment = "lightcone";
    cfg.n_modes = 64;
    cfg.extent = 20.0;
    cfg.sigma = 0.8;
    cfg.t_meas = 3.0;
    cfg.fit_window_lo = 6.0;
    cfg.fit_window_hi = 8.0;
    CHECK_THROWS_AS(run_lightcone(cfg), NumericError);
    cfg.kernel = "gaussian";
    CHECK_THROWS_AS(run_lightcone(cfg), Error);
}

TEST_CASE("smoothing experiment bounds nearby-outcome contrast") {
    ExperimentConfig cfg;
    cfg.experiment = "smoothing";
    cfg.n_modes = 256;
    cfg.extent = 128.0;
    cfg.sigma = 2.0;
    cfg.t_meas = 1.0;
    cfg.pair_separation = 0.5;
    cfg.max_pair_separation = 3.0;
    const ResultTable t = run_smoothing(cfg);
    REQUIRE(t.columns == std::vector<std::string>{"kind", "d", "ratio"});
    REQUIRE(t.rows.size() >= 8);
    CHECK(t.rows[0][2] == 0.0);  // zero separation, zero contrast
    double prev = -1.0;
    for (const auto& row : t.rows) {
        if (row[0] != 0.0) continue;
        CHECK(row[2] >= prev - 1e-12);
        prev = row[2];
    }
    const double at = metadata_number(t, "summary.ratio_at_separation");
    CHECK(at > 0.0);
    CHECK(at < 0.5);

    cfg.pair_separation = 0.3;  // 0.6 lattice steps: not representable
    CHECK_THROWS_AS(run_smoothing(cfg), Error);
}

TEST_CASE("unitarity sweep summary, spectra and compton flags") {
    ExperimentConfig cfg;
    cfg.experiment = "unitarity_sweep";
    cfg.n_modes = 64;
    cfg.extent = 200.0;
    cfg.sigma = 8.0;
    cfg.p0 = 0.1;
    cfg.t_meas = 1.0;
    cfg.kernel = "gaussian";
    cfg.delta_a_list = {2.0, 20.0};
    cfg.band = 0.5;
    const SweepOutput out = run_unitarity_sweep(cfg);
    REQUIRE(out.summary.rows.size() == 2);
    REQUIRE(out.summary.columns.size() == 10);
    CHECK(out.summary.columns[0] == "delta_a_over_compton");
    CHECK(out.summary.columns[8] == "compton_ok");
    CHECK(out.spectra.rows.size() == 2 * cfg.n_modes);

    CHECK(out.summary.rows[0][0] == 2.0);
    CHECK(out.summary.rows[1][0] == 20.0);
    CHECK(out.summary.rows[0][8] == 0.0);
    CHECK(out.summary.rows[1][8] == 1.0);
    // widening the detector weakens the violation
    CHECK(out.summary.rows[1][1] < out.summary.rows[0][1]);
    for (const auto& row : out.summary.rows) {
        CHECK(row[9] >= 1.0 - 1e-9);  // detection probability never dips
        CHECK(row[9] < 2.0);
    }

    bool tagged = false;
    for (const auto& kv : out.spectra.metadata) {
        if (kv.first == "table" && kv.second == "defect_spectra") tagged = true;
    }
    CHECK(tagged);

    cfg.kernel = "sharp";
    CHECK_THROWS_AS(run_unitarity_sweep(cfg), Error);
}

TEST_CASE("completeness experiment holds at refined resolutions") {
    ExperimentConfig cfg;
    cfg.experiment = "completeness";
    cfg.n_modes = 64;
    cfg.extent = 64.0;
    cfg.sigma = 3.0;
    cfg.t_meas = 3.0;
    cfg.levels = 2;
    const ResultTable t = run_completeness(cfg);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == 64.0);
    CHECK(t.rows[1][1] == 128.0);
    for (const auto& row : t.rows) {
        CHECK(row[2] < 1e-9);
        CHECK(row[3] < 1e-9);
    }

    cfg.tol_completeness = 1e-18;  // unreachable: must refuse, not round
    CHECK_THROWS_AS(run_completeness(cfg), NumericError);
}

TEST_CASE("experiment output is independent of the thread count") {
    ExperimentConfig cfg;
    cfg.experiment = "unitarity_sweep";
    cfg.n_modes = 64;
    cfg.extent = 200.0;
    cfg.sigma = 8.0;
    cfg.t_meas = 1.0;
    cfg.kernel = "gaussian";
    cfg.delta_a_list = {1.0, 2.0, 5.0};
    const SweepOutput a = run_unitarity_sweep(cfg, 1);
    const SweepOutput b = run_unitarity_sweep(cfg, 4);
    CHECK(strip_volatile_metadata(render_table(a.summary)) ==
          strip_volatile_metadata(render_table(b.summary)));
    CHECK(strip_volatile_metadata(render_table(a.spectra)) ==
          strip_volatile_metadata(render_table(b.spectra)));
}

TEST_CASE("self-check battery passes") {
    std::ostringstream out;
    const int failures = run_check(out);
    CHECK(failures == 0);
    CHECK(out.str().find("[ok]   kg_norm conserved under propagate") !=
          std::string::npos);
    CHECK(out.str().find("[FAIL]") == std::string::npos);
}

TEST_CASE("load_config reads a file and reports missing files") {
    const auto path = temp_file("config");
    {
        std::ofstream f(path);
        f << "experiment = completeness\nn_modes = 64\n";
    }
    const ExperimentConfig cfg = load_config(path.string());
    std::filesystem::remove(path);
    CHECK(cfg.experiment == "completeness");
    CHECK(cfg.n_modes == 64);
    CHECK_THROWS_AS(load_config("/nonexistent/rqm.toml"), Error);
}
