#ifndef RQM_EXPERIMENTS_HPP
#define RQM_EXPERIMENTS_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rqm/grid.hpp"

namespace rqm {

inline constexpr const char* kCodeVersion = "0.1.0";

// Flat key=value configuration (TOML-compatible subset).  All lengths and
// times are in natural units (1/mass); delta_a values likewise.  Unset keys
// take the defaults below.
struct ExperimentConfig {
    std::string experiment;  // lightcone | smoothing | unitarity_sweep | completeness
    std::size_t n_modes = 256;
    double extent = 200.0;
    double mass = 1.0;
    double band_limit = 0.0;  // 0 = lattice Nyquist
    double x0 = 0.0;
    double p0 = 0.0;
    double sigma = 2.0;
    double t_meas = 3.0;
    std::string kernel = "sharp";  // sharp | gaussian | rectangular
    double delta_a = 1.0;
    std::vector<double> delta_a_list{0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0};
    double band = 0.5;
    std::string output_path;
    double fit_window_lo = 3.0;  // units of the Compton length
    double fit_window_hi = 8.0;
    double pair_separation = 0.5;      // units of the Compton length
    double max_pair_separation = 3.0;  // units of the Compton length
    std::size_t levels = 2;
    double tol_completeness = 1e-9;
    double tol_kolmogorov = 1e-9;

    GridSpec grid() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    // ordered key/value pairs, written as "# key = value" above the header
    std::vector<std::pair<std::string, std::string>> metadata;
};

std::string render_table(const ResultTable& t);
void emit_table(const ResultTable& t, const std::string& path);
ResultTable read_table(const std::string& path);

// strips metadata lines that legitimately differ between reruns (wall time)
std::string strip_volatile_metadata(const std::string& csv);

// companion output path for the unitarity sweep's full spectra
std::string spectra_path(const std::string& out_path);

ResultTable run_lightcone(const ExperimentConfig& cfg, unsigned n_threads = 1);
ResultTable run_smoothing(const ExperimentConfig& cfg, unsigned n_threads = 1);

struct SweepOutput {
    ResultTable summary;
    ResultTable spectra;
};

SweepOutput run_unitarity_sweep(const ExperimentConfig& cfg,
                                unsigned n_threads = 1);
ResultTable run_completeness(const ExperimentConfig& cfg,
                             unsigned n_threads = 1);

// fast self-check battery; prints one line per check, returns failure count
int run_check(std::ostream& out);

}  // namespace rqm

#endif
