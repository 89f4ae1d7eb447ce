#include "rqm/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "rqm/errors.hpp"
#include "rqm/measurement.hpp"
#include "rqm/parallel.hpp"
#include "rqm/propagator.hpp"
#include "rqm/state.hpp"
#include "rqm/unitarity.hpp"

namespace rqm {

namespace {

const std::vector<std::string>& valid_keys() {
    static const std::vector<std::string> keys{
        "experiment",        "n_modes",
        "extent",            "mass",
        "band_limit",        "x0",
        "p0",                "sigma",
        "t_meas",            "kernel",
        "delta_a",           "delta_a_list",
        "band",              "output_path",
        "fit_window_lo",     "fit_window_hi",
        "pair_separation",   "max_pair_separation",
        "levels",            "tol_completeness",
        "tol_kolmogorov"};
    return keys;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string line_tag(std::size_t line) {
    return "config line " + std::to_string(line) + ": ";
}

std::string unquote(const std::string& v) {
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                          (v.front() == '\'' && v.back() == '\''))) {
        return v.substr(1, v.size() - 2);
    }
    return v;
}

double parse_number(const std::string& key, const std::string& v,
                    std::size_t line) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        if (!std::isfinite(x)) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw config_error(line_tag(line) + "value for '" + key +
                           "' is not a number: '" + v + "'");
    }
}

std::size_t parse_count(const std::string& key, const std::string& v,
                        std::size_t line) {
    const double x = parse_number(key, v, line);
    if (x < 1.0 || x != std::floor(x) || x > 1e9) {
        throw config_error(line_tag(line) + "value for '" + key +
                           "' must be a positive integer");
    }
    return static_cast<std::size_t>(x);
}

std::vector<double> parse_list(const std::string& key, std::string v,
                               std::size_t line) {
    v = trim(v);
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']') {
            throw config_error(line_tag(line) + "unterminated list for '" + key +
                               "'");
        }
        v = v.substr(1, v.size() - 2);
    }
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= v.size()) {
        std::size_t comma = v.find(',', pos);
        const std::string item =
            trim(comma == std::string::npos ? v.substr(pos)
                                            : v.substr(pos, comma - pos));
        if (!item.empty()) out.push_back(parse_number(key, item, line));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) {
        throw config_error(line_tag(line) + "list for '" + key + "' is empty");
    }
    return out;
}

std::string num_str(double v) {
    char buf[40];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

std::string row_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return buf;
}

std::string join_list(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += num_str(xs[i]);
    }
    return out;
}

void base_metadata(ResultTable& t, const ExperimentConfig& c) {
    t.metadata.clear();
    t.metadata.emplace_back("generator", std::string("rqmeas ") + kCodeVersion);
    t.metadata.emplace_back("code_version", kCodeVersion);
    t.metadata.emplace_back("units",
                            "natural (hbar = c = 1); lengths and times in 1/mass");
    t.metadata.emplace_back("config.experiment", c.experiment);
    t.metadata.emplace_back("config.n_modes", std::to_string(c.n_modes));
    t.metadata.emplace_back("config.extent", num_str(c.extent));
    t.metadata.emplace_back("config.mass", num_str(c.mass));
    t.metadata.emplace_back("config.band_limit", num_str(c.band_limit));
    t.metadata.emplace_back("config.x0", num_str(c.x0));
    t.metadata.emplace_back("config.p0", num_str(c.p0));
    t.metadata.emplace_back("config.sigma", num_str(c.sigma));
    t.metadata.emplace_back("config.t_meas", num_str(c.t_meas));
    t.metadata.emplace_back("config.kernel", c.kernel);
    t.metadata.emplace_back("config.delta_a", num_str(c.delta_a));
    t.metadata.emplace_back("config.delta_a_list", join_list(c.delta_a_list));
    t.metadata.emplace_back("config.band", num_str(c.band));
    t.metadata.emplace_back("config.fit_window_lo", num_str(c.fit_window_lo));
    t.metadata.emplace_back("config.fit_window_hi", num_str(c.fit_window_hi));
    t.metadata.emplace_back("config.pair_separation", num_str(c.pair_separation));
    t.metadata.emplace_back("config.max_pair_separation",
                            num_str(c.max_pair_separation));
    t.metadata.emplace_back("config.levels", std::to_string(c.levels));
    t.metadata.emplace_back("config.tol_completeness",
                            num_str(c.tol_completeness));
    t.metadata.emplace_back("config.tol_kolmogorov", num_str(c.tol_kolmogorov));
}

class WallClock {
  public:
    WallClock() : start_(std::chrono::steady_clock::now()) {}
    void stamp(ResultTable& t) const {
        const auto dt = std::chrono::steady_clock::now() - start_;
        const double s =
            std::chrono::duration_cast<std::chrono::duration<double>>(dt).count();
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", s);
        t.metadata.emplace_back("wall_time_s", buf);
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

// nearest lattice mode to momentum p, clamped into the represented range
std::size_t nearest_mode(const GridSpec& g, double p) {
    const long half = static_cast<long>(g.n_modes / 2);
    long k = std::lround(p / g.dp());
    k = std::max(-half, std::min(half - 1, k));
    return static_cast<std::size_t>(k + half);
}

}  // namespace

GridSpec ExperimentConfig::grid() const {
    return GridSpec(n_modes, extent, mass, band_limit);
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::map<std::string, std::pair<std::string, std::size_t>> kv;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error(line_tag(line_no) + "expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw config_error(line_tag(line_no) + "missing key before '='");
        }
        if (value.empty()) {
            throw config_error(line_tag(line_no) + "missing value for '" + key +
                               "'");
        }
        const auto& keys = valid_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            std::size_t best = std::string::npos;
            std::string suggestion;
            for (const auto& k : keys) {
                const std::size_t d = edit_distance(key, k);
                if (d < best) {
                    best = d;
                    suggestion = k;
                }
            }
            std::string msg = line_tag(line_no) + "unknown key '" + key + "'";
            if (best <= 3) msg += " (did you mean '" + suggestion + "'?)";
            throw config_error(msg);
        }
        if (kv.count(key)) {
            throw config_error(line_tag(line_no) + "duplicate key '" + key +
                               "' (first set on line " +
                               std::to_string(kv[key].second) + ")");
        }
        kv[key] = {value, line_no};
    }

    auto has = [&](const char* k) { return kv.count(k) != 0; };
    auto val = [&](const char* k) { return kv[k].first; };
    auto ln = [&](const char* k) { return kv[k].second; };

    if (has("experiment")) {
        cfg.experiment = unquote(val("experiment"));
        static const std::vector<std::string> names{
            "lightcone", "smoothing", "unitarity_sweep", "completeness"};
        if (std::find(names.begin(), names.end(), cfg.experiment) ==
            names.end()) {
            throw config_error(
                line_tag(ln("experiment")) + "experiment must be one of "
                "lightcone, smoothing, unitarity_sweep, completeness");
        }
    }
    if (has("kernel")) {
        cfg.kernel = unquote(val("kernel"));
        static const std::vector<std::string> kinds{"sharp", "gaussian",
                                                    "rectangular"};
        if (std::find(kinds.begin(), kinds.end(), cfg.kernel) == kinds.end()) {
            throw config_error(line_tag(ln("kernel")) +
                               "kernel must be sharp, gaussian or rectangular");
        }
    }
    if (has("output_path")) cfg.output_path = unquote(val("output_path"));

    if (has("n_modes")) {
        cfg.n_modes = parse_count("n_modes", val("n_modes"), ln("n_modes"));
        if (cfg.n_modes % 2 != 0 || cfg.n_modes > 8192) {
            throw config_error(line_tag(ln("n_modes")) +
                               "n_modes must be even and at most 8192");
        }
    }
    if (has("levels")) {
        cfg.levels = parse_count("levels", val("levels"), ln("levels"));
        if (cfg.levels > 6) {
            throw config_error(line_tag(ln("levels")) + "levels must be <= 6");
        }
    }

    struct NumField {
        const char* key;
        double* slot;
        bool positive;
    };
    const NumField fields[] = {
        {"extent", &cfg.extent, true},
        {"mass", &cfg.mass, true},
        {"band_limit", &cfg.band_limit, false},
        {"x0", &cfg.x0, false},
        {"p0", &cfg.p0, false},
        {"sigma", &cfg.sigma, true},
        {"t_meas", &cfg.t_meas, false},
        {"delta_a", &cfg.delta_a, true},
        {"band", &cfg.band, true},
        {"fit_window_lo", &cfg.fit_window_lo, true},
        {"fit_window_hi", &cfg.fit_window_hi, true},
        {"pair_separation", &cfg.pair_separation, true},
        {"max_pair_separation", &cfg.max_pair_separation, true},
        {"tol_completeness", &cfg.tol_completeness, true},
        {"tol_kolmogorov", &cfg.tol_kolmogorov, true},
    };
    for (const auto& f : fields) {
        if (!has(f.key)) continue;
        const double x = parse_number(f.key, val(f.key), ln(f.key));
        if (f.positive && !(x > 0.0)) {
            throw config_error(line_tag(ln(f.key)) + "'" + std::string(f.key) +
                               "' must be positive");
        }
        *f.slot = x;
    }
    if (has("band_limit") && cfg.band_limit < 0.0) {
        throw config_error(line_tag(ln("band_limit")) +
                           "band_limit must be >= 0 (0 selects the Nyquist "
                           "momentum)");
    }
    if (has("delta_a_list")) {
        cfg.delta_a_list =
            parse_list("delta_a_list", val("delta_a_list"), ln("delta_a_list"));
        for (std::size_t i = 0; i < cfg.delta_a_list.size(); ++i) {
            if (!(cfg.delta_a_list[i] > 0.0)) {
                throw config_error(line_tag(ln("delta_a_list")) +
                                   "delta_a_list entries must be positive");
            }
            if (i > 0 && cfg.delta_a_list[i] <= cfg.delta_a_list[i - 1]) {
                throw config_error(line_tag(ln("delta_a_list")) +
                                   "delta_a_list must be strictly increasing");
            }
        }
    }
    if (cfg.fit_window_hi <= cfg.fit_window_lo) {
        const std::size_t where =
            has("fit_window_hi") ? ln("fit_window_hi")
                                 : (has("fit_window_lo") ? ln("fit_window_lo") : 0);
        throw config_error(line_tag(where) +
                           "fit window must satisfy lo < hi");
    }
    if (cfg.max_pair_separation < cfg.pair_separation) {
        const std::size_t where = has("max_pair_separation")
                                      ? ln("max_pair_separation")
                                      : (has("pair_separation")
                                             ? ln("pair_separation")
                                             : 0);
        throw config_error(line_tag(where) +
                           "max_pair_separation must be >= pair_separation");
    }
    const std::size_t finest = cfg.n_modes << (cfg.levels - 1);
    if (finest > 8192) {
        throw config_error(
            "refinement levels exceed the n_modes limit (finest grid " +
            std::to_string(finest) + " > 8192)");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string render_table(const ResultTable& t) {
    std::string out;
    for (const auto& kv : t.metadata) {
        out += "# " + kv.first + " = " + kv.second + "\n";
    }
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (i) out += ",";
        out += t.columns[i];
    }
    out += "\n";
    for (const auto& row : t.rows) {
        if (row.size() != t.columns.size()) {
            throw precondition_error("table row width does not match header");
        }
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            out += row_value(row[i]);
        }
        out += "\n";
    }
    return out;
}

void emit_table(const ResultTable& t, const std::string& path) {
    const std::string body = render_table(t);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("cannot write output file: " + path);
    out << body;
    out.flush();
    if (!out) throw config_error("failed writing output file: " + path);
}

ResultTable read_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot read file: " + path);
    ResultTable t;
    std::string line;
    bool header_seen = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = trim(line.substr(1));
            const std::size_t eq = body.find('=');
            if (eq != std::string::npos) {
                t.metadata.emplace_back(trim(body.substr(0, eq)),
                                        trim(body.substr(eq + 1)));
            } else {
                t.metadata.emplace_back(body, "");
            }
            continue;
        }
        std::vector<std::string> cells;
        std::size_t pos = 0;
        for (;;) {
            const std::size_t comma = line.find(',', pos);
            cells.push_back(comma == std::string::npos
                                ? line.substr(pos)
                                : line.substr(pos, comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (!header_seen) {
            t.columns = cells;
            header_seen = true;
            continue;
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            row.push_back(parse_number("cell", c, line_no));
        }
        t.rows.push_back(std::move(row));
    }
    if (!header_seen) throw config_error("file has no header row: " + path);
    return t;
}

std::string strip_volatile_metadata(const std::string& csv) {
    std::istringstream in(csv);
    std::string out, line;
    while (std::getline(in, line)) {
        if (line.rfind("# wall_time_s", 0) == 0) continue;
        out += line;
        out += "\n";
    }
    return out;
}

std::string spectra_path(const std::string& out_path) {
    const std::size_t dot = out_path.find_last_of('.');
    const std::size_t slash = out_path.find_last_of("/\\");
    if (dot == std::string::npos ||
        (slash != std::string::npos && dot < slash)) {
        return out_path + ".spectra.csv";
    }
    return out_path.substr(0, dot) + ".spectra" + out_path.substr(dot);
}

ResultTable run_lightcone(const ExperimentConfig& cfg, unsigned n_threads) {
    (void)n_threads;  // profile evaluation is a single pass
    const WallClock clock;
    if (cfg.kernel != "sharp") {
        throw config_error("lightcone experiment uses the sharp kernel");
    }
    const GridSpec g = cfg.grid();
    const SliceState packet = make_gaussian_packet(g, cfg.x0, cfg.p0, cfg.sigma);
    const SliceState phi = propagate(packet, cfg.t_meas - packet.t);
    const Eigen::VectorXd w = sharp_weight_profile(phi);
    const double lc = g.compton_length();
    const double horizon = std::abs(cfg.t_meas - packet.t);

    ResultTable t;
    t.columns = {"kind",       "x",            "s_excess", "weight",
                 "log_weight", "decay_length", "fit_r2"};
    std::vector<std::pair<double, double>> window;  // (s, sqrt weight)
    for (std::size_t j = 0; j < g.n_modes; ++j) {
        const double x = g.position(j);
        const double s = std::abs(g.min_image(x - cfg.x0)) - horizon;
        t.rows.push_back({0.0, x, s, w[j], std::log(w[j]), 0.0, 0.0});
        if (s >= cfg.fit_window_lo * lc && s <= cfg.fit_window_hi * lc) {
            window.emplace_back(s, std::sqrt(w[j]));
        }
    }
    std::sort(window.begin(), window.end());
    // the two cone sides contribute pairs at equal s; merge them
    std::vector<double> ss, amps;
    for (std::size_t i = 0; i < window.size();) {
        double acc = 0.0;
        std::size_t m = 0;
        const double s0 = window[i].first;
        while (i < window.size() && window[i].first - s0 <= 1e-9) {
            acc += window[i].second;
            ++m;
            ++i;
        }
        ss.push_back(s0);
        amps.push_back(acc / static_cast<double>(m));
    }
    if (ss.size() < 8) {
        throw NumericError(
            "only " + std::to_string(ss.size()) +
                " outcome points fall in the outside-cone fit window; "
                "increase extent or n_modes",
            static_cast<double>(ss.size()));
    }
    const DecayFit fit = fit_decay_length(ss, amps);
    t.rows.push_back({1.0, 0.0, 0.0, 0.0, 0.0, fit.decay_length, fit.r2});
    base_metadata(t, cfg);
    t.metadata.emplace_back("summary.decay_length", num_str(fit.decay_length));
    t.metadata.emplace_back("summary.fit_r2", num_str(fit.r2));
    t.metadata.emplace_back("summary.n_fit_points",
                            std::to_string(ss.size()));
    clock.stamp(t);
    return t;
}

ResultTable run_smoothing(const ExperimentConfig& cfg, unsigned n_threads) {
    (void)n_threads;
    const WallClock clock;
    if (cfg.kernel != "sharp") {
        throw config_error("smoothing experiment uses the sharp kernel");
    }
    const GridSpec g = cfg.grid();
    const double lc = g.compton_length();
    const std::size_t n = g.n_modes;
    const double target = cfg.pair_separation * lc;
    const double steps_f = target / g.dx();
    const long steps = std::lround(steps_f);
    if (std::abs(steps_f - static_cast<double>(steps)) > 1e-9 || steps < 0) {
        throw config_error(
            "pair_separation must be a whole number of lattice spacings "
            "(adjust n_modes or extent)");
    }
    const SliceState packet = make_gaussian_packet(g, cfg.x0, cfg.p0, cfg.sigma);
    const SliceState phi = propagate(packet, cfg.t_meas - packet.t);
    const Eigen::VectorXd w = sharp_weight_profile(phi);
    const double wmax = w.maxCoeff();
    if (!(wmax > 0.0)) {
        throw NumericError("all outcome weights vanish", 0.0);
    }
    const std::size_t j_max = static_cast<std::size_t>(
        std::floor(cfg.max_pair_separation * lc / g.dx() + 1e-9));

    ResultTable t;
    t.columns = {"kind", "d", "ratio"};
    double ratio_at = 0.0;
    bool found = false;
    for (std::size_t j = 0; j <= j_max; ++j) {
        double mx = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            mx = std::max(mx, std::abs(w[a] - w[(a + j) % n]));
        }
        const double ratio = mx / wmax;
        t.rows.push_back({0.0, g.dx() * static_cast<double>(j), ratio});
        if (j == static_cast<std::size_t>(steps)) {
            ratio_at = ratio;
            found = true;
        }
    }
    if (!found) {
        throw config_error(
            "pair_separation lies outside max_pair_separation; no summary row");
    }
    t.rows.push_back({1.0, target, ratio_at});
    base_metadata(t, cfg);
    t.metadata.emplace_back("summary.ratio_at_separation", num_str(ratio_at));
    t.metadata.emplace_back("summary.separation", num_str(target));
    clock.stamp(t);
    return t;
}

SweepOutput run_unitarity_sweep(const ExperimentConfig& cfg,
                                unsigned n_threads) {
    const WallClock clock;
    if (cfg.kernel == "sharp") {
        throw config_error(
            "unitarity_sweep needs a finite-width kernel (gaussian or "
            "rectangular)");
    }
    const GridSpec g = cfg.grid();
    const SliceState packet = make_gaussian_packet(g, cfg.x0, cfg.p0, cfg.sigma);
    const std::size_t m = cfg.delta_a_list.size();

    struct Entry {
        std::vector<double> row;
        std::vector<std::vector<double>> spectrum;
    };
    std::vector<Entry> entries(m);
    for_chunks(m, 1, n_threads, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const double da = cfg.delta_a_list[i];
            const SmearingKernel ker = cfg.kernel == "gaussian"
                                           ? gaussian_kernel(g, da)
                                           : rectangular_kernel(g, da);
            const DefectReport rep = gram_defect(ker, cfg.band, 1);
            const ComptonReport comp = compton_condition_report(ker);
            const OutcomeDistribution dist =
                outcome_distribution(packet, ker, cfg.t_meas, 1);
            const std::size_t i1 = nearest_mode(g, 1.0 / da);
            const std::size_t i3 = nearest_mode(g, 3.0 / da);
            Entry& ent = entries[i];
            ent.row = {da * g.mass,
                       rep.max_defect_in_band,
                       rep.defect_at_zero,
                       g.momentum(i1),
                       rep.defect[i1],
                       g.momentum(i3),
                       rep.defect[i3],
                       comp.lambda_star,
                       comp.satisfied ? 1.0 : 0.0,
                       dist.total};
            ent.spectrum.reserve(g.n_modes);
            for (std::size_t k = 0; k < g.n_modes; ++k) {
                ent.spectrum.push_back(
                    {da * g.mass, g.momentum(k), rep.defect[k]});
            }
        }
    });

    SweepOutput out;
    out.summary.columns = {"delta_a_over_compton",
                           "max_defect_in_band",
                           "defect_at_zero",
                           "p_probe_1",
                           "defect_at_p1",
                           "p_probe_3",
                           "defect_at_p3",
                           "lambda_star",
                           "compton_ok",
                           "prob_total"};
    out.spectra.columns = {"delta_a_over_compton", "p", "defect"};
    for (std::size_t i = 0; i < m; ++i) {
        out.summary.rows.push_back(entries[i].row);
        for (auto& r : entries[i].spectrum) out.spectra.rows.push_back(r);
    }
    base_metadata(out.summary, cfg);
    base_metadata(out.spectra, cfg);
    out.spectra.metadata.emplace_back("table", "defect_spectra");
    clock.stamp(out.summary);
    clock.stamp(out.spectra);
    return out;
}

ResultTable run_completeness(const ExperimentConfig& cfg, unsigned n_threads) {
    (void)n_threads;
    const WallClock clock;
    if (cfg.kernel != "sharp") {
        throw config_error("completeness experiment uses the sharp kernel");
    }
    ResultTable t;
    t.columns = {"level", "n_modes", "completeness_residual",
                 "kolmogorov_residual"};
    for (std::size_t level = 0; level < cfg.levels; ++level) {
        const std::size_t n = cfg.n_modes << level;
        const GridSpec g(n, cfg.extent, cfg.mass, cfg.band_limit);
        const SliceState packet =
            make_gaussian_packet(g, cfg.x0, cfg.p0, cfg.sigma);
        const SliceState phi = propagate(packet, cfg.t_meas - packet.t);
        const auto pos = position_field(phi);
        const auto dpos = time_derivative_field(phi);
        // sum over outcomes of dx * (reduced amplitudes)
        double residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = g.energy(i);
            const double pk = g.momentum(i);
            cplx acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double ph = -pk * g.position(j);
                acc += cplx(std::cos(ph), std::sin(ph)) *
                       (e * pos[j] + kI * dpos[j]);
            }
            acc *= g.dx() / std::sqrt(2.0 * e * g.extent);
            residual = std::max(residual, std::abs(acc - phi.amps[i]));
        }
        // one intermediate slice halfway to the measurement time
        const double dt = cfg.t_meas - packet.t;
        const PropagatorKernel half_k = spectral_kernel(g, dt / 2.0);
        const PropagatorKernel direct = spectral_kernel(g, dt);
        const PropagatorKernel composed = kg_compose(half_k, half_k);
        double kres = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            kres = std::max(kres, std::abs(composed.values[j] - direct.values[j]));
        }
        t.rows.push_back({static_cast<double>(level), static_cast<double>(n),
                          residual, kres});
        if (residual > cfg.tol_completeness) {
            throw NumericError("completeness residual " + num_str(residual) +
                                   " exceeds tolerance at level " +
                                   std::to_string(level),
                               residual);
        }
        if (kres > cfg.tol_kolmogorov) {
            throw NumericError("composition residual " + num_str(kres) +
                                   " exceeds tolerance at level " +
                                   std::to_string(level),
                               kres);
        }
    }
    base_metadata(t, cfg);
    clock.stamp(t);
    return t;
}

int run_check(std::ostream& out) {
    int failures = 0;
    auto report = [&](const char* name, bool ok, const std::string& detail) {
        out << (ok ? "[ok]   " : "[FAIL] ") << name;
        if (!detail.empty()) out << ": " << detail;
        out << "\n";
        if (!ok) ++failures;
    };
    auto guarded = [&](const char* name, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            report(name, false, e.what());
        }
    };

    const GridSpec g(64, 64.0, 1.0);

    guarded("kg_norm conserved under propagate", [&] {
        SliceState s = make_gaussian_packet(g, -5.0, 0.2, 3.0);
        const double before = kg_norm(s);
        const double after = kg_norm(propagate(s, 7.3));
        const double dev = std::abs(after - before) + std::abs(before - 1.0);
        report("kg_norm conserved under propagate", dev < 1e-12, num_str(dev));
    });

    guarded("sharp completeness identity", [&] {
        SliceState s = make_gaussian_packet(g, 0.0, 0.0, 3.0);
        const SliceState phi = propagate(s, 4.0);
        Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(g.n_modes);
        for (std::size_t j = 0; j < g.n_modes; ++j) {
            acc += sharp_reduce(s, Event{4.0, g.position(j)}).state.amps;
        }
        acc *= g.dx();
        const double res = (acc - phi.amps).cwiseAbs().maxCoeff();
        report("sharp completeness identity", res < 1e-9, num_str(res));
    });

    guarded("kernel composition", [&] {
        const auto half_k = spectral_kernel(g, 2.0);
        const auto direct = spectral_kernel(g, 4.0);
        const auto comp = kg_compose(half_k, half_k);
        const double res = (comp.values - direct.values).cwiseAbs().maxCoeff();
        report("kernel composition", res < 1e-9, num_str(res));
    });

    guarded("kernel application equals propagate", [&] {
        SliceState s = make_gaussian_packet(g, 3.0, -0.3, 3.0);
        const auto k = spectral_kernel(g, 5.0);
        const SliceState via_kernel = apply_kernel(k, s);
        const SliceState direct = propagate(s, 5.0);
        const double res =
            (via_kernel.amps - direct.amps).cwiseAbs().maxCoeff();
        report("kernel application equals propagate", res < 1e-10,
               num_str(res));
    });

    guarded("gram operator diagonal, defect nonnegative", [&] {
        const auto ker = gaussian_kernel(g, 2.0);
        const auto rep = gram_defect(ker, 0.5);
        report("gram operator diagonal, defect nonnegative",
               rep.defect.minCoeff() > -1e-10,
               "min defect " + num_str(rep.defect.minCoeff()));
    });

    guarded("equal-time oracle reference value", [&] {
        const double v = equal_time_oracle(1.0, 1.0);
        report("equal-time oracle reference value",
               std::abs(v - 0.067007) < 1e-4, num_str(v));
    });

    guarded("momentum-transfer spectrum normalized", [&] {
        const auto ker = gaussian_kernel(g, 2.0);
        const auto qs = q_spectrum(ker);
        report("momentum-transfer spectrum normalized",
               std::abs(qs.total - 1.0) < 1e-10, num_str(qs.total));
    });

    guarded("csv rendering deterministic", [&] {
        ResultTable t;
        t.columns = {"a", "b"};
        t.rows = {{1.0 / 3.0, 2e-17}, {-4.25, 5.0}};
        t.metadata = {{"generator", "rqmeas"}, {"k", "v"}};
        const bool same = render_table(t) == render_table(t);
        report("csv rendering deterministic", same, "");
    });

    return failures;
}

}  // namespace rqm
