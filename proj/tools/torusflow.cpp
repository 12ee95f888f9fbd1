// torusflow — experiment runner for the torus-flow laboratory.
//
// Commands: simulate, rotation, deviation, herman, theta, liouville,
// classify, reduce, verify, preset. Every run validates its knobs before
// dispatch (horizon <= 1e6, tol in [1e-12, 1e-2], counts <= 1e4), writes its
// artifacts into --out (or $TORUSFLOW_OUT), and drops a manifest with the
// config echo, version, wall time and a hash over config + CSV bytes. A
// config file given with --config overrides the flags. Exit codes: 0 ok,
// 2 config error, 3 numeric failure, 4 certification failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "torusflow/arithmetic.hpp"
#include "torusflow/cohomology.hpp"
#include "torusflow/construct.hpp"
#include "torusflow/errors.hpp"
#include "torusflow/field_spec.hpp"
#include "torusflow/fourier.hpp"
#include "torusflow/integrator.hpp"
#include "torusflow/presets.hpp"
#include "torusflow/reporting.hpp"
#include "torusflow/rotation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace torusflow;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kHorizonCap = 1e6;
constexpr long long kCountCap = 10'000;

struct RunContext {
    std::string command;
    std::string out_dir = ".";
    std::uint64_t seed = 12345;
    json cfg = json::object();
    std::vector<std::string> outputs;
    std::string csv_payload; // all CSV bytes produced, in write order
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    std::string hash() const { return fnv1a64_hex(cfg.dump() + csv_payload); }
};

// ---- config plumbing -------------------------------------------------------

void merge_config_file(json& cfg, const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open config file: " + path);
    json file;
    try {
        in >> file;
    } catch (const json::exception& e) {
        throw SpecError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!file.is_object()) throw SpecError("config file must hold a JSON object");
    for (const auto& [k, v] : file.items()) {
        if (!cfg.contains(k) && k != "out" && k != "seed")
            throw SpecError("unrecognized config key: " + k);
        cfg[k] = v; // file overrides flags
    }
}

double num_at(const json& c, const char* k) {
    const json& v = c.at(k);
    if (!v.is_number()) throw SpecError(std::string("'") + k + "' must be a number");
    return v.get<double>();
}

long long int_at(const json& c, const char* k) {
    const json& v = c.at(k);
    if (!v.is_number_integer()) throw SpecError(std::string("'") + k + "' must be an integer");
    return v.get<long long>();
}

std::string str_at(const json& c, const char* k) {
    const json& v = c.at(k);
    if (!v.is_string()) throw SpecError(std::string("'") + k + "' must be a string");
    return v.get<std::string>();
}

double checked_horizon(const json& c, const char* k = "horizon") {
    const double h = num_at(c, k);
    if (!(h > 0) || h > kHorizonCap)
        throw SpecError(std::string("'") + k + "' must lie in (0, 1e6]");
    return h;
}

double checked_tol(const json& c) {
    const double t = num_at(c, "tol");
    if (!(t >= 1e-12) || t > 1e-2) throw SpecError("'tol' must lie in [1e-12, 1e-2]");
    return t;
}

long long checked_count(const json& c, const char* k, long long lo = 1) {
    const long long n = int_at(c, k);
    if (n < lo || n > kCountCap)
        throw SpecError(std::string("'") + k + "' must lie in [" + std::to_string(lo) + ", 10000]");
    return n;
}

int checked_threads(const json& c) {
    const long long n = int_at(c, "threads");
    if (n < 0 || n > 512) throw SpecError("'threads' must lie in [0, 512]");
    return static_cast<int>(n);
}

// ---- small parsers ---------------------------------------------------------

std::vector<double> parse_double_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0')
            throw SpecError(std::string("cannot parse '") + what + "' entry: " + tok);
        out.push_back(v);
    }
    if (out.empty()) throw SpecError(std::string("'") + what + "' is empty");
    return out;
}

std::vector<long long> parse_int_list(const std::string& s, const char* what) {
    std::vector<long long> out;
    for (double v : parse_double_list(s, what)) {
        if (v != std::floor(v) || std::abs(v) > 1e15)
            throw SpecError(std::string("'") + what + "' entries must be integers");
        out.push_back(static_cast<long long>(v));
    }
    return out;
}

// "AxB" (or "AxBxC") -> lattice of points with coordinate j at i/n_j; axes
// beyond the given shape sit at 0.5.
std::vector<Vec> parse_grid(const std::string& shape, int dim) {
    std::vector<long long> counts;
    std::stringstream ss(shape);
    std::string tok;
    while (std::getline(ss, tok, 'x')) {
        char* end = nullptr;
        const long long n = std::strtoll(tok.c_str(), &end, 10);
        if (end == tok.c_str() || *end != '\0' || n < 1)
            throw SpecError("bad grid shape: " + shape);
        counts.push_back(n);
    }
    if (counts.empty() || static_cast<int>(counts.size()) > dim)
        throw SpecError("grid shape has more axes than the field dimension");
    long long total = 1;
    for (long long n : counts) {
        total *= n;
        if (total > kCountCap) throw SpecError("grid holds more than 10000 points");
    }
    std::vector<Vec> pts;
    pts.reserve(static_cast<std::size_t>(total));
    std::vector<long long> idx(counts.size(), 0);
    for (long long flat = 0; flat < total; ++flat) {
        Vec x(static_cast<std::size_t>(dim), 0.5);
        long long rem = flat;
        for (int j = static_cast<int>(counts.size()) - 1; j >= 0; --j) {
            idx[static_cast<std::size_t>(j)] = rem % counts[static_cast<std::size_t>(j)];
            rem /= counts[static_cast<std::size_t>(j)];
        }
        for (std::size_t j = 0; j < counts.size(); ++j)
            x[j] = static_cast<double>(idx[j]) / static_cast<double>(counts[j]);
        pts.push_back(std::move(x));
    }
    return pts;
}

// ---- field resolution ------------------------------------------------------

struct FieldChoice {
    FieldSpec spec;
    std::shared_ptr<const Preset> preset; // set when the field is a catalogue entry
};

FieldChoice resolve_field(const json& cfg) {
    const std::string preset = str_at(cfg, "preset");
    const std::string spec_path = str_at(cfg, "spec");
    const std::string spec_json = str_at(cfg, "spec_json");
    const int given = (!preset.empty()) + (!spec_path.empty()) + (!spec_json.empty());
    if (given == 0) throw SpecError("no field given: use --preset, --spec or --spec-json");
    if (given > 1) throw SpecError("give exactly one of --preset, --spec, --spec-json");

    FieldChoice out;
    if (!preset.empty()) {
        json params = cfg.value("preset_params", json());
        if (params.is_string()) {
            const std::string text = params.get<std::string>();
            if (text.empty()) {
                params = json();
            } else {
                try {
                    params = json::parse(text);
                } catch (const json::exception& e) {
                    throw SpecError(std::string("--preset-params is not valid JSON: ") + e.what());
                }
            }
        }
        out.preset = make_preset(preset, params);
        out.spec = FieldSpec::preset(out.preset);
        return out;
    }
    if (!spec_path.empty()) {
        out.spec = parse_spec_file(spec_path);
    } else {
        json doc;
        try {
            doc = json::parse(spec_json);
        } catch (const json::exception& e) {
            throw SpecError(std::string("--spec-json is not valid JSON: ") + e.what());
        }
        out.spec = parse_spec(doc);
    }
    if (const auto* pf = std::get_if<PresetField>(&out.spec.variant())) out.preset = pf->preset;
    return out;
}

// ---- artifacts -------------------------------------------------------------

std::string out_path(const RunContext& ctx, const std::string& name) {
    return (fs::path(ctx.out_dir) / name).string();
}

std::string write_artifact(RunContext& ctx, const std::string& name, const std::string& body,
                           bool is_csv) {
    const std::string path = out_path(ctx, name);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SpecError("cannot write artifact: " + path);
    f << body;
    f.close();
    ctx.outputs.push_back(path);
    if (is_csv) ctx.csv_payload += body;
    std::cout << "wrote " << path << "\n";
    return path;
}

void finish_run(RunContext& ctx) {
    RunManifest m;
    m.command = ctx.command;
    m.version = kVersion;
    m.set_config(ctx.cfg);
    m.outputs = ctx.outputs;
    m.seed = ctx.seed;
    m.content_hash = ctx.hash();
    m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                          ctx.t0)
                    .count();
    const std::string path = out_path(ctx, ctx.command + "_manifest.json");
    m.write(path);
    std::cout << "manifest " << path << " content_hash=" << m.content_hash << "\n";
}

// ---- plotting --------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> cols;
    std::vector<std::vector<double>> rows; // non-numeric cells parse to NaN
};

CsvTable read_csv_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError("cannot open CSV: " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw SpecError("empty CSV (no header): " + path);
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.cols.push_back(cell);
    if (t.cols.empty()) throw SpecError("malformed CSV header: " + path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream rs(line);
        while (std::getline(rs, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            row.push_back((end != cell.c_str() && *end == '\0') ? v
                                                                : std::nan(""));
        }
        if (row.size() != t.cols.size()) throw SpecError("ragged CSV row in: " + path);
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::size_t require_col(const CsvTable& t, const std::string& name) {
    const auto it = std::find(t.cols.begin(), t.cols.end(), name);
    if (it == t.cols.end()) throw SpecError("CSV lacks required column '" + name + "'");
    return static_cast<std::size_t>(it - t.cols.begin());
}

void check_plot_kind(const std::string& kind) {
    static const std::vector<std::string> kinds = {"orbit", "deviation-vs-t", "divisor-spectrum",
                                                   "zeta-scatter"};
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
        throw SpecError("unknown plot kind: " + kind +
                        " (orbit, deviation-vs-t, divisor-spectrum, zeta-scatter)");
}

// Builds the figure for `kind` from a CSV artifact; refuses empty data so a
// broken run never leaves a misleading picture behind.
SvgPlot plot_from_csv(const std::string& csv_path, const std::string& kind) {
    const CsvTable t = read_csv_table(csv_path);
    if (t.rows.empty()) throw SpecError("CSV has no data rows, not plotting: " + csv_path);
    SvgPlot p;
    auto column = [&](std::size_t j) {
        std::vector<double> v;
        v.reserve(t.rows.size());
        for (const auto& r : t.rows) v.push_back(r[j]);
        return v;
    };
    if (kind == "orbit") {
        p.set_title("orbit");
        const bool planar = std::count(t.cols.begin(), t.cols.end(), "x2") > 0;
        if (planar) {
            p.set_labels("x1", "x2");
            p.add_polyline(column(require_col(t, "x1")), column(require_col(t, "x2")));
        } else {
            p.set_labels("t", "x1");
            p.add_polyline(column(require_col(t, "t")), column(require_col(t, "x1")));
        }
    } else if (kind == "deviation-vs-t") {
        const std::size_t jt = require_col(t, "t");
        const std::size_t jd = require_col(t, "deviation");
        p.set_title("deviation vs t");
        p.set_labels("t", "|X(t,x) - x - t zeta|");
        p.add_polyline(column(jt), column(jd));
    } else if (kind == "divisor-spectrum") {
        const std::size_t jx = require_col(t, "abs_xi_dot_n");
        const std::size_t jy = require_col(t, "abs_theta_hat");
        std::vector<double> xs, ys;
        for (const auto& r : t.rows)
            if (r[jx] > 0 && r[jy] > 0) {
                xs.push_back(std::log10(r[jx]));
                ys.push_back(std::log10(r[jy]));
            }
        if (xs.empty()) throw SpecError("divisor spectrum has no positive entries to plot");
        p.set_title("divisor spectrum");
        p.set_labels("log10 |xi.n|", "log10 |theta_hat(n)|");
        p.add_scatter(xs, ys);
    } else { // zeta-scatter
        const std::size_t jx = require_col(t, "zeta1");
        const std::size_t jy = require_col(t, "zeta2");
        p.set_title("sampled rotation vectors");
        p.set_labels("zeta1", "zeta2");
        p.add_scatter(column(jx), column(jy));
    }
    return p;
}

// The plot reads the CSV the run just wrote unless `plot_data` points
// elsewhere (re-plotting an older artifact).
void emit_plot(RunContext& ctx, const std::string& default_csv,
               const std::function<void(SvgPlot&)>& decorate = {}) {
    const std::string kind = str_at(ctx.cfg, "plot");
    if (kind.empty()) return;
    check_plot_kind(kind);
    std::string src = str_at(ctx.cfg, "plot_data");
    if (src.empty()) src = default_csv;
    if (src.empty()) throw SpecError("this command produced no CSV to plot");
    SvgPlot p = plot_from_csv(src, kind);
    if (decorate) decorate(p);
    p.set_metadata("content_hash=" + ctx.hash());
    std::string name = kind;
    std::replace(name.begin(), name.end(), '-', '_');
    const std::string path = out_path(ctx, name + ".svg");
    p.write(path);
    ctx.outputs.push_back(path);
    std::cout << "wrote " << path << "\n";
}

std::optional<double> preset_bound(const FieldChoice& f) {
    if (f.preset && f.preset->known_deviation_bound) return *f.preset->known_deviation_bound;
    return std::nullopt;
}

// ---- command bodies --------------------------------------------------------

void run_simulate(RunContext& ctx) {
    const FieldChoice f = resolve_field(ctx.cfg);
    const int d = f.spec.dimension();
    const double t_end = checked_horizon(ctx.cfg, "t");
    const double tol = checked_tol(ctx.cfg);
    const long long samples = checked_count(ctx.cfg, "samples");

    Vec x0(static_cast<std::size_t>(d));
    const std::string xs = str_at(ctx.cfg, "x");
    if (xs.empty()) {
        for (int i = 0; i < d; ++i) x0[static_cast<std::size_t>(i)] = 0.2 + 0.1 * i;
    } else {
        const std::vector<double> v = parse_double_list(xs, "x");
        if (static_cast<int>(v.size()) != d)
            throw SpecError("'x' must have " + std::to_string(d) + " coordinates");
        x0.assign(v.begin(), v.end());
    }

    IntegratorOptions opts;
    opts.tol = tol;
    const Trajectory traj = integrate(f.spec, x0, t_end, opts);

    std::ostringstream csv;
    CsvWriter w(csv);
    std::vector<std::string> cols = {"t"};
    for (int i = 1; i <= d; ++i) cols.push_back("x" + std::to_string(i));
    w.header(cols);
    for (long long i = 0; i <= samples; ++i) {
        const double t = t_end * static_cast<double>(i) / static_cast<double>(samples);
        const Vec x = traj.sample(t);
        std::vector<double> row = {t};
        row.insert(row.end(), x.begin(), x.end());
        w.row(row);
    }
    const std::string csv_path = write_artifact(ctx, "simulate.csv", csv.str(), true);

    const Vec xe = traj.lift_end();
    std::cout << "steps = " << traj.accepted_steps() << " (rejected " << traj.rejected_steps
              << ")\n";
    std::cout << "X(" << format_double(t_end) << ") =";
    for (double c : xe) std::cout << " " << format_double(c);
    std::cout << "\n";
    emit_plot(ctx, csv_path);
}

// Shared by `rotation` (per-point estimates) and `deviation` (sup tracking
// against the known or estimated zeta).
void run_grid_rotation(RunContext& ctx, bool deviation_mode) {
    const FieldChoice f = resolve_field(ctx.cfg);
    const int d = f.spec.dimension();
    const double horizon = checked_horizon(ctx.cfg);
    const double tol = checked_tol(ctx.cfg);
    const int threads = checked_threads(ctx.cfg);
    const std::vector<Vec> grid = parse_grid(str_at(ctx.cfg, "grid"), d);

    std::optional<Vec> fixed_zeta;
    const std::string zs = str_at(ctx.cfg, "zeta");
    if (!zs.empty()) {
        const std::vector<double> v = parse_double_list(zs, "zeta");
        if (static_cast<int>(v.size()) != d) throw SpecError("'zeta' has the wrong dimension");
        fixed_zeta = Vec(v.begin(), v.end());
    } else if (deviation_mode && f.preset && f.preset->known_zeta) {
        fixed_zeta = *f.preset->known_zeta;
    }

    std::vector<RotationRow> rows(grid.size());
    std::vector<std::string> errors(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        try {
            RotationRow r;
            r.x = grid[i];
            if (fixed_zeta) {
                r.zeta = *fixed_zeta;
                r.extrap_err = 0;
            } else {
                const RotationEstimate est = estimate_rotation(f.spec, grid[i], horizon, tol);
                r.zeta = est.zeta;
                r.extrap_err = est.extrapolation_error;
            }
            const DeviationReport dev = deviation_sup(f.spec, grid[i], r.zeta, horizon, tol);
            r.sup_dev = dev.sup_deviation;
            r.arg_time = dev.arg_time;
            rows[i] = std::move(r);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!errors[i].empty())
            throw NumericError("grid point " + std::to_string(i) + " failed: " + errors[i]);

    const std::string base = deviation_mode ? "deviation" : "rotation";
    std::ostringstream csv;
    write_rotation_csv(rows, d, csv);
    const std::string csv_path = write_artifact(ctx, base + ".csv", csv.str(), true);

    double worst = 0, extrap = 0;
    for (const auto& r : rows) {
        worst = std::max(worst, r.sup_dev);
        extrap = std::max(extrap, r.extrap_err);
    }
    std::cout << "points = " << rows.size() << "  max_sup_deviation = " << format_double(worst)
              << "  max_extrap_err = " << format_double(extrap) << "\n";
    if (auto b = preset_bound(f))
        std::cout << "known bound sup|Phi| = " << format_double(*b)
                  << "  (2 sup|Phi| = " << format_double(2 * *b) << ")\n";

    std::string series_path;
    if (deviation_mode) {
        // dense deviation-vs-t series for the first grid point, for plotting
        const Vec& x0 = grid.front();
        const Vec zeta = rows.front().zeta;
        IntegratorOptions opts;
        opts.tol = tol;
        const Trajectory traj = integrate(f.spec, x0, horizon, opts);
        std::ostringstream s;
        CsvWriter w(s);
        w.header({"t", "deviation"});
        const long long n = 600;
        for (long long i = 0; i <= n; ++i) {
            const double t = horizon * static_cast<double>(i) / static_cast<double>(n);
            const Vec x = traj.sample(t);
            double acc = 0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                const double di = x[j] - x0[j] - t * zeta[j];
                acc += di * di;
            }
            w.row({t, std::sqrt(acc)});
        }
        series_path = write_artifact(ctx, "deviation_series.csv", s.str(), true);
    }

    const std::string default_plot = deviation_mode ? series_path : csv_path;
    const std::optional<double> bound = preset_bound(f);
    emit_plot(ctx, default_plot, [&](SvgPlot& p) {
        if (deviation_mode && bound) p.add_hline(2 * *bound);
    });
}

void run_herman(RunContext& ctx) {
    const FieldChoice f = resolve_field(ctx.cfg);
    const int d = f.spec.dimension();
    const double horizon = checked_horizon(ctx.cfg);
    const double tol = checked_tol(ctx.cfg);
    const int threads = checked_threads(ctx.cfg);
    const std::vector<Vec> grid = parse_grid(str_at(ctx.cfg, "grid"), d);

    const HermanSample hs = herman_sample(f.spec, grid, horizon, tol, threads);

    std::ostringstream csv;
    CsvWriter w(csv);
    std::vector<std::string> cols;
    for (int i = 1; i <= d; ++i) cols.push_back("x" + std::to_string(i));
    for (int i = 1; i <= d; ++i) cols.push_back("zeta" + std::to_string(i));
    cols.push_back("extrap_err");
    cols.push_back("failed");
    w.header(cols);
    std::size_t failures = 0;
    for (const auto& pt : hs.points) {
        std::vector<double> row(pt.x.begin(), pt.x.end());
        row.insert(row.end(), pt.estimate.zeta.begin(), pt.estimate.zeta.end());
        row.push_back(pt.estimate.extrapolation_error);
        row.push_back(pt.failed ? 1.0 : 0.0);
        w.row(row);
        failures += pt.failed;
    }
    const std::string csv_path = write_artifact(ctx, "herman.csv", csv.str(), true);

    std::cout << "points = " << hs.points.size() << "  failed = " << failures << "\n";
    if (d == 2) {
        std::cout << "segment a = " << format_double(hs.seg_a[0]) << "," << format_double(hs.seg_a[1])
                  << "  b = " << format_double(hs.seg_b[0]) << "," << format_double(hs.seg_b[1])
                  << "  max_line_distance = " << format_double(hs.max_line_distance) << "\n";
    } else {
        std::cout << "hull vertices = " << hs.hull_vertices.size()
                  << "  support gap = " << format_double(hs.hull_tolerance) << "\n";
        for (const auto& v : hs.hull_vertices) {
            std::cout << "  vertex";
            for (double c : v) std::cout << " " << format_double(c);
            std::cout << "\n";
        }
    }
    emit_plot(ctx, csv_path, [&](SvgPlot& p) {
        if (d == 2) p.add_segment(hs.seg_a[0], hs.seg_a[1], hs.seg_b[0], hs.seg_b[1]);
    });
}

// Unwraps a preset wrapper so `theta`/`reduce` can reach the profile data.
const FieldSpec& unwrap(const FieldSpec& spec) {
    if (const auto* pf = std::get_if<PresetField>(&spec.variant())) return pf->preset->field;
    return spec;
}

void run_theta(RunContext& ctx) {
    const FieldChoice f = resolve_field(ctx.cfg);
    const FieldSpec& inner = unwrap(f.spec);
    const auto* sf = std::get_if<StepanoffField>(&inner.variant());
    if (!sf || sf->vanishing)
        throw SpecError("theta needs a directional flow with an inverse-density profile");
    const long long cap = checked_count(ctx.cfg, "cap", 0);
    const long long samples = checked_count(ctx.cfg, "samples", 0);

    const FourierSeries alpha = alpha_series(sf->rho);
    const CorrectorSolution sol =
        solve_theta(alpha, sf->xi, cap, sf->divisor_override.empty() ? nullptr : &sf->divisor_override);

    std::ostringstream csv;
    write_divisor_spectrum_csv(sol, csv);
    const std::string csv_path = write_artifact(ctx, "theta.csv", csv.str(), true);

    std::cout << "modes = " << sol.theta_hat.size()
              << "  divisor_floor = " << format_double(sol.divisor_floor) << "\n";
    std::cout << "two_sum_theta_hat = " << format_double(sol.two_sum_theta_hat)
              << "  raw_sum = " << format_double(sol.sum_alpha_over_divisor) << "\n";
    if (sol.truncation_cap > 0)
        std::cout << "truncation_cap = " << sol.truncation_cap
                  << "  slack = " << format_double(sol.truncation_slack)
                  << (sol.slack_fit_ok ? "" : "  (fit not trusted)") << "\n";
    if (samples > 0) {
        const GradientIdentityReport rep =
            verify_gradient_identity(sol, static_cast<int>(samples), 1e-6, ctx.seed);
        std::cout << "grad.xi residual: fd = " << format_double(rep.fd_max_residual)
                  << "  coeff = " << format_double(rep.coeff_max_residual) << "\n";
        if (rep.coeff_max_residual > 1e-10)
            throw NumericError("corrector coefficients fail the defining identity");
    }
    emit_plot(ctx, csv_path);
}

std::string bigfloat_sci(const BigFloat& v, int digits = 8) {
    return v.str(digits, std::ios_base::scientific);
}

void run_liouville(RunContext& ctx) {
    const long long terms = checked_count(ctx.cfg, "terms");
    if (terms > 5) throw SpecError("'terms' must lie in [1, 5] (factorial denominators)");
    const long long sign = int_at(ctx.cfg, "sign");
    if (sign != 1 && sign != -1) throw SpecError("'sign' must be +1 or -1");
    const std::string report = str_at(ctx.cfg, "report");
    if (report != "certificates" && report != "theta-growth")
        throw SpecError("'report' must be 'certificates' or 'theta-growth'");

    const LiouvilleConstruction c =
        build_liouville_construction(static_cast<int>(terms), static_cast<int>(sign));

    if (report == "certificates") {
        std::ostringstream csv;
        CsvWriter w(csv);
        w.header({"n", "q", "r_hi", "alpha", "tau", "in_profile", "in_double_profile"});
        for (const auto& t : c.terms) {
            w.begin_row();
            w.cell(static_cast<long long>(t.n));
            w.cell(t.q.str());
            w.cell(bigfloat_sci(BigFloat(t.r_hi)));
            w.cell(bigfloat_sci(t.alpha));
            w.cell(bigfloat_sci(t.tau));
            w.cell(static_cast<long long>(t.in_profile ? 1 : 0));
            w.cell(static_cast<long long>(t.in_double_profile ? 1 : 0));
            w.end_row();
        }
        write_artifact(ctx, "liouville.csv", csv.str(), true);

        std::cout << "lambda = " << bigfloat_sci(c.lambda, 20)
                  << "  xi2 = " << bigfloat_sci(c.xi2, 20) << "\n";
        std::cout << "approximation quality certified (r_n < q_n^{1-n}): "
                  << (c.liouville_property_ok ? "yes" : "NO") << "\n";
        std::cout << "denominator growth certified: " << (c.qn_growth_ok ? "yes" : "NO") << "\n";
        std::cout << "divisor sum below 1 certified: " << (c.qn_sum_ok ? "yes" : "NO") << "\n";
        std::cout << "profile positivity certified (sum|alpha| < 1): "
                  << (c.positivity_ok ? "yes" : "NO") << "\n";
        std::cout << "sum |alpha_n| <= " << bigfloat_sci(BigFloat(c.sum_alpha_abs_hi)) << "\n";
        if (!(c.liouville_property_ok && c.qn_growth_ok && c.qn_sum_ok && c.positivity_ok))
            throw CertificationError("a liouville construction certificate failed");
    } else {
        std::vector<int> m_list;
        for (const auto& t : c.terms)
            if (t.in_profile) m_list.push_back(t.n);
        const std::vector<ThetaGrowthRow> rows = theta_at_tau_growth(c, m_list);

        std::ostringstream csv;
        CsvWriter w(csv);
        w.header({"m", "partial_value", "lower_bound", "margin", "pass"});
        bool all_ok = true;
        BigFloat prev = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            const BigFloat margin = r.partial_value - r.lower_bound;
            const bool ok = margin >= 0 && (i == 0 || r.partial_value > prev);
            all_ok = all_ok && ok;
            prev = r.partial_value;
            w.begin_row();
            w.cell(static_cast<long long>(r.m));
            w.cell(bigfloat_sci(r.partial_value));
            w.cell(bigfloat_sci(r.lower_bound));
            w.cell(bigfloat_sci(margin));
            w.cell(static_cast<long long>(ok ? 1 : 0));
            w.end_row();
            std::cout << "m = " << r.m << "  theta(tau_m xi) partial = "
                      << bigfloat_sci(r.partial_value) << "  >=  " << bigfloat_sci(r.lower_bound)
                      << "  " << (ok ? "ok" : "VIOLATED") << "\n";
        }
        write_artifact(ctx, "theta_growth.csv", csv.str(), true);
        if (!all_ok)
            throw CertificationError("corrector growth fell below its certified lower bound");
        std::cout << "corrector grows along the probe times (" << rows.size() << " terms)\n";
    }
}

void run_classify(RunContext& ctx) {
    const std::string value = str_at(ctx.cfg, "value");
    const long long depth = checked_count(ctx.cfg, "depth");
    if (value.empty()) throw SpecError("'value' is required");

    ContinuedFraction cf;
    if (value == "golden") {
        PrecisionGuard guard(static_cast<unsigned>(64 + depth));
        const BigFloat v = (1 + sqrt(BigFloat(5))) / 2;
        cf = continued_fraction(v, static_cast<int>(depth));
    } else if (value == "sqrt2") {
        PrecisionGuard guard(static_cast<unsigned>(64 + depth));
        const BigFloat v = sqrt(BigFloat(2));
        cf = continued_fraction(v, static_cast<int>(depth));
    } else if (value == "pi") {
        BigRat lo, hi;
        pi_bounds(lo, hi);
        cf = continued_fraction_interval(lo, hi, static_cast<int>(depth));
    } else if (value == "liouville") {
        BigRat lo, hi;
        liouville_enclosure(5, lo, hi);
        cf = continued_fraction_interval(lo, hi, static_cast<int>(depth));
    } else if (value.find('/') != std::string::npos) {
        BigRat r;
        try {
            r = BigRat(value);
        } catch (const std::exception&) {
            throw SpecError("cannot parse rational value: " + value);
        }
        cf = continued_fraction(r, static_cast<int>(depth));
    } else {
        // decimal literal -> exact rational
        std::string s = value;
        bool neg = false;
        if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
            neg = s[0] == '-';
            s.erase(0, 1);
        }
        const std::size_t dot = s.find('.');
        std::string digits = s;
        std::size_t frac = 0;
        if (dot != std::string::npos) {
            frac = s.size() - dot - 1;
            digits = s.substr(0, dot) + s.substr(dot + 1);
        }
        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
            throw SpecError("cannot parse value: " + value +
                            " (use golden, sqrt2, pi, liouville, p/q or a decimal)");
        BigRat r(BigInt(digits), pow(BigInt(10), static_cast<unsigned>(frac)));
        if (neg) r = -r;
        cf = continued_fraction(r, static_cast<int>(depth));
    }

    std::ostringstream csv;
    CsvWriter w(csv);
    w.header({"k", "a_k", "q_digits"});
    for (std::size_t k = 0; k < cf.quotients.size(); ++k) {
        w.begin_row();
        w.cell(static_cast<long long>(k));
        w.cell(cf.quotients[k].str());
        w.cell(static_cast<long long>(cf.convergents[k].second.str().size()));
        w.end_row();
    }
    write_artifact(ctx, "classify.csv", csv.str(), true);

    std::cout << "value = " << value << "  depth = " << depth << "\n";
    std::cout << "quotients =";
    const std::size_t shown = std::min<std::size_t>(cf.quotients.size(), 24);
    for (std::size_t k = 0; k < shown; ++k) {
        const std::string q = cf.quotients[k].str();
        std::cout << " " << (q.size() <= 12 ? q : ("10^~" + std::to_string(q.size() - 1)));
    }
    if (cf.quotients.size() > shown) std::cout << " ...";
    std::cout << "\n";
    if (!cf.convergents.empty()) {
        const auto& [p, q] = cf.convergents.back();
        std::cout << "last convergent has " << q.str().size() << "-digit denominator";
        if (q.str().size() <= 24) std::cout << " (" << p.str() << "/" << q.str() << ")";
        std::cout << "\n";
    }
    if (cf.convergents.size() >= 5)
        std::cout << "exponent_estimate = " << format_double(irrationality_exponent_estimate(cf))
                  << "\n";
    else
        std::cout << "exponent_estimate = n/a (expansion shorter than 5 convergents)\n";
    std::cout << "terminated = " << (cf.terminated ? "yes" : "no")
              << "  exhausted_precision = " << (cf.exhausted_precision ? "yes" : "no") << "\n";
}

LinearPlusPeriodic u_from_json(const json& j, int dim) {
    if (!j.is_object() || !j.contains("linear"))
        throw SpecError("each u component needs 'linear' (and optional 'periodic')");
    LinearPlusPeriodic u;
    const json& lin = j.at("linear");
    if (!lin.is_array() || static_cast<int>(lin.size()) != dim)
        throw SpecError("'linear' must be a d-vector");
    for (const auto& v : lin) u.linear.push_back(v.get<double>());
    u.periodic = j.contains("periodic") ? fourier_from_json(j.at("periodic"), dim)
                                        : FourierSeries(dim);
    return u;
}

void run_reduce(RunContext& ctx) {
    json cfg = ctx.cfg;
    if (str_at(cfg, "preset").empty() && str_at(cfg, "spec").empty() &&
        str_at(cfg, "spec_json").empty())
        cfg["preset"] = "example_5_1"; // canonical reduction demo
    const FieldChoice f = resolve_field(cfg);
    const int d = f.spec.dimension();
    const long long grid = checked_count(ctx.cfg, "grid_n", 2);
    const double tol = checked_tol(ctx.cfg);

    KozlovInput input;
    input.b = f.spec;
    const std::string u_path = str_at(ctx.cfg, "u");
    if (!u_path.empty()) {
        std::ifstream in(u_path);
        if (!in) throw SpecError("cannot open u file: " + u_path);
        json doc;
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw SpecError(std::string("u file is not valid JSON: ") + e.what());
        }
        if (!doc.is_object() || !doc.contains("components") || !doc["components"].is_array())
            throw SpecError("u file must hold {\"components\": [...]}");
        for (const auto& comp : doc["components"]) input.u.push_back(u_from_json(comp, d));
    } else {
        // Built-in straightening data for the smooth inverse-density profile
        // flow: u1 integrates the profile along xi, u2 spans the transversal.
        const FieldSpec& inner = unwrap(f.spec);
        const auto* sf = std::get_if<StepanoffField>(&inner.variant());
        if (!sf || sf->vanishing || d != 2 || std::abs(sf->xi[0]) < 1e-12)
            throw SpecError("no built-in u for this field; give --u FILE");
        const double xi1 = sf->xi[0], xi2 = sf->xi[1];
        LinearPlusPeriodic u1;
        u1.linear = {2.0 / xi1, 0.0};
        u1.periodic = FourierSeries::single_pair(
            2, {1, 0}, {0.0, -1.0 / (4.0 * 3.14159265358979323846 * xi1)}, 0.0);
        LinearPlusPeriodic u2;
        u2.linear = {xi2, -xi1};
        u2.periodic = FourierSeries(2);
        input.u = {u1, u2};
    }

    const KozlovReduction red = kozlov_reduction(input, static_cast<int>(grid), tol);

    std::ostringstream csv;
    CsvWriter w(csv);
    w.header({"quantity", "value"});
    auto kv = [&](const std::string& k, double v) {
        w.begin_row();
        w.cell(k);
        w.cell(v);
        w.end_row();
    };
    for (int i = 0; i < d; ++i) kv("xi" + std::to_string(i + 1), red.xi[static_cast<std::size_t>(i)]);
    for (int i = 0; i < d; ++i)
        kv("zeta" + std::to_string(i + 1), red.zeta[static_cast<std::size_t>(i)]);
    kv("unit_profile", red.unit_profile ? 1 : 0);
    kv("max_du1_deviation", red.max_du1_deviation);
    kv("max_duj_residual", red.max_duj_residual);
    kv("psi_b_residual", red.psi_b_residual);
    kv("certified_bound", red.certified_bound);
    kv("sampled_sup_phi", red.corrector.sampled_sup);
    write_artifact(ctx, "reduce.csv", csv.str(), true);

    std::cout << "xi =";
    for (double c : red.xi) std::cout << " " << format_double(c);
    std::cout << "   zeta =";
    for (double c : red.zeta) std::cout << " " << format_double(c);
    std::cout << "\n";
    std::cout << "unit_profile = " << (red.unit_profile ? "yes" : "no")
              << "  |b.grad(u1) - 1| <= " << format_double(red.max_du1_deviation)
              << "  |b.grad(u_j)| <= " << format_double(red.max_duj_residual) << "\n";
    std::cout << "straightening residual |grad(Psi) b - (b.grad u1) xi| <= "
              << format_double(red.psi_b_residual) << "\n";
    if (red.unit_profile)
        std::cout << "deviation bound 2 sup|phi| = " << format_double(red.certified_bound) << "\n";
    if (!red.corrector.note.empty()) std::cout << "note: " << red.corrector.note << "\n";
}

void run_verify(RunContext& ctx) {
    const FieldChoice f = resolve_field(ctx.cfg);
    const int d = f.spec.dimension();
    const double tol = checked_tol(ctx.cfg);
    const double t1 = checked_horizon(ctx.cfg, "t1");
    const double t2 = checked_horizon(ctx.cfg, "t2");

    Vec x(static_cast<std::size_t>(d), 0.3);
    const std::string xs = str_at(ctx.cfg, "x");
    if (!xs.empty()) {
        const std::vector<double> v = parse_double_list(xs, "x");
        if (static_cast<int>(v.size()) != d) throw SpecError("'x' has the wrong dimension");
        x.assign(v.begin(), v.end());
    }
    std::vector<long long> k(static_cast<std::size_t>(d), 0);
    k[0] = 1;
    const std::string ks = str_at(ctx.cfg, "k");
    if (!ks.empty()) {
        k = parse_int_list(ks, "k");
        if (static_cast<int>(k.size()) != d) throw SpecError("'k' has the wrong dimension");
    }

    const FlowInvariantReport rep = verify_flow_invariants(f.spec, x, t1, t2, k, tol);

    std::ostringstream csv;
    CsvWriter w(csv);
    w.header({"quantity", "value"});
    auto kv = [&](const std::string& key, double v) {
        w.begin_row();
        w.cell(key);
        w.cell(v);
        w.end_row();
    };
    kv("semigroup_residual", rep.semigroup_residual);
    kv("equivariance_residual", rep.equivariance_residual);
    kv("tol", rep.tol);
    kv("pass", rep.pass() ? 1 : 0);
    write_artifact(ctx, "verify.csv", csv.str(), true);

    std::cout << "semigroup |X(t2,X(t1,x)) - X(t1+t2,x)| = "
              << format_double(rep.semigroup_residual) << "\n";
    std::cout << "equivariance |X(t,x+k) - X(t,x) - k| = "
              << format_double(rep.equivariance_residual) << "\n";
    if (!rep.pass())
        throw NumericError("flow invariants exceed 5x the integrator tolerance");
    std::cout << "invariants hold within 5x tol\n";
}

void run_preset(RunContext& ctx) {
    const std::string action = str_at(ctx.cfg, "action");
    if (action != "list") throw SpecError("preset supports: list");

    auto shortnum = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return std::string(buf);
    };
    std::ostringstream csv;
    CsvWriter w(csv);
    w.header({"name", "dim", "zeta", "bound", "notes"});
    std::cout << "name                 dim  zeta                 bound     notes\n";
    for (const std::string& name : preset_names()) {
        const auto p = make_preset(name, json());
        std::string zeta = "-", zeta_disp = "-";
        if (p->known_zeta) {
            zeta.clear();
            zeta_disp.clear();
            for (std::size_t i = 0; i < p->known_zeta->size(); ++i) {
                zeta += (i ? "," : "") + format_double((*p->known_zeta)[i]);
                zeta_disp += (i ? "," : "") + shortnum((*p->known_zeta)[i]);
            }
        }
        const std::string bound =
            p->known_deviation_bound ? format_double(*p->known_deviation_bound) : "-";
        w.begin_row();
        w.cell(p->name);
        w.cell(static_cast<long long>(p->dim));
        w.cell(zeta);
        w.cell(bound);
        w.cell(p->notes);
        w.end_row();
        std::ostringstream line;
        line.setf(std::ios::left);
        line.width(21);
        line << p->name;
        line.width(5);
        line << p->dim;
        line.width(21);
        line << zeta_disp;
        line.width(10);
        line << (p->known_deviation_bound ? shortnum(*p->known_deviation_bound) : "-");
        line << p->notes;
        std::cout << line.str() << "\n";
    }
    write_artifact(ctx, "preset_list.csv", csv.str(), true);
}

// ---- wiring ----------------------------------------------------------------

struct CommonFlags {
    std::string config, out, preset, preset_params, spec, spec_json, plot, plot_data;
    std::uint64_t seed = 12345;
    bool out_given = false, seed_given = false;
};

void add_field_flags(CLI::App* cmd, CommonFlags& cf) {
    cmd->add_option("--preset", cf.preset, "catalogue entry name");
    cmd->add_option("--preset-params", cf.preset_params, "JSON parameters for the preset");
    cmd->add_option("--spec", cf.spec, "field-spec JSON file");
    cmd->add_option("--spec-json", cf.spec_json, "inline field-spec JSON");
}

void add_common_flags(CLI::App* cmd, CommonFlags& cf) {
    cmd->add_option("--config", cf.config, "JSON config file; its keys override flags");
    cmd->add_option("--out", cf.out, "output directory")->each([&](const std::string&) {
        cf.out_given = true;
    });
    cmd->add_option("--seed", cf.seed, "seed for randomized checks")
        ->each([&](const std::string&) { cf.seed_given = true; });
}

void add_plot_flags(CLI::App* cmd, CommonFlags& cf) {
    cmd->add_option("--plot", cf.plot,
                    "emit an SVG: orbit, deviation-vs-t, divisor-spectrum, zeta-scatter");
    cmd->add_option("--plot-data", cf.plot_data, "plot this CSV instead of the run's own");
}

int dispatch(const std::string& command, const CommonFlags& cf, json cfg,
             void (*runner)(RunContext&)) {
    RunContext ctx;
    ctx.command = command;

    cfg["preset"] = cf.preset;
    cfg["preset_params"] = cf.preset_params;
    cfg["spec"] = cf.spec;
    cfg["spec_json"] = cf.spec_json;
    cfg["plot"] = cf.plot;
    cfg["plot_data"] = cf.plot_data;
    if (cf.out_given) cfg["out"] = cf.out;
    if (cf.seed_given) cfg["seed"] = cf.seed;
    merge_config_file(cfg, cf.config);

    if (const char* env = std::getenv("TORUSFLOW_OUT")) ctx.out_dir = env;
    if (cf.out_given) ctx.out_dir = cf.out;
    if (cfg.contains("out")) ctx.out_dir = str_at(cfg, "out");
    if (ctx.out_dir.empty()) ctx.out_dir = ".";
    if (cfg.contains("seed")) ctx.seed = static_cast<std::uint64_t>(int_at(cfg, "seed"));
    else ctx.seed = cf.seed;
    cfg["out"] = ctx.out_dir;
    cfg["seed"] = ctx.seed;
    ctx.cfg = std::move(cfg);

    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw SpecError("cannot create output directory: " + ctx.out_dir);

    runner(ctx);
    finish_run(ctx);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"torusflow — numerical laboratory for periodic flows on the torus"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    struct Pending {
        std::string command;
        json cfg;
        void (*runner)(RunContext&) = nullptr;
    } pending;
    CommonFlags cf;

    // simulate
    {
        auto* c = app.add_subcommand("simulate", "integrate one orbit and export it");
        static std::string x;
        static double t = 10, tol = 1e-8;
        static long long samples = 400;
        add_common_flags(c, cf);
        add_field_flags(c, cf);
        add_plot_flags(c, cf);
        c->add_option("--x", x, "start point, comma separated");
        c->add_option("--t", t, "integration time (<= 1e6)");
        c->add_option("--tol", tol, "integrator tolerance");
        c->add_option("--samples", samples, "CSV sample count (<= 1e4)");
        c->callback([&] {
            pending = {"simulate",
                       json{{"x", x}, {"t", t}, {"tol", tol}, {"samples", samples}},
                       &run_simulate};
        });
    }
    // rotation / deviation share their knobs
    {
        static std::string grid = "5x5", zeta;
        static double horizon = 1000, tol = 1e-8;
        static long long threads = 0;
        for (const bool dev : {false, true}) {
            auto* c = app.add_subcommand(dev ? "deviation" : "rotation",
                                         dev ? "sup |X(t,x) - x - t zeta| on a start grid"
                                             : "rotation-vector estimates on a start grid");
            add_common_flags(c, cf);
            add_field_flags(c, cf);
            add_plot_flags(c, cf);
            c->add_option("--grid", grid, "start grid shape, e.g. 5x5");
            c->add_option("--horizon", horizon, "time horizon (<= 1e6)");
            c->add_option("--tol", tol, "integrator tolerance");
            c->add_option("--threads", threads, "worker count, 0 = hardware");
            c->add_option("--zeta", zeta, "fixed rotation vector override");
            c->callback([&, dev] {
                pending = {dev ? "deviation" : "rotation",
                           json{{"grid", grid},
                                {"horizon", horizon},
                                {"tol", tol},
                                {"threads", threads},
                                {"zeta", zeta}},
                           dev ? +[](RunContext& ctx) { run_grid_rotation(ctx, true); }
                               : +[](RunContext& ctx) { run_grid_rotation(ctx, false); }};
            });
        }
    }
    // herman
    {
        auto* c = app.add_subcommand("herman", "sampled inner approximation of the rotation set");
        static std::string grid = "6x6";
        static double horizon = 2000, tol = 1e-8;
        static long long threads = 0;
        add_common_flags(c, cf);
        add_field_flags(c, cf);
        add_plot_flags(c, cf);
        c->add_option("--grid", grid, "start grid shape");
        c->add_option("--horizon", horizon, "time horizon (<= 1e6)");
        c->add_option("--tol", tol, "integrator tolerance");
        c->add_option("--threads", threads, "worker count, 0 = hardware");
        c->callback([&] {
            pending = {"herman",
                       json{{"grid", grid}, {"horizon", horizon}, {"tol", tol}, {"threads", threads}},
                       &run_herman};
        });
    }
    // theta
    {
        auto* c = app.add_subcommand("theta", "small-divisor corrector of a profile flow");
        static long long cap = 0, samples = 40;
        add_common_flags(c, cf);
        add_field_flags(c, cf);
        add_plot_flags(c, cf);
        c->add_option("--cap", cap, "mode cutoff |n|_inf (0 = full support, <= 1e4)");
        c->add_option("--samples", samples, "gradient identity spot checks (0 = skip)");
        c->callback([&] {
            pending = {"theta", json{{"cap", cap}, {"samples", samples}}, &run_theta};
        });
    }
    // liouville
    {
        auto* c = app.add_subcommand("liouville", "near-resonant construction certificates");
        static long long terms = 3, sign = 1;
        static std::string report = "certificates";
        add_common_flags(c, cf);
        c->add_option("--terms", terms, "stored profile terms (1..5)");
        c->add_option("--sign", sign, "direction sign (+1/-1)");
        c->add_option("--report", report, "certificates | theta-growth");
        c->callback([&] {
            pending = {"liouville", json{{"terms", terms}, {"sign", sign}, {"report", report}},
                       &run_liouville};
        });
    }
    // classify
    {
        auto* c = app.add_subcommand("classify", "continued-fraction / irrationality evidence");
        static std::string value;
        static long long depth = 40;
        add_common_flags(c, cf);
        c->add_option("--value", value, "golden | sqrt2 | pi | liouville | p/q | decimal");
        c->add_option("--depth", depth, "expansion depth (<= 1e4)");
        c->callback([&] {
            pending = {"classify", json{{"value", value}, {"depth", depth}}, &run_classify};
        });
    }
    // reduce
    {
        auto* c = app.add_subcommand("reduce", "mean-gradient straightening of a flow");
        static std::string u;
        static long long grid_n = 32;
        static double tol = 1e-8;
        add_common_flags(c, cf);
        add_field_flags(c, cf);
        c->add_option("--u", u, "JSON file with the straightening components");
        c->add_option("--grid-n", grid_n, "verification grid per axis");
        c->add_option("--tol", tol, "gate tolerance");
        c->callback([&] {
            pending = {"reduce", json{{"u", u}, {"grid_n", grid_n}, {"tol", tol}}, &run_reduce};
        });
    }
    // verify
    {
        auto* c = app.add_subcommand("verify", "semigroup and lattice-equivariance checks");
        static std::string x, k;
        static double t1 = 5, t2 = 7, tol = 1e-8;
        add_common_flags(c, cf);
        add_field_flags(c, cf);
        c->add_option("--x", x, "base point");
        c->add_option("--t1", t1, "first time");
        c->add_option("--t2", t2, "second time");
        c->add_option("--k", k, "integer lattice shift, comma separated");
        c->add_option("--tol", tol, "integrator tolerance");
        c->callback([&] {
            pending = {"verify",
                       json{{"x", x}, {"t1", t1}, {"t2", t2}, {"k", k}, {"tol", tol}},
                       &run_verify};
        });
    }
    // preset
    {
        auto* c = app.add_subcommand("preset", "catalogue inspection");
        static std::string action = "list";
        add_common_flags(c, cf);
        c->add_option("action", action, "list");
        c->callback([&] { pending = {"preset", json{{"action", action}}, &run_preset}; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return dispatch(pending.command, cf, std::move(pending.cfg), pending.runner);
    } catch (const SpecError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const CertificationError& e) {
        std::cerr << "certification failure: " << e.what() << "\n";
        return 4;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    }
}
