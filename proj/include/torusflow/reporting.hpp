#pragma once

// Deterministic artifact writers: CSV (shortest round-trip decimals, LF line
// endings, fixed separators -> bit-identical for identical inputs), run
// manifests, and a small hand-rolled SVG plotter.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace torusflow {

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}
    void header(const std::vector<std::string>& cols);
    void begin_row();
    void cell(double v);
    void cell(long long v);
    void cell(const std::string& v);
    void end_row();
    // convenience: full numeric row
    void row(const std::vector<double>& vals);

private:
    std::ostream& out_;
    bool first_in_row_ = true;
};

std::uint64_t fnv1a64(const std::string& data);
std::string fnv1a64_hex(const std::string& data);

struct RunManifest {
    std::string command;
    std::string version;
    nlohmann::json config() const;
    void set_config(const nlohmann::json& cfg);
    std::vector<std::string> outputs;
    double wall_ms = 0;
    std::uint64_t seed = 0;
    // hash over config + produced CSV bytes, echoed into SVG metadata
    std::string content_hash;

    nlohmann::json to_json() const;
    void write(const std::string& path) const;

private:
    std::string config_text_ = "{}";
};

// Minimal SVG line/scatter plots with axes, ticks and a metadata block.
class SvgPlot {
public:
    SvgPlot(int width = 760, int height = 500);
    void set_title(const std::string& t) { title_ = t; }
    void set_labels(const std::string& x, const std::string& y) {
        xlabel_ = x;
        ylabel_ = y;
    }
    void set_metadata(const std::string& m) { metadata_ = m; }
    void add_polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                      const std::string& color = "#1f6fb2", double width = 1.2);
    void add_scatter(const std::vector<double>& xs, const std::vector<double>& ys,
                     const std::string& color = "#b23a1f", double radius = 2.5);
    void add_segment(double x0, double y0, double x1, double y1,
                     const std::string& color = "#2a2a2a", double width = 1.5);
    void add_hline(double y, const std::string& color = "#777777");
    std::string render() const;
    void write(const std::string& path) const;

private:
    struct Series {
        int kind; // 0 polyline, 1 scatter, 2 segment, 3 hline
        std::vector<double> xs, ys;
        std::string color;
        double w;
    };
    int width_, height_;
    std::string title_, xlabel_, ylabel_, metadata_;
    std::vector<Series> series_;
};

} // namespace torusflow
