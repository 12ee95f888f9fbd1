#include "torusflow/reporting.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "torusflow/errors.hpp"

namespace torusflow {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void CsvWriter::header(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) out_ << ',';
        out_ << cols[i];
    }
    out_ << '\n';
}

void CsvWriter::begin_row() { first_in_row_ = true; }

void CsvWriter::cell(double v) {
    if (!first_in_row_) out_ << ',';
    out_ << format_double(v);
    first_in_row_ = false;
}

void CsvWriter::cell(long long v) {
    if (!first_in_row_) out_ << ',';
    out_ << v;
    first_in_row_ = false;
}

void CsvWriter::cell(const std::string& v) {
    if (!first_in_row_) out_ << ',';
    out_ << v;
    first_in_row_ = false;
}

void CsvWriter::end_row() { out_ << '\n'; }

void CsvWriter::row(const std::vector<double>& vals) {
    begin_row();
    for (double v : vals) cell(v);
    end_row();
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& data) {
    static const char* hexd = "0123456789abcdef";
    std::uint64_t h = fnv1a64(data);
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = hexd[h & 0xF];
        h >>= 4;
    }
    return s;
}

json RunManifest::config() const { return json::parse(config_text_); }

void RunManifest::set_config(const json& cfg) { config_text_ = cfg.dump(); }

json RunManifest::to_json() const {
    json j;
    j["command"] = command;
    j["version"] = version;
    j["config"] = config();
    j["outputs"] = outputs;
    j["wall_ms"] = wall_ms;
    j["seed"] = seed;
    j["content_hash"] = content_hash;
    return j;
}

void RunManifest::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw SpecError("cannot write manifest: " + path);
    out << to_json().dump(2) << '\n';
}

namespace {

std::string fmt_tick(double v) {
    // short human tick label
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

} // namespace

SvgPlot::SvgPlot(int width, int height) : width_(width), height_(height) {}

void SvgPlot::add_polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                           const std::string& color, double width) {
    series_.push_back({0, xs, ys, color, width});
}

void SvgPlot::add_scatter(const std::vector<double>& xs, const std::vector<double>& ys,
                          const std::string& color, double radius) {
    series_.push_back({1, xs, ys, color, radius});
}

void SvgPlot::add_segment(double x0, double y0, double x1, double y1, const std::string& color,
                          double width) {
    series_.push_back({2, {x0, x1}, {y0, y1}, color, width});
}

void SvgPlot::add_hline(double y, const std::string& color) {
    series_.push_back({3, {}, {y}, color, 1.0});
}

std::string SvgPlot::render() const {
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool any = false;
    for (const auto& s : series_) {
        for (double v : s.xs) {
            if (!any) xmin = xmax = v;
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
            any = true;
        }
        for (double v : s.ys) {
            if (s.kind == 3 && !any) continue;
            ymin = any ? std::min(ymin, v) : v;
            ymax = any ? std::max(ymax, v) : v;
        }
    }
    if (!any) {
        xmin = ymin = 0;
        xmax = ymax = 1;
    }
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double ml = 62, mr = 16, mt = title_.empty() ? 14 : 30, mb = 44;
    const double pw = width_ - ml - mr, ph = height_ - mt - mb;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
       << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n";
    if (!metadata_.empty()) os << "<desc>" << metadata_ << "</desc>\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // frame
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    // ticks
    for (int i = 0; i <= 4; ++i) {
        double fx = xmin + (xmax - xmin) * i / 4.0;
        double fy = ymin + (ymax - ymin) * i / 4.0;
        os << "<line x1=\"" << px(fx) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(fx)
           << "\" y2=\"" << mt + ph + 4 << "\" stroke=\"#444\"/>\n";
        os << "<text x=\"" << px(fx) << "\" y=\"" << mt + ph + 16
           << "\" font-size=\"10\" text-anchor=\"middle\" font-family=\"monospace\">"
           << fmt_tick(fx) << "</text>\n";
        os << "<line x1=\"" << ml - 4 << "\" y1=\"" << py(fy) << "\" x2=\"" << ml << "\" y2=\""
           << py(fy) << "\" stroke=\"#444\"/>\n";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << py(fy) + 3
           << "\" font-size=\"10\" text-anchor=\"end\" font-family=\"monospace\">" << fmt_tick(fy)
           << "</text>\n";
    }
    if (!title_.empty())
        os << "<text x=\"" << width_ / 2.0
           << "\" y=\"18\" font-size=\"13\" text-anchor=\"middle\" font-family=\"monospace\">"
           << title_ << "</text>\n";
    if (!xlabel_.empty())
        os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height_ - 10
           << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"monospace\">" << xlabel_
           << "</text>\n";
    if (!ylabel_.empty())
        os << "<text x=\"14\" y=\"" << mt + ph / 2
           << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"monospace\" "
              "transform=\"rotate(-90 14 "
           << mt + ph / 2 << ")\">" << ylabel_ << "</text>\n";

    for (const auto& s : series_) {
        if (s.kind == 0) {
            os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << s.w
               << "\" points=\"";
            for (std::size_t i = 0; i < s.xs.size(); ++i)
                os << px(s.xs[i]) << "," << py(s.ys[i]) << " ";
            os << "\"/>\n";
        } else if (s.kind == 1) {
            for (std::size_t i = 0; i < s.xs.size(); ++i)
                os << "<circle cx=\"" << px(s.xs[i]) << "\" cy=\"" << py(s.ys[i]) << "\" r=\""
                   << s.w << "\" fill=\"" << s.color << "\" fill-opacity=\"0.75\"/>\n";
        } else if (s.kind == 2) {
            os << "<line x1=\"" << px(s.xs[0]) << "\" y1=\"" << py(s.ys[0]) << "\" x2=\""
               << px(s.xs[1]) << "\" y2=\"" << py(s.ys[1]) << "\" stroke=\"" << s.color
               << "\" stroke-width=\"" << s.w << "\"/>\n";
        } else {
            os << "<line x1=\"" << ml << "\" y1=\"" << py(s.ys[0]) << "\" x2=\"" << ml + pw
               << "\" y2=\"" << py(s.ys[0]) << "\" stroke=\"" << s.color
               << "\" stroke-dasharray=\"4 3\"/>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

void SvgPlot::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw SpecError("cannot write SVG: " + path);
    out << render();
}

} // namespace torusflow
