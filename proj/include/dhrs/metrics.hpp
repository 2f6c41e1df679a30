#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dhrs/image.hpp"
#include "dhrs/transport.hpp"

namespace dhrs {

// ---------------------------------------------------------------------------
// SSIM on Rec. 601 luma, 11x11 Gaussian window (sigma 1.5), valid windows only.

struct SsimParams {
    int radius = 5;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 255.0;
};

inline std::vector<double> luma(const Image& img) {
    std::vector<double> y(img.pixel_count());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::uint8_t* p = img.rgb.data() + 3 * i;
        y[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
    return y;
}

inline double ssim_luma(const std::vector<double>& a, const std::vector<double>& b, int width, int height,
                        const SsimParams& p = {}) {
    if (a.size() != b.size() || a.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("ssim: dimension mismatch");
    const int r = p.radius;
    if (width < 2 * r + 1 || height < 2 * r + 1) throw std::invalid_argument("ssim: image smaller than window");
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    double ks = 0.0;
    for (int i = -r; i <= r; ++i) ks += k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (p.sigma * p.sigma));
    for (auto& v : k) v /= ks;

    // Separable weighted moments: horizontal pass over all rows, then vertical at valid centers.
    const int ow = width - 2 * r;
    const int oh = height - 2 * r;
    std::vector<double> h[5];
    for (auto& v : h) v.assign(static_cast<std::size_t>(ow) * height, 0.0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s[5] = {0, 0, 0, 0, 0};
            for (int t = 0; t <= 2 * r; ++t) {
                const std::size_t i = static_cast<std::size_t>(y) * width + x + t;
                const double w = k[static_cast<std::size_t>(t)];
                s[0] += w * a[i];
                s[1] += w * b[i];
                s[2] += w * a[i] * a[i];
                s[3] += w * b[i] * b[i];
                s[4] += w * a[i] * b[i];
            }
            for (int c = 0; c < 5; ++c) h[c][static_cast<std::size_t>(y) * ow + x] = s[c];
        }
    }
    const double c1 = std::pow(p.k1 * p.dynamic_range, 2), c2 = std::pow(p.k2 * p.dynamic_range, 2);
    double total = 0.0;
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s[5] = {0, 0, 0, 0, 0};
            for (int t = 0; t <= 2 * r; ++t) {
                const std::size_t i = static_cast<std::size_t>(y + t) * ow + x;
                const double w = k[static_cast<std::size_t>(t)];
                for (int c = 0; c < 5; ++c) s[c] += w * h[c][i];
            }
            const double va = s[2] - s[0] * s[0], vb = s[3] - s[1] * s[1], cov = s[4] - s[0] * s[1];
            total += ((2 * s[0] * s[1] + c1) * (2 * cov + c2)) / ((s[0] * s[0] + s[1] * s[1] + c1) * (va + vb + c2));
        }
    }
    return total / (static_cast<double>(ow) * oh);
}

inline double ssim(const Image& a, const Image& b, const SsimParams& p = {}) {
    if (a.width != b.width || a.height != b.height) throw std::invalid_argument("ssim: dimension mismatch");
    return ssim_luma(luma(a), luma(b), a.width, a.height, p);
}

// ---------------------------------------------------------------------------
// Run records.

struct FrameRow {
    std::uint32_t frame_id = 0;
    Pass pass = Pass::visibility;
    std::uint64_t raw_bytes = 0;
    std::uint64_t compressed_bytes = 0;
    std::uint32_t packets = 0;
    bool delivered = false;
    std::optional<double> end_to_end_ms;
    std::optional<double> frame_time_ms;
    std::uint64_t delivered_wire_bytes = 0;  // datagram bytes that reached the client, complete or not
};

struct RunRecord {
    std::string name;
    std::vector<FrameRow> rows;
    double duration_s = 0.0;
    std::uint32_t ticks = 0;
    std::vector<double> ssim_per_tick;  // vs. the reference run, when one was given
    std::uint64_t channel_delivered_bytes = 0;
    double wall_seconds = 0.0;

    std::optional<double> mean_ssim() const {
        if (ssim_per_tick.empty()) return std::nullopt;
        double s = 0.0;
        for (double v : ssim_per_tick) s += v;
        return s / static_cast<double>(ssim_per_tick.size());
    }

    std::size_t delivered_frames(Pass p) const {
        std::size_t n = 0;
        for (const auto& r : rows) n += (r.pass == p && r.delivered);
        return n;
    }

    /// Completed frames per virtual second for one pass.
    double fps(Pass p) const { return duration_s > 0.0 ? delivered_frames(p) / duration_s : 0.0; }
};

inline constexpr const char* kCsvHeader =
    "frame_id,pass,raw_bytes,compressed_bytes,packets,delivered,end_to_end_ms,frame_time_ms";

inline std::string format_number(double v) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(3) << v;
    return ss.str();
}

inline std::string to_csv(const RunRecord& rec) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const auto& r : rec.rows) {
        out << r.frame_id << ',' << pass_name(r.pass) << ',' << r.raw_bytes << ',' << r.compressed_bytes << ','
            << r.packets << ',' << (r.delivered ? 1 : 0) << ','
            << (r.end_to_end_ms ? format_number(*r.end_to_end_ms) : "") << ','
            << (r.frame_time_ms ? format_number(*r.frame_time_ms) : "") << '\n';
    }
    return out.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

struct BandwidthReport {
    std::map<Pass, double> per_pass_bps;
    double total_bps = 0.0;
    std::uint64_t total_bytes = 0;
};

inline BandwidthReport measure_bandwidth(const RunRecord& rec, double window_s) {
    if (!(window_s > 0.0)) throw std::invalid_argument("bandwidth window must be > 0");
    BandwidthReport b;
    std::map<Pass, std::uint64_t> bytes;
    for (const auto& r : rec.rows) bytes[r.pass] += r.delivered_wire_bytes;
    for (const auto& [p, n] : bytes) {
        b.per_pass_bps[p] = static_cast<double>(n) * 8.0 / window_s;
        b.total_bytes += n;
    }
    b.total_bps = static_cast<double>(b.total_bytes) * 8.0 / window_s;
    return b;
}

// ---------------------------------------------------------------------------
// Least squares y = intercept + slope * x.

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: x values are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

// ---------------------------------------------------------------------------
// Minimal SVG line/scatter plot.

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

inline std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string render_svg_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                                   const std::vector<PlotSeries>& series) {
    const double W = 640, H = 420, L = 70, R = 160, T = 40, B = 55;
    double x0 = kInfinity, x1 = -kInfinity, y0 = kInfinity, y1 = -kInfinity;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x0 == x1) x0 -= 1, x1 += 1;
    if (y0 == y1) y0 -= 1, y1 += 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto sx = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
    auto sy = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    std::ostringstream o;
    o << std::fixed << std::setprecision(2);
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << svg_escape(title) << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = x0 + (x1 - x0) * t / 4.0, yv = y0 + (y1 - y0) * t / 4.0;
        o << "<text x=\"" << sx(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << format_number(xv) << "</text>\n";
        o << "<text x=\"" << L - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << format_number(yv) << "</text>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << svg_escape(x_label) << "</text>\n";
    o << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << svg_escape(y_label) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* c = colors[k % 10];
        if (s.x.size() > 1) {
            o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) o << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
            o << "\"/>\n";
        }
        for (std::size_t i = 0; i < s.x.size(); ++i)
            o << "<circle cx=\"" << sx(s.x[i]) << "\" cy=\"" << sy(s.y[i]) << "\" r=\"2.5\" fill=\"" << c << "\"/>\n";
        const double ly = T + 14 + 18 * static_cast<double>(k);
        o << "<rect x=\"" << W - R + 12 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\"" << c << "\"/>\n";
        o << "<text x=\"" << W - R + 28 << "\" y=\"" << ly << "\">" << svg_escape(s.name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace dhrs
