#include "qswitch/cli/output.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <openssl/evp.h>

#include "qswitch/errors.hpp"
#include "qswitch/format.hpp"

namespace qswitch::cli {

namespace {

using namespace svg_layout;

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Span {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("plot data must be finite");
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void widen() {
        if (!(hi > lo)) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

struct Transform {
    Span x, y;
    double left = kLeft, right = kRight, top = kTop, bottom = kBottom;
    double px(double v) const { return left + (v - x.lo) / (x.hi - x.lo) * (right - left); }
    double py(double v) const { return bottom - (v - y.lo) / (y.hi - y.lo) * (bottom - top); }
};

const char* kPalette[] = {"#1f4e9c", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#2c3e50"};

void open_svg(std::ostringstream& out, const PlotLabels& labels) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" fill=\"white\"/>\n"
        << "<text x=\"" << fixed(0.5 * (kLeft + kRight)) << "\" y=\"24\" "
        << "text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
        << escape(labels.title) << "</text>\n";
}

void axes(std::ostringstream& out, const Transform& tr, const PlotLabels& labels) {
    out << "<rect x=\"" << fixed(kLeft) << "\" y=\"" << fixed(kTop) << "\" width=\""
        << fixed(kRight - kLeft) << "\" height=\"" << fixed(kBottom - kTop)
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = tr.x.lo + (tr.x.hi - tr.x.lo) * i / 4.0;
        const double px = tr.px(xv);
        out << "<line x1=\"" << fixed(px) << "\" y1=\"" << fixed(kBottom) << "\" x2=\""
            << fixed(px) << "\" y2=\"" << fixed(kBottom + 5) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << fixed(px) << "\" y=\"" << fixed(kBottom + 19)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << tick_label(xv) << "</text>\n";
        const double yv = tr.y.lo + (tr.y.hi - tr.y.lo) * i / 4.0;
        const double py = tr.py(yv);
        out << "<line x1=\"" << fixed(kLeft - 5) << "\" y1=\"" << fixed(py) << "\" x2=\""
            << fixed(kLeft) << "\" y2=\"" << fixed(py) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << fixed(kLeft - 8) << "\" y=\"" << fixed(py + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << tick_label(yv) << "</text>\n";
    }
    out << "<text x=\"" << fixed(0.5 * (kLeft + kRight)) << "\" y=\"" << fixed(kHeight - 14)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << escape(labels.x_label) << "</text>\n"
        << "<text x=\"18\" y=\"" << fixed(0.5 * (kTop + kBottom))
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 18 " << fixed(0.5 * (kTop + kBottom)) << ")\">"
        << escape(labels.y_label) << "</text>\n";
}

void polylines(std::ostringstream& out, const Transform& tr, const std::vector<Series>& series,
               bool dashed) {
    for (std::size_t s = 0; s < series.size(); ++s) {
        const Series& ser = series[s];
        out << "<polyline fill=\"none\" stroke=\"" << kPalette[s % std::size(kPalette)]
            << "\" stroke-width=\"1.5\"" << (dashed ? " stroke-dasharray=\"6 4\"" : "")
            << " points=\"";
        for (std::size_t i = 0; i < ser.x.size(); ++i) {
            out << (i ? " " : "") << fixed(tr.px(ser.x[i])) << ',' << fixed(tr.py(ser.y[i]));
        }
        out << "\"/>\n";
    }
    // legend
    for (std::size_t s = 0; s < series.size(); ++s) {
        const double y = kTop + 14.0 + 16.0 * static_cast<double>(s);
        out << "<text x=\"" << fixed(kRight - 6) << "\" y=\"" << fixed(y)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
            << kPalette[s % std::size(kPalette)] << "\">" << escape(series[s].name)
            << "</text>\n";
    }
}

void check_series(const std::vector<Series>& series) {
    for (const Series& s : series) {
        if (s.x.size() != s.y.size()) {
            throw DimensionError("series '" + s.name + "' has mismatched x and y lengths");
        }
        if (s.x.empty()) {
            throw InvalidArgument("series '" + s.name + "' is empty");
        }
    }
}

}  // namespace

std::string format_csv(const std::vector<Column>& columns) {
    if (columns.empty()) {
        throw InvalidArgument("CSV needs at least one column");
    }
    const std::size_t n = columns.front().values.size();
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c].values.size() != n) {
            throw DimensionError("CSV column '" + columns[c].name + "' has a different length");
        }
        out += (c ? "," : "") + columns[c].name;
    }
    out += '\n';
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) {
                out += ',';
            }
            out += format_double(columns[c].values[i]);
        }
        out += '\n';
    }
    return out;
}

int color_index(double v, double lo, double hi) {
    if (!(hi > lo)) {
        return 0;
    }
    const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    return static_cast<int>(std::lround(255.0 * t));
}

std::string line_svg(const std::vector<Series>& series, const PlotLabels& labels) {
    if (series.empty()) {
        throw InvalidArgument("plot has no data");
    }
    check_series(series);
    Transform tr;
    for (const Series& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            tr.x.add(s.x[i]);
            tr.y.add(s.y[i]);
        }
    }
    tr.x.widen();
    tr.y.widen();
    std::ostringstream out;
    open_svg(out, labels);
    axes(out, tr, labels);
    polylines(out, tr, series, false);
    out << "</svg>\n";
    return out.str();
}

std::string heatmap_svg(const std::vector<double>& x, const std::vector<double>& y,
                        const Eigen::MatrixXd& values, const PlotLabels& labels,
                        const std::vector<Series>& overlays) {
    if (x.empty() || y.empty()) {
        throw InvalidArgument("heat map has no data");
    }
    if (values.rows() != static_cast<Eigen::Index>(y.size()) ||
        values.cols() != static_cast<Eigen::Index>(x.size())) {
        throw DimensionError("heat map values must be |y| x |x|");
    }
    check_series(overlays);
    Span v;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        v.add(values.data()[i]);
    }
    Transform tr;
    for (double xv : x) {
        tr.x.add(xv);
    }
    for (double yv : y) {
        tr.y.add(yv);
    }
    tr.x.widen();
    tr.y.widen();
    const double cw = (kRight - kLeft) / static_cast<double>(x.size());
    const double ch = (kBottom - kTop) / static_cast<double>(y.size());

    std::ostringstream out;
    open_svg(out, labels);
    for (std::size_t j = 0; j < y.size(); ++j) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const int k = color_index(values(static_cast<Eigen::Index>(j),
                                             static_cast<Eigen::Index>(i)),
                                      v.lo, v.hi);
            out << "<rect x=\"" << fixed(kLeft + cw * static_cast<double>(i)) << "\" y=\""
                << fixed(kBottom - ch * static_cast<double>(j + 1)) << "\" width=\""
                << fixed(cw) << "\" height=\"" << fixed(ch) << "\" fill=\"rgb(" << k << ",0,"
                << 255 - k << ")\"/>\n";
        }
    }
    // ticks and overlays refer to the cell centres
    Transform centres = tr;
    centres.left = kLeft + 0.5 * cw;
    centres.right = kRight - 0.5 * cw;
    centres.top = kTop + 0.5 * ch;
    centres.bottom = kBottom - 0.5 * ch;
    axes(out, centres, labels);
    for (const Series& s : overlays) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                throw InvalidArgument("plot data must be finite");
            }
        }
    }
    if (!overlays.empty()) {
        polylines(out, centres, overlays, true);
    }
    out << "</svg>\n";
    return out.str();
}

std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace qswitch::cli
