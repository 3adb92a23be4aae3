#include "subdiff/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace subdiff {

std::string format_float(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_history_csv(const std::string& path, const History& h,
                       const std::string& value_name) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "t," << value_name << "\n";
    for (Index j = 0; j < h.size(); ++j)
        out << format_float(h.mesh.nodes(j)) << ',' << format_float(h.values(j)) << "\n";
}

History read_history_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::string line;
    std::getline(in, line); // header
    std::vector<double> t, v;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("malformed history CSV line: " + line);
        t.push_back(std::stod(line.substr(0, comma)));
        v.push_back(std::stod(line.substr(comma + 1)));
    }
    History h;
    h.mesh.nodes = Eigen::Map<Vector>(t.data(), static_cast<Index>(t.size()));
    h.values = Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size()));
    return h;
}

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<Vector>& columns) {
    if (header.size() != columns.size())
        throw std::invalid_argument("write_table_csv: header/column count mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (std::size_t c = 0; c < header.size(); ++c)
        out << header[c] << (c + 1 < header.size() ? "," : "\n");
    const Index rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& col : columns)
        if (col.size() != rows) throw std::invalid_argument("write_table_csv: ragged columns");
    for (Index r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << format_float(columns[c](r)) << (c + 1 < columns.size() ? "," : "\n");
}

void write_loglog_svg(const std::string& path, const std::vector<SvgSeries>& series,
                      const std::string& x_label, const std::string& y_label) {
    constexpr int W = 720, H = 480, ML = 70, MR = 20, MT = 20, MB = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (s.x[i] > 0.0 && s.y[i] > 0.0) {
                xmin = std::min(xmin, s.x[i]);
                xmax = std::max(xmax, s.x[i]);
                ymin = std::min(ymin, s.y[i]);
                ymax = std::max(ymax, s.y[i]);
            }
        }
    if (!(xmax > 0.0) || !(ymax > 0.0)) { xmin = xmax = ymin = ymax = 1.0; }
    const double lx0 = std::log10(xmin), lx1 = std::log10(xmax * 1.0000001);
    const double ly0 = std::log10(ymin), ly1 = std::log10(ymax * 1.0000001);
    auto px = [&](double x) {
        return ML + (std::log10(x) - lx0) / std::max(1e-12, lx1 - lx0) * (W - ML - MR);
    };
    auto py = [&](double y) {
        return H - MB - (std::log10(y) - ly0) / std::max(1e-12, ly1 - ly0) * (H - MT - MB);
    };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
    out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    out << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\""
        << H - MB << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << H - MB
        << "\" stroke=\"black\"/>\n";
    // decade ticks
    for (int e = static_cast<int>(std::ceil(lx0)); e <= static_cast<int>(std::floor(lx1)); ++e) {
        const double x = px(std::pow(10.0, e));
        out << "<line x1=\"" << x << "\" y1=\"" << H - MB << "\" x2=\"" << x << "\" y2=\""
            << H - MB + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << x << "\" y=\"" << H - MB + 18
            << "\" font-size=\"11\" text-anchor=\"middle\">1e" << e << "</text>\n";
    }
    for (int e = static_cast<int>(std::ceil(ly0)); e <= static_cast<int>(std::floor(ly1)); ++e) {
        const double y = py(std::pow(10.0, e));
        out << "<line x1=\"" << ML - 5 << "\" y1=\"" << y << "\" x2=\"" << ML << "\" y2=\"" << y
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << ML - 8 << "\" y=\"" << y + 4
            << "\" font-size=\"11\" text-anchor=\"end\">1e" << e << "</text>\n";
    }
    out << "<text x=\"" << (ML + W - MR) / 2 << "\" y=\"" << H - 10
        << "\" font-size=\"13\" text-anchor=\"middle\">" << x_label << "</text>\n";
    out << "<text x=\"14\" y=\"" << (MT + H - MB) / 2
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << (MT + H - MB) / 2 << ")\">" << y_label << "</text>\n";

    int li = 0;
    for (const auto& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
            out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        }
        out << "\"/>\n";
        out << "<text x=\"" << W - MR - 150 << "\" y=\"" << MT + 16 + 16 * li << "\" font-size=\"12\" fill=\""
            << s.color << "\">" << s.label << "</text>\n";
        ++li;
    }
    out << "</svg>\n";
}

} // namespace subdiff
