#include "batchlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace batchlab {

std::size_t CsvTable::column_index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::runtime_error("no such column: " + name);
    return static_cast<std::size_t>(it - columns.begin());
}

CsvTable read_csv_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv file: " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) table.columns.push_back(cell);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": non-numeric cell '" + cell + "'");
            }
        }
        if (row.size() != table.columns.size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": ragged row");
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

constexpr double kWidth = 640.0, kHeight = 480.0;
constexpr double kMarginL = 70.0, kMarginR = 20.0, kMarginT = 40.0, kMarginB = 50.0;

}  // namespace

void emit_plot(const std::string& csv_path, const std::string& x_col,
               const std::string& y_col, const PlotOptions& opts,
               const std::string& out_svg) {
    CsvTable table = read_csv_table(csv_path);
    std::size_t xi = table.column_index(x_col);
    std::size_t yi = table.column_index(y_col);
    if (table.rows.empty()) throw std::runtime_error(csv_path + ": no data rows to plot");

    std::vector<std::pair<double, double>> pts;
    for (const auto& row : table.rows) {
        double x = row[xi], y = row[yi];
        if (std::isnan(x) || std::isnan(y)) continue;
        if (opts.log_x && !(x > 0.0))
            throw std::runtime_error("log x axis requires positive values in " + x_col);
        if (opts.log_y && !(y > 0.0))
            throw std::runtime_error("log y axis requires positive values in " + y_col);
        pts.emplace_back(opts.log_x ? std::log10(x) : x, opts.log_y ? std::log10(y) : y);
    }
    if (pts.empty()) throw std::runtime_error(csv_path + ": no plottable points");

    double xmin = pts[0].first, xmax = pts[0].first;
    double ymin = pts[0].second, ymax = pts[0].second;
    for (const auto& [x, y] : pts) {
        xmin = std::min(xmin, x); xmax = std::max(xmax, x);
        ymin = std::min(ymin, y); ymax = std::max(ymax, y);
    }
    if (xmax == xmin) { xmin -= 0.5; xmax += 0.5; }
    if (ymax == ymin) { ymin -= 0.5; ymax += 0.5; }

    double plot_w = kWidth - kMarginL - kMarginR;
    double plot_h = kHeight - kMarginT - kMarginB;
    auto px = [&](double x) { return kMarginL + (x - xmin) / (xmax - xmin) * plot_w; };
    auto py = [&](double y) { return kHeight - kMarginB - (y - ymin) / (ymax - ymin) * plot_h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
        << "\">\n";
    svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" fill=\"white\"/>\n";
    if (!opts.title.empty())
        svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
            << "font-family=\"sans-serif\" font-size=\"16\">" << opts.title << "</text>\n";

    // axes
    svg << "<line x1=\"" << kMarginL << "\" y1=\"" << kHeight - kMarginB << "\" x2=\""
        << kWidth - kMarginR << "\" y2=\"" << kHeight - kMarginB
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT << "\" x2=\"" << kMarginL
        << "\" y2=\"" << kHeight - kMarginB << "\" stroke=\"black\"/>\n";

    constexpr int kTicks = 5;
    for (int t = 0; t <= kTicks; ++t) {
        double fx = xmin + (xmax - xmin) * t / kTicks;
        double fy = ymin + (ymax - ymin) * t / kTicks;
        double tx = px(fx), ty = py(fy);
        double label_x = opts.log_x ? std::pow(10.0, fx) : fx;
        double label_y = opts.log_y ? std::pow(10.0, fy) : fy;
        svg << "<line x1=\"" << num(tx) << "\" y1=\"" << kHeight - kMarginB << "\" x2=\""
            << num(tx) << "\" y2=\"" << kHeight - kMarginB + 5 << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << num(tx) << "\" y=\"" << kHeight - kMarginB + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << num(label_x) << "</text>\n";
        svg << "<line x1=\"" << kMarginL - 5 << "\" y1=\"" << num(ty) << "\" x2=\"" << kMarginL
            << "\" y2=\"" << num(ty) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << kMarginL - 8 << "\" y=\"" << num(ty + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << num(label_y) << "</text>\n";
    }

    svg << "<text x=\"" << kMarginL + plot_w / 2 << "\" y=\"" << kHeight - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_col
        << (opts.log_x ? " (log)" : "") << "</text>\n";
    svg << "<text x=\"16\" y=\"" << kMarginT + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 16 " << kMarginT + plot_h / 2 << ")\">" << y_col
        << (opts.log_y ? " (log)" : "") << "</text>\n";

    svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) svg << ' ';
        svg << num(px(pts[i].first)) << ',' << num(py(pts[i].second));
    }
    svg << "\"/>\n";
    for (const auto& [x, y] : pts)
        svg << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y))
            << "\" r=\"2.5\" fill=\"#1f77b4\"/>\n";
    svg << "</svg>\n";

    std::ofstream out(out_svg);
    if (!out) throw std::runtime_error("cannot write svg file: " + out_svg);
    out << svg.str();
}

}  // namespace batchlab
