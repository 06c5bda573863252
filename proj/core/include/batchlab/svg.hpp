#pragma once

#include <string>
#include <vector>

namespace batchlab {

// Minimal CSV table: header row plus numeric cells, used by the plotter.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column_index(const std::string& name) const;  // throws if missing
};

CsvTable read_csv_table(const std::string& path);

struct PlotOptions {
    bool log_x{false};
    bool log_y{false};
    std::string title;
};

// Standalone SVG line chart of y_col against x_col. Output is
// byte-deterministic for a fixed input file.
void emit_plot(const std::string& csv_path, const std::string& x_col,
               const std::string& y_col, const PlotOptions& opts,
               const std::string& out_svg);

}  // namespace batchlab
