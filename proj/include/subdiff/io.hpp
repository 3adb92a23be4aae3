#pragma once

#include "subdiff/frac_calculus.hpp"

#include <string>
#include <vector>

namespace subdiff {

/// 17-significant-digit decimal rendering used by every CSV/report writer so
/// outputs are byte-identical across runs.
std::string format_float(double v);

/// Two-column (t, value) CSV with a header row.
void write_history_csv(const std::string& path, const History& h,
                       const std::string& value_name = "value");
History read_history_csv(const std::string& path);

/// General table: columns of equal length, comma separated, header row.
void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<Vector>& columns);

/// Minimal static SVG: log-log polylines on shared axes.
struct SvgSeries {
    std::string label;
    std::string color;
    std::vector<double> x, y;
};
void write_loglog_svg(const std::string& path, const std::vector<SvgSeries>& series,
                      const std::string& x_label, const std::string& y_label);

} // namespace subdiff
