#ifndef MGID_HARNESS_PLOTS_H_
#define MGID_HARNESS_PLOTS_H_

#include <string>
#include <vector>

#include "mgid/harness/metrics.h"

namespace mgid::harness {

struct Series {
  std::string name;
  std::vector<double> ys;
};

// Self-contained SVG documents; output depends only on the arguments.
std::string LineChartSvg(const std::string& title, const std::string& xlabel,
                         const std::vector<double>& xs,
                         const std::vector<Series>& series);
std::string BarChartSvg(const std::string& title,
                        const std::vector<std::string>& labels,
                        const std::vector<double>& values);

// Writes the standard figures for a metrics table into `dir` and returns
// their paths: welfare.svg always; for GTB also swf.svg, eq.svg, prod.svg
// and tax_rates.svg (final-row rate per bracket). Throws
// std::invalid_argument for an empty table.
std::vector<std::string> EmitPlots(const Table& metrics, const std::string& dir);

}  // namespace mgid::harness

#endif  // MGID_HARNESS_PLOTS_H_
