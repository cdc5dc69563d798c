#include "mgid/harness/plots.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgid::harness {
namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                               "#ff7f0e", "#8c564b", "#17becf"};

std::string Escape(const std::string& s) {
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

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Range {
  double lo, hi;
};

Range Pad(double lo, double hi) {
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  return {lo, hi};
}

std::string Header(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + Num(kWidth) +
         "\" height=\"" + Num(kHeight) + "\" viewBox=\"0 0 " + Num(kWidth) +
         " " + Num(kHeight) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         "<text x=\"" + Num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">" + Escape(title) + "</text>\n";
}

std::string Axes(Range x, Range y, const std::string& xlabel) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  std::string s = "<g stroke=\"black\" fill=\"none\"><line x1=\"" + Num(x0) +
                  "\" y1=\"" + Num(y0) + "\" x2=\"" + Num(x1) + "\" y2=\"" +
                  Num(y0) + "\"/><line x1=\"" + Num(x0) + "\" y1=\"" + Num(y0) +
                  "\" x2=\"" + Num(x0) + "\" y2=\"" + Num(y1) + "\"/></g>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int k = 0; k <= 4; ++k) {
    const double f = k / 4.0;
    const double vy = y.lo + f * (y.hi - y.lo);
    const double py = y0 - f * (y0 - y1);
    s += "<text x=\"" + Num(x0 - 6) + "\" y=\"" + Num(py + 4) +
         "\" text-anchor=\"end\">" + FormatNumber(std::round(vy * 100) / 100) +
         "</text>\n";
    if (x.hi > x.lo) {
      const double vx = x.lo + f * (x.hi - x.lo);
      const double px = x0 + f * (x1 - x0);
      s += "<text x=\"" + Num(px) + "\" y=\"" + Num(y0 + 16) +
           "\" text-anchor=\"middle\">" + FormatNumber(std::round(vx)) + "</text>\n";
    }
  }
  s += "<text x=\"" + Num((x0 + x1) / 2) + "\" y=\"" + Num(kHeight - 10) +
       "\" text-anchor=\"middle\">" + Escape(xlabel) + "</text>\n</g>\n";
  return s;
}

}  // namespace

std::string LineChartSvg(const std::string& title, const std::string& xlabel,
                         const std::vector<double>& xs,
                         const std::vector<Series>& series) {
  if (xs.empty()) throw std::invalid_argument("line chart needs points");
  double ylo = INFINITY, yhi = -INFINITY;
  for (const Series& s : series) {
    if (s.ys.size() != xs.size()) {
      throw std::invalid_argument("series length does not match x values");
    }
    for (double v : s.ys) {
      ylo = std::min(ylo, v);
      yhi = std::max(yhi, v);
    }
  }
  const Range x = Pad(*std::min_element(xs.begin(), xs.end()),
                      *std::max_element(xs.begin(), xs.end()));
  const Range y = Pad(ylo, yhi);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  auto px = [&](double v) { return x0 + (v - x.lo) / (x.hi - x.lo) * (x1 - x0); };
  auto py = [&](double v) { return y0 - (v - y.lo) / (y.hi - y.lo) * (y0 - y1); };

  std::string svg = Header(title) + Axes(x, y, xlabel);
  for (size_t k = 0; k < series.size(); ++k) {
    const char* color = kColors[k % std::size(kColors)];
    std::string pts;
    for (size_t i = 0; i < xs.size(); ++i) {
      pts += (i ? " " : "") + Num(px(xs[i])) + "," + Num(py(series[k].ys[i]));
    }
    svg += "<polyline class=\"series\" fill=\"none\" stroke=\"" +
           std::string(color) + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(k);
    svg += "<text x=\"" + Num(x1 + 10) + "\" y=\"" + Num(ly + 10) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" + color +
           "\">" + Escape(series[k].name) + "</text>\n";
  }
  return svg + "</svg>\n";
}

std::string BarChartSvg(const std::string& title,
                        const std::vector<std::string>& labels,
                        const std::vector<double>& values) {
  if (labels.size() != values.size() || values.empty()) {
    throw std::invalid_argument("bar chart needs one label per value");
  }
  double hi = 0.0;
  for (double v : values) hi = std::max(hi, v);
  const Range y{0.0, hi > 0.0 ? hi : 1.0};
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  std::string svg = Header(title) + Axes({0, 0}, y, "bracket");
  const double slot = (x1 - x0) / static_cast<double>(values.size());
  for (size_t k = 0; k < values.size(); ++k) {
    const double h = values[k] / (y.hi - y.lo) * (y0 - y1);
    const double left = x0 + slot * (static_cast<double>(k) + 0.15);
    svg += "<rect class=\"bar\" x=\"" + Num(left) + "\" y=\"" + Num(y0 - h) +
           "\" width=\"" + Num(slot * 0.7) + "\" height=\"" + Num(h) +
           "\" fill=\"#1f77b4\"/>\n";
    svg += "<text x=\"" + Num(left + slot * 0.35) + "\" y=\"" + Num(y0 + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           Escape(labels[k]) + "</text>\n";
  }
  return svg + "</svg>\n";
}

std::vector<std::string> EmitPlots(const Table& metrics, const std::string& dir) {
  if (metrics.rows.empty()) throw std::invalid_argument("no metrics to plot");
  const std::vector<double> xs = metrics.Values("episode");
  std::vector<std::string> paths;
  auto write = [&](const std::string& name, const std::string& svg) {
    paths.push_back(dir + "/" + name);
    WriteTextFile(paths.back(), svg);
  };
  write("welfare.svg",
        LineChartSvg("Designer welfare", "episode", xs,
                     {{"train", metrics.Values("train_welfare")},
                      {"test", metrics.Values("test_welfare")}}));
  const bool gtb = std::find(metrics.columns.begin(), metrics.columns.end(),
                             "swf") != metrics.columns.end();
  if (gtb) {
    write("swf.svg", LineChartSvg("Social welfare", "episode", xs,
                                  {{"swf", metrics.Values("swf")}}));
    write("eq.svg", LineChartSvg("Equality", "episode", xs,
                                 {{"eq", metrics.Values("eq")}}));
    write("prod.svg", LineChartSvg("Productivity", "episode", xs,
                                   {{"prod", metrics.Values("prod")}}));
    std::vector<std::string> labels;
    std::vector<double> rates;
    for (int b = 0;; ++b) {
      const std::string col = "rate_" + std::to_string(b);
      if (std::find(metrics.columns.begin(), metrics.columns.end(), col) ==
          metrics.columns.end()) {
        break;
      }
      labels.push_back(std::to_string(b));
      rates.push_back(metrics.rows.back()[metrics.Column(col)]);
    }
    write("tax_rates.svg", BarChartSvg("Marginal tax rate per bracket", labels, rates));
  }
  return paths;
}

}  // namespace mgid::harness
