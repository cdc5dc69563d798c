#ifndef MGID_HARNESS_METRICS_H_
#define MGID_HARNESS_METRICS_H_

#include <string>
#include <vector>

#include "mgid/harness/run_config.h"

namespace mgid::harness {

// One evaluation row. GTB-only fields stay empty for Escape Room.
struct MetricsRecord {
  long episode = 0;
  double train_welfare = 0.0;
  double test_welfare = 0.0;
  double psi = 0.0;
  std::vector<double> agent_returns;
  // GTB: per-agent values are ordered by build skill (lowest first).
  double prod = 0.0;
  double eq = 0.0;
  double swf = 0.0;
  std::vector<double> income_pre;
  std::vector<double> income_post;
  std::vector<double> tax;
  std::vector<double> gathers;
  std::vector<double> builds;
  std::vector<double> trades;
  std::vector<double> rates;  // mean emitted marginal rate per bracket
};

// Column names in file order.
std::vector<std::string> MetricsColumns(EnvKind env, int agents);
std::vector<double> MetricsValues(EnvKind env, const MetricsRecord& r);

// A parsed CSV: header plus numeric rows.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  // Index of a column; throws std::out_of_range.
  size_t Column(const std::string& name) const;
  std::vector<double> Values(const std::string& name) const;
};

// Fixed-format numbers ("%.10g") so reruns are byte-identical.
std::string FormatNumber(double v);
std::string TableToCsv(const Table& t);
Table ParseCsv(const std::string& text);
// Throws std::runtime_error for an unwritable or unreadable path.
void WriteTextFile(const std::string& path, const std::string& text);
std::string ReadTextFile(const std::string& path);

// Appends rows to a metrics CSV as they arrive (single writer per run).
class MetricsWriter {
 public:
  MetricsWriter(std::string path, EnvKind env, int agents);
  void Append(const MetricsRecord& r);
  const Table& table() const { return table_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  EnvKind env_;
  Table table_;
};

}  // namespace mgid::harness

#endif  // MGID_HARNESS_METRICS_H_
