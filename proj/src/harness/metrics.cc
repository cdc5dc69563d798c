#include "mgid/harness/metrics.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mgid::harness {
namespace {

void AddIndexed(std::vector<std::string>& cols, const std::string& stem,
                int n) {
  for (int i = 0; i < n; ++i) cols.push_back(stem + "_" + std::to_string(i));
}

void Append(std::vector<double>& out, const std::vector<double>& v) {
  out.insert(out.end(), v.begin(), v.end());
}

}  // namespace

std::vector<std::string> MetricsColumns(EnvKind env, int agents) {
  std::vector<std::string> cols{"episode", "train_welfare", "test_welfare",
                                "psi"};
  AddIndexed(cols, "return", agents);
  if (env == EnvKind::kGtb) {
    cols.insert(cols.end(), {"prod", "eq", "swf"});
    AddIndexed(cols, "income_pre", agents);
    AddIndexed(cols, "income_post", agents);
    AddIndexed(cols, "tax", agents);
    AddIndexed(cols, "gather", agents);
    AddIndexed(cols, "build", agents);
    AddIndexed(cols, "trade", agents);
    AddIndexed(cols, "rate", envs::kGtbBrackets);
  }
  return cols;
}

std::vector<double> MetricsValues(EnvKind env, const MetricsRecord& r) {
  std::vector<double> v{static_cast<double>(r.episode), r.train_welfare,
                        r.test_welfare, r.psi};
  Append(v, r.agent_returns);
  if (env == EnvKind::kGtb) {
    v.insert(v.end(), {r.prod, r.eq, r.swf});
    Append(v, r.income_pre);
    Append(v, r.income_post);
    Append(v, r.tax);
    Append(v, r.gathers);
    Append(v, r.builds);
    Append(v, r.trades);
    Append(v, r.rates);
  }
  return v;
}

size_t Table::Column(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw std::out_of_range("no column named " + name);
}

std::vector<double> Table::Values(const std::string& name) const {
  const size_t c = Column(name);
  std::vector<double> out;
  for (const auto& row : rows) out.push_back(row.at(c));
  return out;
}

std::string FormatNumber(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string TableToCsv(const Table& t) {
  std::string out;
  for (size_t i = 0; i < t.columns.size(); ++i) {
    out += (i ? "," : "") + t.columns[i];
  }
  out += "\n";
  for (const auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      out += (i ? "," : "") + FormatNumber(row[i]);
    }
    out += "\n";
  }
  return out;
}

Table ParseCsv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw std::runtime_error("CSV has no header");
  }
  {
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) t.columns.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != t.columns.size()) {
      throw std::runtime_error("CSV row has " + std::to_string(row.size()) +
                               " cells, expected " +
                               std::to_string(t.columns.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void WriteTextFile(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

MetricsWriter::MetricsWriter(std::string path, EnvKind env, int agents)
    : path_(std::move(path)), env_(env) {
  table_.columns = MetricsColumns(env, agents);
  if (!path_.empty()) WriteTextFile(path_, TableToCsv(table_));
}

void MetricsWriter::Append(const MetricsRecord& r) {
  std::vector<double> row = MetricsValues(env_, r);
  if (row.size() != table_.columns.size()) {
    throw std::logic_error("metrics record does not match the CSV schema");
  }
  table_.rows.push_back(row);
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + path_);
  for (size_t i = 0; i < row.size(); ++i) {
    out << (i ? "," : "") << FormatNumber(row[i]);
  }
  out << "\n";
}

}  // namespace mgid::harness
