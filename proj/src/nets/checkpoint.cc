#include "mgid/nets/checkpoint.h"

#include <fstream>
#include <stdexcept>

namespace mgid::nets {

nlohmann::json CheckpointToJson(const Checkpoint& ckpt) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, m] : ckpt) {
    nlohmann::json rows = nlohmann::json::array();
    for (dg::Index r = 0; r < m.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (dg::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    j[key] = std::move(rows);
  }
  return j;
}

Checkpoint CheckpointFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw std::runtime_error("checkpoint must be an object");
  Checkpoint ckpt;
  for (const auto& [key, rows] : j.items()) {
    if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
      throw std::runtime_error("checkpoint entry '" + key +
                               "' must be a non-empty array of rows");
    }
    const auto n_rows = static_cast<dg::Index>(rows.size());
    const auto n_cols = static_cast<dg::Index>(rows[0].size());
    dg::Matrix m(n_rows, n_cols);
    for (dg::Index r = 0; r < n_rows; ++r) {
      if (static_cast<dg::Index>(rows[r].size()) != n_cols) {
        throw std::runtime_error("checkpoint entry '" + key + "' is ragged");
      }
      for (dg::Index c = 0; c < n_cols; ++c) m(r, c) = rows[r][c].get<double>();
    }
    ckpt.emplace(key, std::move(m));
  }
  return ckpt;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << CheckpointToJson(ckpt).dump(1) << "\n";
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  return CheckpointFromJson(nlohmann::json::parse(in));
}

void AddBlock(Checkpoint& ckpt, const ParamBlock& block) {
  for (size_t i = 0; i < block.vars.size(); ++i) {
    ckpt[block.full_name(i)] = block.vars[i].value();
  }
}

void RestoreBlock(const Checkpoint& ckpt, ParamBlock& block) {
  std::vector<dg::Matrix> values;
  for (size_t i = 0; i < block.vars.size(); ++i) {
    auto it = ckpt.find(block.full_name(i));
    if (it == ckpt.end()) {
      throw std::runtime_error("checkpoint is missing " + block.full_name(i));
    }
    const dg::Matrix& m = it->second;
    if (m.rows() != block.vars[i].rows() || m.cols() != block.vars[i].cols()) {
      throw std::runtime_error("checkpoint shape mismatch for " +
                               block.full_name(i));
    }
    values.push_back(m);
  }
  block.Assign(values);
}

}  // namespace mgid::nets
