#ifndef MGID_HARNESS_SEARCH_H_
#define MGID_HARNESS_SEARCH_H_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgid/harness/run_config.h"

namespace mgid::harness {

// One searched hyperparameter, addressed by a dotted RunConfig JSON key
// such as "designer.lr".
struct ParamRange {
  enum class Kind { kLogUniform, kUniform, kChoice };
  std::string key;
  Kind kind = Kind::kLogUniform;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<nlohmann::json> choices;
};

struct SearchSpec {
  std::vector<ParamRange> space;
  int n_batch = 8;
  long n_episodes = 1000;  // training episodes per round
  int rounds = 0;          // 0: until one survivor remains
  int workers = 1;
  std::uint64_t seed = 0;
  std::string output_dir = "runs/search";

  // Throws std::invalid_argument (e.g. n_batch < 2).
  void Validate() const;
};

SearchSpec SearchSpecFromJson(const nlohmann::json& j);

// Sets a dotted key, creating objects along the way.
void SetDotted(nlohmann::json& j, const std::string& key, const nlohmann::json& v);

// Draws one value per range.
std::vector<nlohmann::json> SampleTuple(const std::vector<ParamRange>& space,
                                        std::uint64_t seed, int index);

struct SearchResult {
  RunConfig best;
  int best_index = 0;
  std::vector<int> survivor_counts;  // before round 1, after each round
  // [round][candidate] score (NaN once eliminated).
  std::vector<std::vector<double>> scores;
};

// Random sampling with successive elimination: each round trains every
// survivor `n_episodes` more (in memory, so it continues from where it
// stopped), scores it by test welfare, and keeps the better ceil(n/2).
// Writes search.csv and best_config.json when write_files is set.
SearchResult SuccessiveEliminationSearch(const RunConfig& base,
                                         const SearchSpec& spec,
                                         bool write_files = true);

}  // namespace mgid::harness

#endif  // MGID_HARNESS_SEARCH_H_
