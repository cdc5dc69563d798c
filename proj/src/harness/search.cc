#include "mgid/harness/search.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "mgid/harness/metrics.h"
#include "mgid/harness/runner.h"

namespace mgid::harness {

using nlohmann::json;

void SearchSpec::Validate() const {
  if (n_batch < 2) throw std::invalid_argument("search needs n_batch >= 2");
  if (n_episodes <= 0) throw std::invalid_argument("search needs n_episodes > 0");
  if (rounds < 0) throw std::invalid_argument("search rounds must be >= 0");
  if (workers < 1) throw std::invalid_argument("search needs >= 1 worker");
  for (const ParamRange& p : space) {
    if (p.key.empty()) throw std::invalid_argument("search key is empty");
    switch (p.kind) {
      case ParamRange::Kind::kLogUniform:
        if (!(p.lo > 0.0 && p.lo <= p.hi)) {
          throw std::invalid_argument("log-uniform range needs 0 < lo <= hi: " + p.key);
        }
        break;
      case ParamRange::Kind::kUniform:
        if (!(p.lo <= p.hi)) throw std::invalid_argument("uniform range needs lo <= hi: " + p.key);
        break;
      case ParamRange::Kind::kChoice:
        if (p.choices.empty()) throw std::invalid_argument("choice needs values: " + p.key);
        break;
    }
  }
}

SearchSpec SearchSpecFromJson(const json& j) {
  SearchSpec s;
  s.n_batch = j.value("n_batch", s.n_batch);
  s.n_episodes = j.value("n_episodes", s.n_episodes);
  s.rounds = j.value("rounds", s.rounds);
  s.workers = j.value("workers", s.workers);
  s.seed = j.value("seed", s.seed);
  s.output_dir = j.value("output_dir", s.output_dir);
  for (const json& p : j.value("space", json::array())) {
    ParamRange r;
    r.key = p.at("key").get<std::string>();
    const std::string kind = p.value("kind", "log_uniform");
    if (kind == "log_uniform") {
      r.kind = ParamRange::Kind::kLogUniform;
    } else if (kind == "uniform") {
      r.kind = ParamRange::Kind::kUniform;
    } else if (kind == "choice") {
      r.kind = ParamRange::Kind::kChoice;
      for (const json& v : p.at("values")) r.choices.push_back(v);
    } else {
      throw std::invalid_argument("unknown search range kind: " + kind);
    }
    if (r.kind != ParamRange::Kind::kChoice) {
      r.lo = p.at("lo").get<double>();
      r.hi = p.at("hi").get<double>();
    }
    s.space.push_back(std::move(r));
  }
  s.Validate();
  return s;
}

void SetDotted(json& j, const std::string& key, const json& v) {
  json* node = &j;
  size_t start = 0;
  while (true) {
    const size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (dot == std::string::npos) {
      (*node)[part] = v;
      return;
    }
    if (!node->contains(part) || !(*node)[part].is_object()) {
      (*node)[part] = json::object();
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

std::vector<json> SampleTuple(const std::vector<ParamRange>& space,
                              std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5eacu};
  std::mt19937_64 rng(seq);
  std::vector<json> out;
  for (const ParamRange& p : space) {
    switch (p.kind) {
      case ParamRange::Kind::kLogUniform: {
        std::uniform_real_distribution<double> u(std::log(p.lo), std::log(p.hi));
        out.emplace_back(std::exp(u(rng)));
        break;
      }
      case ParamRange::Kind::kUniform: {
        std::uniform_real_distribution<double> u(p.lo, p.hi);
        out.emplace_back(u(rng));
        break;
      }
      case ParamRange::Kind::kChoice: {
        std::uniform_int_distribution<size_t> u(0, p.choices.size() - 1);
        out.push_back(p.choices[u(rng)]);
        break;
      }
    }
  }
  return out;
}

namespace {

std::string CsvCell(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

// Runs fn(i) for each i, spreading the indices over `workers` threads.
// Each index touches only its own trainer and slot.
template <typename Fn>
void ParallelFor(const std::vector<int>& items, int workers, Fn fn) {
  const int n = static_cast<int>(items.size());
  const int w = std::max(1, std::min(workers, n));
  if (w == 1) {
    for (int i : items) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(w);
  for (int t = 0; t < w; ++t) {
    threads.emplace_back([&, t] {
      try {
        for (int k = t; k < n; k += w) fn(items[k]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (std::thread& th : threads) th.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

SearchResult SuccessiveEliminationSearch(const RunConfig& base,
                                         const SearchSpec& spec,
                                         bool write_files) {
  spec.Validate();
  const json base_json = RunConfigToJson(base);
  const int n = spec.n_batch;
  std::vector<RunConfig> configs;
  std::vector<std::vector<json>> tuples;
  for (int i = 0; i < n; ++i) {
    tuples.push_back(SampleTuple(spec.space, spec.seed, i));
    json j = base_json;
    for (size_t k = 0; k < spec.space.size(); ++k) {
      SetDotted(j, spec.space[k].key, tuples.back()[k]);
    }
    RunConfig c = RunConfigFromJson(j);
    c.output_dir = spec.output_dir + "/candidate" + std::to_string(i);
    c.Validate();
    configs.push_back(std::move(c));
  }
  std::vector<std::unique_ptr<Trainable>> trainers(n);

  SearchResult result;
  std::vector<int> alive(n);
  std::iota(alive.begin(), alive.end(), 0);
  result.survivor_counts.push_back(n);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> csv_rows;

  for (int round = 1; alive.size() > 1 && (spec.rounds == 0 || round <= spec.rounds);
       ++round) {
    std::vector<double> score(n, nan);
    ParallelFor(alive, spec.workers, [&](int i) {
      if (!trainers[i]) trainers[i] = MakeTrainer(configs[i]);
      trainers[i]->TrainEpisodes(spec.n_episodes);
      const double s = trainers[i]->Evaluate(configs[i].eval_episodes).test_welfare;
      // A diverged candidate ranks last.
      score[i] = std::isfinite(s) ? s : -std::numeric_limits<double>::infinity();
    });
    std::vector<int> ranked = alive;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](int a, int b) { return score[a] > score[b]; });
    const size_t keep = (ranked.size() + 1) / 2;
    std::vector<int> next(ranked.begin(), ranked.begin() + static_cast<long>(keep));
    std::sort(next.begin(), next.end());
    for (int i : alive) {
      const bool survived = std::find(next.begin(), next.end(), i) != next.end();
      std::string row = std::to_string(round) + "," + std::to_string(i) + "," +
                        FormatNumber(score[i]) + "," + (survived ? "1" : "0");
      for (const json& v : tuples[i]) row += "," + CsvCell(v.dump());
      csv_rows.push_back(row);
    }
    // Free eliminated trainers.
    for (int i : alive) {
      if (std::find(next.begin(), next.end(), i) == next.end()) trainers[i].reset();
    }
    alive = next;
    result.survivor_counts.push_back(static_cast<int>(alive.size()));
    result.scores.push_back(score);
  }

  result.best_index = alive.front();
  result.best = configs[result.best_index];
  result.best.output_dir = base.output_dir;
  if (write_files) {
    std::string csv = "round,candidate,score,survived";
    for (const ParamRange& p : spec.space) csv += "," + p.key;
    csv += "\n";
    for (const std::string& r : csv_rows) csv += r + "\n";
    WriteTextFile(spec.output_dir + "/search.csv", csv);
    WriteTextFile(spec.output_dir + "/best_config.json",
                  RunConfigToJson(result.best).dump(2) + "\n");
  }
  return result;
}

}  // namespace mgid::harness
