// Acceptance checks. Prints one PASS/FAIL line per criterion.
//   acceptance [criterion ...] [--out DIR]
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../common/tabular_game.h"
#include "mgid/agents/learners.h"
#include "mgid/envs/gtb.h"
#include "mgid/nets/policy.h"
#include "mgid/harness/plots.h"
#include "mgid/harness/runner.h"

namespace {

using namespace mgid;
using harness::RunConfig;
using nlohmann::json;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string g_out = "acceptance_runs";

std::string Fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

RunConfig LoadConfig(const std::string& name) {
  return harness::LoadRunConfig(std::string(MGID_CONFIG_DIR) + "/" + name);
}

double Mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string List(const std::vector<double>& v, int digits = 2) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + Fmt(x, digits);
  return s;
}

// Trains one run to budget, keeping metrics.csv under g_out.
harness::MetricsRecord Train(RunConfig c, const std::string& tag) {
  c.output_dir = g_out + "/" + tag;
  const harness::RunResult r = harness::TrainRun(c);
  std::printf("  %s: final test welfare %.4f\n", tag.c_str(),
              r.final_record.test_welfare);
  std::fflush(stdout);
  return r.final_record;
}

std::vector<double> SeedSweep(const std::string& config, const std::string& tag,
                              int seeds) {
  std::vector<double> out;
  for (int s = 1; s <= seeds; ++s) {
    RunConfig c = LoadConfig(config);
    c.seed = static_cast<std::uint64_t>(s);
    out.push_back(Train(c, tag + "_seed" + std::to_string(s)).test_welfare);
  }
  return out;
}

Outcome CountAtLeast(const std::vector<double>& finals, double bar, int need) {
  const int hits = static_cast<int>(
      std::count_if(finals.begin(), finals.end(), [&](double v) { return v >= bar; }));
  return {hits >= need, std::to_string(hits) + "/" + std::to_string(finals.size()) +
                            " seeds >= " + Fmt(bar, 1) + " (need " +
                            std::to_string(need) + "); finals: " + List(finals)};
}

Outcome Criterion1() { return CountAtLeast(SeedSweep("er_2_1.json", "c1_er_2_1", 8), 7.0, 6); }
Outcome Criterion2() { return CountAtLeast(SeedSweep("er_5_2.json", "c2_er_5_2", 8), 24.0, 5); }
Outcome Criterion3() { return CountAtLeast(SeedSweep("er_10_5.json", "c3_er_10_5", 4), 36.0, 3); }

// Each method picks its designer learning rate from the same grid on a
// held-out tuning seed, then runs on four evaluation seeds.
Outcome Criterion4() {
  const std::vector<double> grid{0.001, 0.003, 0.01, 0.03};
  const std::uint64_t tuning_seed = 100;
  const std::vector<std::pair<std::string, std::string>> methods{
      {"metagrad", "er_5_2.json"},
      {"dual_rl_discrete", "er_5_2_dual_rl_discrete.json"},
      {"dual_rl_continuous", "er_5_2_dual_rl_continuous.json"}};
  std::map<std::string, double> mean;
  std::string detail;
  for (const auto& [name, file] : methods) {
    double best_lr = grid.front(), best = -INFINITY;
    for (double lr : grid) {
      RunConfig c = LoadConfig(file);
      c.designer.lr = lr;
      c.seed = tuning_seed;
      const double w = Train(c, "c4_" + name + "_tune_lr" + Fmt(lr, 4)).test_welfare;
      if (w > best) {
        best = w;
        best_lr = lr;
      }
    }
    std::vector<double> finals;
    for (int s = 1; s <= 4; ++s) {
      RunConfig c = LoadConfig(file);
      c.designer.lr = best_lr;
      c.seed = static_cast<std::uint64_t>(s);
      finals.push_back(Train(c, "c4_" + name + "_seed" + std::to_string(s)).test_welfare);
    }
    mean[name] = Mean(finals);
    detail += name + " lr " + Fmt(best_lr, 4) + " mean " + Fmt(mean[name], 2) + "; ";
  }
  const double margin = mean["metagrad"] - std::max(mean["dual_rl_discrete"],
                                                    mean["dual_rl_continuous"]);
  return {margin >= 5.0, detail + "margin " + Fmt(margin, 2) + " (need >= 5)"};
}

Outcome MetaGradientCheck(agents::AgentKind kind) {
  double worst = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    worst = std::max(worst, testing::WorstMetaGradientError(kind, 5, seed));
  }
  std::ostringstream d;
  d << "worst relative error over 20 points " << worst << " (need <= 1e-4)";
  return {worst <= 1e-4, d.str()};
}

Outcome Criterion5() {
  return MetaGradientCheck(agents::AgentKind::kPolicyGradient);
}

Outcome Criterion6() {
  using namespace envs;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_gap = 0.0, worst_fd = 0.0;
  int sum_mismatch = 0;
  for (int c = 0; c < 1000; ++c) {
    TaxSchedule s;
    s.thresholds = {0.0};
    for (int b = 1; b < kGtbBrackets; ++b) {
      s.thresholds.push_back(s.thresholds.back() + 1.0 + 100.0 * u(rng));
    }
    for (double& r : s.rates) r = u(rng);
    for (int b = 1; b < kGtbBrackets; ++b) {
      const double m = s.thresholds[b];
      worst_gap = std::max(worst_gap, std::abs(TaxTotal(s, std::nextafter(m, 0.0)) -
                                               TaxTotal(s, std::nextafter(m, 1e9))));
    }
    const double z = 700.0 * u(rng);
    const std::vector<double> mass = BracketMass(s, z);
    for (int b = 0; b < kGtbBrackets; ++b) {
      TaxSchedule hi = s, lo = s;
      hi.rates[b] += 1e-4;
      lo.rates[b] -= 1e-4;
      const double fd = (TaxTotal(hi, z) - TaxTotal(lo, z)) / 2e-4;
      worst_fd = std::max(worst_fd, std::abs(fd - mass[b]));
    }
    const int n = 2 + static_cast<int>(u(rng) * 8);
    std::vector<double> incomes;
    for (int i = 0; i < n; ++i) incomes.push_back(QuantizeCoin(600.0 * u(rng)));
    const Redistribution r = Redistribute(s, incomes);
    if (std::accumulate(incomes.begin(), incomes.end(), 0.0) !=
        std::accumulate(r.adjusted.begin(), r.adjusted.end(), 0.0)) {
      ++sum_mismatch;
    }
  }
  const bool pass = worst_gap <= 1e-12 && worst_fd <= 1e-8 && sum_mismatch == 0;
  std::ostringstream d;
  d << "1000 cases: max threshold gap " << worst_gap << ", max |dT/dtau - mass| "
    << worst_fd << ", inexact sums " << sum_mismatch;
  return {pass, d.str()};
}

Outcome Criterion7() {
  int bad = 0;
  for (int n = 2; n <= 16; ++n) {
    const std::vector<double> uniform(n, 5.5);
    std::vector<double> single(n, 0.0);
    single[n - 1] = 9.0;
    if (envs::EqualityIndex(uniform) != 1.0) ++bad;
    if (envs::EqualityIndex(single) != 0.0) ++bad;
  }
  const std::vector<double> x{3, 1};
  // Brute force over ordered pairs: G = sum |xi - xj| / (2 n^2 mean).
  double pairs = 0.0;
  for (double a : x) {
    for (double b : x) pairs += std::abs(a - b);
  }
  const double gini = pairs / (2.0 * 4.0 * 2.0);
  const double brute = 1.0 - 2.0 / (2.0 - 1.0) * gini;
  const double eq = envs::EqualityIndex(x);
  const bool pass = bad == 0 && eq == 0.5 && std::abs(brute - 0.5) < 1e-15;
  return {pass, "endpoint failures " + std::to_string(bad) + ", eq(3,1) " +
                    Fmt(eq, 6) + ", brute force " + Fmt(brute, 6)};
}

bool SameRun(RunConfig a, RunConfig b, const std::string& tag) {
  a.output_dir = g_out + "/" + tag + "_" + harness::DesignerKindName(a.designer.kind);
  b.output_dir = g_out + "/" + tag + "_" + harness::DesignerKindName(b.designer.kind);
  harness::TrainRun(a);
  harness::TrainRun(b);
  return harness::ReadTextFile(a.output_dir + "/metrics.csv") ==
             harness::ReadTextFile(b.output_dir + "/metrics.csv") &&
         harness::ReadTextFile(a.output_dir + "/checkpoint.json") ==
             harness::ReadTextFile(b.output_dir + "/checkpoint.json");
}

Outcome Criterion8() {
  RunConfig er = LoadConfig("er_5_2.json");
  er.episodes = 2000;
  er.eval_every = 500;
  RunConfig er_none = er;
  er.designer.kind = harness::DesignerKind::kFreeMarket;  // zero incentives
  er_none.designer.kind = harness::DesignerKind::kNone;
  const bool er_same = SameRun(er, er_none, "c8_er");

  RunConfig gtb = LoadConfig("gtb_free_market.json");
  gtb.episodes = 64;
  gtb.eval_every = 32;
  RunConfig gtb_none = gtb;
  gtb_none.designer.kind = harness::DesignerKind::kNone;
  const bool gtb_same = SameRun(gtb, gtb_none, "c8_gtb");
  return {er_same && gtb_same,
          std::string("escape room zero-incentive vs none: ") +
              (er_same ? "identical" : "DIFFERENT") + "; gtb free market vs none: " +
              (gtb_same ? "identical" : "DIFFERENT")};
}

Outcome Criterion9() {
  const int seeds = 4;
  std::string csv = "seed,free_market,static,metagrad\n";
  int wins = 0;
  std::string detail;
  for (int s = 1; s <= seeds; ++s) {
    std::map<std::string, double> swf;
    for (const std::string kind : {"free_market", "static", "metagrad"}) {
      RunConfig c = LoadConfig("gtb_" + kind + ".json");
      c.seed = static_cast<std::uint64_t>(s);
      const std::string tag = "c9_gtb_" + kind + "_seed" + std::to_string(s);
      swf[kind] = Train(c, tag).swf;
      harness::EmitPlots(harness::ParseCsv(harness::ReadTextFile(
                             g_out + "/" + tag + "/metrics.csv")),
                         g_out + "/" + tag);
    }
    const bool win = swf["metagrad"] >= swf["free_market"] &&
                     swf["metagrad"] >= swf["static"];
    wins += win;
    csv += std::to_string(s) + "," + harness::FormatNumber(swf["free_market"]) + "," +
           harness::FormatNumber(swf["static"]) + "," +
           harness::FormatNumber(swf["metagrad"]) + "\n";
    detail += "seed " + std::to_string(s) + " fm/static/mg " + Fmt(swf["free_market"], 0) +
              "/" + Fmt(swf["static"], 0) + "/" + Fmt(swf["metagrad"], 0) + "; ";
  }
  harness::WriteTextFile(g_out + "/c9_summary.csv", csv);
  return {wins >= 2, std::to_string(wins) + "/4 seeds MetaGrad on top (need 2); " +
                         detail + "CSVs under " + g_out};
}

Outcome Criterion10() {
  const Outcome fd = MetaGradientCheck(agents::AgentKind::kQSoftmax);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> q(-5.0, 5.0), temp(0.01, 20.0);
  const nets::LinearModel model(1, 6);
  int mismatches = 0;
  for (int k = 0; k < 100; ++k) {
    agents::AgentHyper h;
    h.kind = agents::AgentKind::kQSoftmax;
    h.q_temperature = temp(rng);
    dg::Matrix table(1, 6);
    for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] = q(rng);
    const dg::Matrix logits = agents::PolicyLogitsValue(
        model, h, std::vector<dg::Matrix>{table}, dg::Matrix::Ones(1, 1));
    Eigen::Index qa, pa;
    table.row(0).maxCoeff(&qa);
    nets::SoftmaxRow(logits.row(0)).maxCoeff(&pa);
    mismatches += qa != pa;
  }
  return {fd.pass && mismatches == 0,
          fd.detail + "; argmax mismatches on 100 Q-tables " + std::to_string(mismatches)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> which;
  app.add_option("criteria", which, "criteria to run (default: all)");
  app.add_option("-o,--out", g_out, "directory for run artifacts");
  CLI11_PARSE(app, argc, argv);
  const std::vector<std::function<Outcome()>> all{
      Criterion1, Criterion2, Criterion3, Criterion4, Criterion5,
      Criterion6, Criterion7, Criterion8, Criterion9, Criterion10};
  if (which.empty()) {
    for (int k = 1; k <= 10; ++k) which.push_back(k);
  }
  int failed = 0;
  for (int k : which) {
    if (k < 1 || k > 10) {
      std::fprintf(stderr, "no criterion %d\n", k);
      return 2;
    }
    Outcome o;
    try {
      o = all[k - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("CRITERION %d %s: %s\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
