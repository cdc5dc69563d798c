#ifndef MGID_ENVS_GTB_H_
#define MGID_ENVS_GTB_H_

#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mgid/core/random.h"

namespace mgid::envs {

inline constexpr int kGtbBrackets = 7;
inline constexpr int kPriceLevels = 11;
inline constexpr int kResources = 2;  // wood, stone
inline constexpr int kTradeActions = kResources * 2 * kPriceLevels;  // 44
inline constexpr int kGtbActions = 7 + kTradeActions;                // 51

// Action ids.
enum GtbAction : int {
  kNoop = 0,
  kUp = 1,
  kDown = 2,
  kLeft = 3,
  kRight = 4,
  kGather = 5,
  kBuild = 6,
  kFirstTrade = 7,
};
enum Side : int { kBid = 0, kAsk = 1 };

struct TradeAction {
  int resource = 0;
  int side = kBid;
  int price = 0;
};
// 7 + resource * 22 + side * 11 + price.
int EncodeTrade(TradeAction t);
TradeAction DecodeTrade(int action);

// ---- taxation -------------------------------------------------------------

// Coin is fixed point: every balance, payment and tax is a multiple of this
// quantum, so sums of money are exact in double precision.
inline constexpr double kCoinQuantum = 1.0 / 1048576.0;
double QuantizeCoin(double x);

// Thresholds m_0 = 0 < m_1 < ... < m_{B-1}; m_B = infinity is implicit.
struct TaxSchedule {
  std::vector<double> thresholds{0, 10, 39, 84, 160, 204, 510};
  std::vector<double> rates = std::vector<double>(kGtbBrackets, 0.0);

  // Throws std::invalid_argument for non-increasing thresholds, a first
  // threshold other than 0, or rates outside [0, 1].
  void Validate() const;
  int brackets() const { return static_cast<int>(thresholds.size()); }
  double upper(int b) const {
    return b + 1 < brackets() ? thresholds[b + 1]
                              : std::numeric_limits<double>::infinity();
  }
};

// Income mass of z inside each bracket: clamp(z - m_b, 0, m_{b+1} - m_b).
std::vector<double> BracketMass(const TaxSchedule& s, double z);
// T(z) = sum_b tau_b * mass_b(z). Throws std::invalid_argument for z < 0.
double TaxTotal(const TaxSchedule& s, double z);
// Marginal rate applying to the next coin of income at z.
double MarginalRate(const TaxSchedule& s, double z);

struct Redistribution {
  std::vector<double> taxes;
  std::vector<double> adjusted;  // z~
  double pool = 0.0;
};
// z~_i = z_i - T(z_i) + (1/N) sum_j T(z_j). Taxes are rounded to the coin
// quantum and the pool is split in quanta (the first agents receive the
// leftover quanta), so for incomes on the coin grid sum z~ == sum z holds
// exactly. Throws on an empty set or a negative income.
Redistribution Redistribute(const TaxSchedule& s, std::span<const double> z);

// (c^(1-eta) - 1) / (1 - eta) - labor; log(c) - labor at eta = 1.
// Throws for coin < 0 or eta <= 0.
double CrraUtility(double coin, double labor, double eta);

// 1 - N/(N-1) Gini(coins); 1 for all-zero coins and for a single agent.
double EqualityIndex(std::span<const double> coins);
// Mean absolute difference over all ordered pairs / (2 mean), by brute force.
double Gini(std::span<const double> coins);

// ---- order book -------------------------------------------------------------

struct Order {
  int agent = 0;
  int resource = 0;
  int side = kBid;
  int price = 0;
  long id = 0;       // arrival order
  int expires = 0;   // step at which it is cancelled
};

struct Trade {
  int buyer = 0;
  int seller = 0;
  int resource = 0;
  int price = 0;
};

enum class OrderStatus { kRested, kFilled, kRejected };

struct MatchResult {
  OrderStatus status = OrderStatus::kRejected;
  std::vector<Trade> trades;
};

// Open orders of one market. Escrow is managed by the caller: a bid reserves
// `price` coin, an ask reserves one unit of the resource.
class OrderBook {
 public:
  // Crossing orders execute against the best-priced standing order of
  // another agent (oldest first within a price) at the standing price. A
  // crossing order whose best counterpart belongs to the same agent is
  // rejected. Non-crossing orders rest.
  MatchResult Submit(Order order);
  // Removes orders with expires <= step and returns them.
  std::vector<Order> Expire(int step);
  const std::vector<Order>& orders() const { return orders_; }
  int OpenOrders(int agent, int resource) const;
  // counts[resource][side][price].
  std::array<std::array<std::array<int, kPriceLevels>, 2>, kResources> Counts()
      const;
  void Clear() { orders_.clear(); }

 private:
  std::vector<Order> orders_;
};

// ---- the economy ------------------------------------------------------------

struct LaborCosts {
  double move = 0.02;
  double gather = 0.2;
  double build = 2.0;
  double trade = 0.05;
};

struct GtbConfig {
  int width = 15;
  int height = 15;
  int agents = 4;
  int horizon = 100;
  int period_length = 10;
  // Rows of '.', 'W' (wood source), 'S' (stone source), '#' (wall).
  // Empty means a generated map: sources on the even lattice, wood and
  // stone alternating.
  std::vector<std::string> layout;
  double respawn_prob = 0.1;  // per depleted source cell per step
  // Per-agent gather success probabilities and build payments; empty means
  // defaults: collect 0.8 for everyone, build round(base * growth^k).
  std::vector<double> collect_skill;
  std::vector<double> build_skill;
  double build_base = 10.0;
  double build_growth = 1.3;
  std::vector<double> thresholds{0, 10, 39, 84, 160, 204, 510};
  double eta_crra = 0.23;
  LaborCosts labor;
  int order_duration = 20;
  int max_open_orders = 5;
  int view_radius = 2;
  // Fixed start cells (row, col) per agent; empty = spread along the
  // middle row.
  std::vector<std::array<int, 2>> starts;

  void Validate() const;
  int periods() const { return horizon / period_length; }
  double CollectSkill(int i) const;
  double BuildSkill(int i) const;
  std::vector<std::string> Layout() const;
};

nlohmann::json GtbConfigToJson(const GtbConfig& c);
// Missing keys keep their defaults.
GtbConfig GtbConfigFromJson(const nlohmann::json& j);

enum class Cell : std::uint8_t { kEmpty, kWood, kStone, kHouse, kWall };

struct AgentState {
  int row = 0;
  int col = 0;
  std::array<int, kResources> resources{0, 0};  // liquid
  std::array<int, kResources> escrow_resources{0, 0};
  double coin = 0.0;         // liquid
  double escrow_coin = 0.0;  // reserved by open bids
  double labor = 0.0;
  double period_income = 0.0;
  // Episode activity counters.
  int gathers = 0;
  int builds = 0;
  int trades = 0;
  double income_pre = 0.0;   // summed period incomes
  double income_post = 0.0;  // summed adjusted incomes
  double tax_paid = 0.0;     // gross, before the rebate
  double total_coin() const { return coin + escrow_coin; }
};

// Everything the designer needs to rebuild a period's tax effect.
struct PeriodRecord {
  int step = 0;  // step index at which the tax was applied
  std::vector<double> rates;
  std::vector<double> incomes;
  std::vector<double> coin_before;  // total coin just before taxation
  std::vector<double> taxes;        // effective (capped) taxes
};

struct GtbStepResult {
  std::vector<double> rewards;
  double productivity = 0.0;
  double equality = 1.0;
  double designer_reward = 0.0;  // prod * eq
  bool period_end = false;
  bool done = false;
};

class GtbEnv {
 public:
  GtbEnv(GtbConfig config, std::uint64_t seed);

  void Reset();
  // Rates for the period that starts now; clamped to [0, 1] by validation.
  void SetRates(std::span<const double> rates);
  // Throws std::invalid_argument for a malformed action id or count.
  GtbStepResult Step(std::span<const int> actions);

  const GtbConfig& config() const { return config_; }
  int step() const { return step_; }
  bool done() const { return step_ >= config_.horizon; }
  bool period_start() const { return step_ % config_.period_length == 0; }
  int period() const { return step_ / config_.period_length; }
  const std::vector<AgentState>& agents() const { return agents_; }
  const std::vector<double>& rates() const { return schedule_.rates; }
  const TaxSchedule& schedule() const { return schedule_; }
  const OrderBook& book(int resource) const { return books_[resource]; }
  Cell cell(int r, int c) const { return grid_[r * config_.width + c]; }
  bool has_resource(int r, int c) const {
    return stock_[r * config_.width + c] > 0;
  }
  const std::vector<PeriodRecord>& periods() const { return periods_; }
  double swf() const { return swf_; }
  std::vector<double> Coins() const;
  double Utility(int agent) const;
  // Labor each agent accrued in the most recent step.
  const std::vector<double>& last_labor() const { return last_labor_; }

  Eigen::RowVectorXd AgentObservation(int agent) const;
  Eigen::RowVectorXd DesignerObservation() const;
  int agent_obs_size() const;
  int designer_obs_size() const;

  // Legal-move test used by the rules and by tests.
  bool Walkable(int r, int c) const;

 private:
  void ApplyMove(int i, int action);
  void ApplyGather(int i);
  void ApplyBuild(int i);
  void ApplyTrade(int i, int action);
  void Settle(const Trade& t, int bid_price_escrowed);
  void ApplyTax();
  void Respawn();

  GtbConfig config_;
  std::uint64_t seed_;
  Rng spawn_rng_;
  Rng gather_rng_;
  std::vector<Cell> grid_;
  std::vector<int> stock_;
  std::vector<AgentState> agents_;
  std::array<OrderBook, kResources> books_;
  TaxSchedule schedule_;
  std::vector<PeriodRecord> periods_;
  std::vector<double> last_labor_;
  int step_ = 0;
  long next_order_id_ = 0;
  double swf_ = 0.0;
};

}  // namespace mgid::envs

#endif  // MGID_ENVS_GTB_H_
