#include "mgid/envs/gtb.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mgid::envs {
namespace {

constexpr int kWindowChannels = 5;  // wood, stone, house, blocked, agent
constexpr double kCoinScale = 100.0;
constexpr double kResourceScale = 10.0;

// Equal split of a pool in coin quanta; leftover quanta go to the lowest
// indices.
std::vector<double> SplitPool(double pool, int n) {
  const auto units = static_cast<long long>(std::llround(pool / kCoinQuantum));
  const long long base = units / n;
  const long long extra = units % n;
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = static_cast<double>(base + (i < extra ? 1 : 0)) * kCoinQuantum;
  }
  return out;
}

}  // namespace

double QuantizeCoin(double x) {
  return static_cast<double>(std::llround(x / kCoinQuantum)) * kCoinQuantum;
}

int EncodeTrade(TradeAction t) {
  if (t.resource < 0 || t.resource >= kResources || t.side < 0 || t.side > 1 ||
      t.price < 0 || t.price >= kPriceLevels) {
    throw std::invalid_argument("malformed trade");
  }
  return kFirstTrade + t.resource * 2 * kPriceLevels + t.side * kPriceLevels +
         t.price;
}

TradeAction DecodeTrade(int action) {
  if (action < kFirstTrade || action >= kGtbActions) {
    throw std::invalid_argument("not a trade action: " + std::to_string(action));
  }
  const int k = action - kFirstTrade;
  return {k / (2 * kPriceLevels), (k / kPriceLevels) % 2, k % kPriceLevels};
}

// ---- taxation -------------------------------------------------------------

void TaxSchedule::Validate() const {
  if (thresholds.empty() || thresholds[0] != 0.0) {
    throw std::invalid_argument("tax thresholds must start at 0");
  }
  for (size_t b = 1; b < thresholds.size(); ++b) {
    if (!(thresholds[b] > thresholds[b - 1])) {
      throw std::invalid_argument("tax thresholds must be strictly increasing");
    }
  }
  if (rates.size() != thresholds.size()) {
    throw std::invalid_argument("need one rate per bracket");
  }
  for (double r : rates) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw std::invalid_argument("tax rates must lie in [0, 1]");
    }
  }
}

std::vector<double> BracketMass(const TaxSchedule& s, double z) {
  if (!(z >= 0.0)) throw std::invalid_argument("income must be >= 0");
  std::vector<double> mass(s.brackets());
  for (int b = 0; b < s.brackets(); ++b) {
    const double width = s.upper(b) - s.thresholds[b];
    mass[b] = std::clamp(z - s.thresholds[b], 0.0, width);
  }
  return mass;
}

double TaxTotal(const TaxSchedule& s, double z) {
  const std::vector<double> mass = BracketMass(s, z);
  double t = 0.0;
  for (int b = 0; b < s.brackets(); ++b) t += s.rates[b] * mass[b];
  return t;
}

double MarginalRate(const TaxSchedule& s, double z) {
  if (!(z >= 0.0)) throw std::invalid_argument("income must be >= 0");
  // Bracket b holds m_b < z <= m_{b+1}; z = 0 sits in the first bracket.
  for (int b = 0; b < s.brackets(); ++b) {
    if (z <= s.upper(b)) return s.rates[b];
  }
  return s.rates.back();
}

Redistribution Redistribute(const TaxSchedule& s, std::span<const double> z) {
  if (z.empty()) throw std::invalid_argument("redistribution needs agents");
  Redistribution r;
  for (double zi : z) {
    r.taxes.push_back(QuantizeCoin(TaxTotal(s, zi)));
    r.pool += r.taxes.back();
  }
  const std::vector<double> share = SplitPool(r.pool, static_cast<int>(z.size()));
  for (size_t i = 0; i < z.size(); ++i) {
    r.adjusted.push_back(z[i] - r.taxes[i] + share[i]);
  }
  return r;
}

double CrraUtility(double coin, double labor, double eta) {
  if (!(coin >= 0.0)) throw std::invalid_argument("coin must be >= 0");
  if (!(eta > 0.0)) throw std::invalid_argument("CRRA eta must be > 0");
  if (eta == 1.0) return std::log(std::max(coin, 1e-12)) - labor;
  return (std::pow(coin, 1.0 - eta) - 1.0) / (1.0 - eta) - labor;
}

double Gini(std::span<const double> coins) {
  const double n = static_cast<double>(coins.size());
  const double total = std::accumulate(coins.begin(), coins.end(), 0.0);
  if (coins.empty() || total <= 0.0) return 0.0;
  double diff = 0.0;
  for (double a : coins) {
    for (double b : coins) diff += std::abs(a - b);
  }
  return diff / (2.0 * n * total);
}

double EqualityIndex(std::span<const double> coins) {
  const int n = static_cast<int>(coins.size());
  if (n < 2) return 1.0;
  for (double c : coins) {
    if (!(c >= 0.0)) throw std::invalid_argument("coins must be >= 0");
  }
  std::vector<double> x(coins.begin(), coins.end());
  std::sort(x.begin(), x.end());
  if (x.front() == x.back()) return 1.0;  // includes the all-zero case
  // sum_{i<j} (x_j - x_i) over sorted values, which equals
  // N^2 mean Gini; normalised by its maximum (N - 1) * total.
  double pairs = 0.0, total = 0.0;
  for (int k = 0; k < n; ++k) {
    pairs += x[k] * static_cast<double>(2 * k - n + 1);
    total += x[k];
  }
  return 1.0 - pairs / (static_cast<double>(n - 1) * total);
}

// ---- order book -------------------------------------------------------------

MatchResult OrderBook::Submit(Order order) {
  MatchResult result;
  auto best = orders_.end();
  for (auto it = orders_.begin(); it != orders_.end(); ++it) {
    if (it->resource != order.resource || it->side == order.side) continue;
    const bool crosses = order.side == kBid ? it->price <= order.price
                                            : it->price >= order.price;
    if (!crosses) continue;
    if (best == orders_.end()) {
      best = it;
      continue;
    }
    const bool better = order.side == kBid ? it->price < best->price
                                           : it->price > best->price;
    if (better || (it->price == best->price && it->id < best->id)) best = it;
  }
  if (best == orders_.end()) {
    orders_.push_back(order);
    result.status = OrderStatus::kRested;
    return result;
  }
  if (best->agent == order.agent) {
    result.status = OrderStatus::kRejected;
    return result;
  }
  Trade t;
  t.resource = order.resource;
  t.price = best->price;
  t.buyer = order.side == kBid ? order.agent : best->agent;
  t.seller = order.side == kBid ? best->agent : order.agent;
  orders_.erase(best);
  result.status = OrderStatus::kFilled;
  result.trades.push_back(t);
  return result;
}

std::vector<Order> OrderBook::Expire(int step) {
  std::vector<Order> gone;
  std::vector<Order> keep;
  for (const Order& o : orders_) {
    (o.expires <= step ? gone : keep).push_back(o);
  }
  orders_ = std::move(keep);
  return gone;
}

int OrderBook::OpenOrders(int agent, int resource) const {
  int n = 0;
  for (const Order& o : orders_) n += o.agent == agent && o.resource == resource;
  return n;
}

std::array<std::array<std::array<int, kPriceLevels>, 2>, kResources>
OrderBook::Counts() const {
  std::array<std::array<std::array<int, kPriceLevels>, 2>, kResources> c{};
  for (const Order& o : orders_) ++c[o.resource][o.side][o.price];
  return c;
}

// ---- config -------------------------------------------------------------------

void GtbConfig::Validate() const {
  if (width < 3 || height < 3) throw std::invalid_argument("grid too small");
  if (agents < 2) throw std::invalid_argument("GTB needs at least 2 agents");
  if (horizon < 1 || period_length < 1 || horizon % period_length != 0) {
    throw std::invalid_argument("horizon must be a multiple of period_length");
  }
  if (!(respawn_prob >= 0.0 && respawn_prob <= 1.0)) {
    throw std::invalid_argument("respawn_prob must lie in [0, 1]");
  }
  if (!collect_skill.empty() &&
      static_cast<int>(collect_skill.size()) != agents) {
    throw std::invalid_argument("collect_skill needs one value per agent");
  }
  for (double c : collect_skill) {
    if (!(c >= 0.0 && c <= 1.0)) {
      throw std::invalid_argument("collect skills must lie in [0, 1]");
    }
  }
  if (!build_skill.empty() && static_cast<int>(build_skill.size()) != agents) {
    throw std::invalid_argument("build_skill needs one value per agent");
  }
  for (double b : build_skill) {
    if (!(b > 0.0)) throw std::invalid_argument("build skills must be > 0");
  }
  TaxSchedule s;
  s.thresholds = thresholds;
  s.rates.assign(thresholds.size(), 0.0);
  s.Validate();
  if (static_cast<int>(thresholds.size()) != kGtbBrackets) {
    throw std::invalid_argument("GTB uses 7 tax brackets");
  }
  if (!(eta_crra > 0.0)) throw std::invalid_argument("eta_crra must be > 0");
  if (labor.move < 0 || labor.gather < 0 || labor.build < 0 || labor.trade < 0) {
    throw std::invalid_argument("labor costs must be >= 0");
  }
  if (order_duration < 1 || max_open_orders < 1 || view_radius < 0) {
    throw std::invalid_argument("bad market or view settings");
  }
  const auto rows = Layout();
  if (static_cast<int>(rows.size()) != height) {
    throw std::invalid_argument("layout height does not match the grid");
  }
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != width) {
      throw std::invalid_argument("layout width does not match the grid");
    }
    for (char ch : r) {
      if (ch != '.' && ch != 'W' && ch != 'S' && ch != '#') {
        throw std::invalid_argument("layout uses only . W S #");
      }
    }
  }
  if (!starts.empty() && static_cast<int>(starts.size()) != agents) {
    throw std::invalid_argument("starts needs one cell per agent");
  }
  for (const auto& s2 : starts) {
    if (s2[0] < 0 || s2[0] >= height || s2[1] < 0 || s2[1] >= width ||
        rows[s2[0]][s2[1]] == '#') {
      throw std::invalid_argument("start cell outside the walkable grid");
    }
  }
}

double GtbConfig::CollectSkill(int i) const {
  return collect_skill.empty() ? 0.8 : collect_skill[i];
}

double GtbConfig::BuildSkill(int i) const {
  if (!build_skill.empty()) return QuantizeCoin(build_skill[i]);
  return std::round(build_base * std::pow(build_growth, i));
}

std::vector<std::string> GtbConfig::Layout() const {
  if (!layout.empty()) return layout;
  // Sources on the even lattice, wood and stone alternating; odd rows and
  // columns stay free for walking and building.
  std::vector<std::string> rows(height, std::string(width, '.'));
  for (int r = 0; r < height; r += 2) {
    for (int c = 0; c < width; c += 2) {
      rows[r][c] = ((r + c) / 2) % 2 == 0 ? 'W' : 'S';
    }
  }
  return rows;
}

nlohmann::json GtbConfigToJson(const GtbConfig& c) {
  nlohmann::json starts = nlohmann::json::array();
  for (const auto& s : c.starts) starts.push_back({s[0], s[1]});
  return {{"width", c.width},
          {"height", c.height},
          {"agents", c.agents},
          {"horizon", c.horizon},
          {"period_length", c.period_length},
          {"layout", c.layout},
          {"respawn_prob", c.respawn_prob},
          {"collect_skill", c.collect_skill},
          {"build_skill", c.build_skill},
          {"build_base", c.build_base},
          {"build_growth", c.build_growth},
          {"thresholds", c.thresholds},
          {"eta_crra", c.eta_crra},
          {"labor",
           {{"move", c.labor.move},
            {"gather", c.labor.gather},
            {"build", c.labor.build},
            {"trade", c.labor.trade}}},
          {"order_duration", c.order_duration},
          {"max_open_orders", c.max_open_orders},
          {"view_radius", c.view_radius},
          {"starts", starts}};
}

GtbConfig GtbConfigFromJson(const nlohmann::json& j) {
  GtbConfig c;
  auto read = [&](const char* key, auto& out) {
    if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
  };
  read("width", c.width);
  read("height", c.height);
  read("agents", c.agents);
  read("horizon", c.horizon);
  read("period_length", c.period_length);
  read("layout", c.layout);
  read("respawn_prob", c.respawn_prob);
  read("collect_skill", c.collect_skill);
  read("build_skill", c.build_skill);
  read("build_base", c.build_base);
  read("build_growth", c.build_growth);
  read("thresholds", c.thresholds);
  read("eta_crra", c.eta_crra);
  if (j.contains("labor")) {
    const auto& l = j.at("labor");
    if (l.contains("move")) c.labor.move = l.at("move");
    if (l.contains("gather")) c.labor.gather = l.at("gather");
    if (l.contains("build")) c.labor.build = l.at("build");
    if (l.contains("trade")) c.labor.trade = l.at("trade");
  }
  read("order_duration", c.order_duration);
  read("max_open_orders", c.max_open_orders);
  read("view_radius", c.view_radius);
  if (j.contains("starts")) {
    for (const auto& s : j.at("starts")) c.starts.push_back({s.at(0), s.at(1)});
  }
  c.Validate();
  return c;
}

// ---- environment ------------------------------------------------------------

GtbEnv::GtbEnv(GtbConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed) {
  config_.Validate();
  schedule_.thresholds = config_.thresholds;
  Reset();
}

void GtbEnv::Reset() {
  spawn_rng_ = MakeRng(seed_, 11);
  gather_rng_ = MakeRng(seed_, 12);
  const auto rows = config_.Layout();
  grid_.assign(config_.width * config_.height, Cell::kEmpty);
  stock_.assign(grid_.size(), 0);
  for (int r = 0; r < config_.height; ++r) {
    for (int c = 0; c < config_.width; ++c) {
      const int k = r * config_.width + c;
      switch (rows[r][c]) {
        case 'W': grid_[k] = Cell::kWood; stock_[k] = 1; break;
        case 'S': grid_[k] = Cell::kStone; stock_[k] = 1; break;
        case '#': grid_[k] = Cell::kWall; break;
        default: break;
      }
    }
  }
  agents_.assign(config_.agents, AgentState{});
  for (int i = 0; i < config_.agents; ++i) {
    if (!config_.starts.empty()) {
      agents_[i].row = config_.starts[i][0];
      agents_[i].col = config_.starts[i][1];
    } else {
      agents_[i].row = config_.height / 2;
      agents_[i].col = (i + 1) * config_.width / (config_.agents + 1);
    }
  }
  for (auto& b : books_) b.Clear();
  schedule_.rates.assign(kGtbBrackets, 0.0);
  periods_.clear();
  last_labor_.assign(config_.agents, 0.0);
  step_ = 0;
  next_order_id_ = 0;
  swf_ = 0.0;
}

void GtbEnv::SetRates(std::span<const double> rates) {
  TaxSchedule s = schedule_;
  s.rates.assign(rates.begin(), rates.end());
  s.Validate();
  schedule_ = std::move(s);
}

bool GtbEnv::Walkable(int r, int c) const {
  if (r < 0 || c < 0 || r >= config_.height || c >= config_.width) return false;
  const Cell cell = grid_[r * config_.width + c];
  return cell != Cell::kHouse && cell != Cell::kWall;
}

std::vector<double> GtbEnv::Coins() const {
  std::vector<double> c;
  for (const auto& a : agents_) c.push_back(a.total_coin());
  return c;
}

double GtbEnv::Utility(int i) const {
  return CrraUtility(agents_[i].total_coin(), agents_[i].labor, config_.eta_crra);
}

void GtbEnv::ApplyMove(int i, int action) {
  static constexpr int kDr[] = {0, -1, 1, 0, 0};
  static constexpr int kDc[] = {0, 0, 0, -1, 1};
  AgentState& a = agents_[i];
  const int r = a.row + kDr[action], c = a.col + kDc[action];
  if (!Walkable(r, c)) return;  // rejected: no labor
  a.row = r;
  a.col = c;
  last_labor_[i] += config_.labor.move;
}

void GtbEnv::ApplyGather(int i) {
  AgentState& a = agents_[i];
  const int k = a.row * config_.width + a.col;
  const Cell cell = grid_[k];
  if ((cell != Cell::kWood && cell != Cell::kStone) || stock_[k] == 0) return;
  last_labor_[i] += config_.labor.gather;
  if (Uniform01(gather_rng_) < config_.CollectSkill(i)) {
    --stock_[k];
    ++a.resources[cell == Cell::kWood ? 0 : 1];
    ++a.gathers;
  }
}

void GtbEnv::ApplyBuild(int i) {
  AgentState& a = agents_[i];
  const int k = a.row * config_.width + a.col;
  if (grid_[k] != Cell::kEmpty || a.resources[0] < 1 || a.resources[1] < 1) {
    return;
  }
  --a.resources[0];
  --a.resources[1];
  grid_[k] = Cell::kHouse;
  const double pay = config_.BuildSkill(i);
  a.coin += pay;
  a.period_income += pay;
  ++a.builds;
  last_labor_[i] += config_.labor.build;
}

void GtbEnv::Settle(const Trade& t, int bid_price_escrowed) {
  AgentState& buyer = agents_[t.buyer];
  AgentState& seller = agents_[t.seller];
  buyer.escrow_coin -= bid_price_escrowed;
  buyer.coin += bid_price_escrowed - t.price;
  ++buyer.resources[t.resource];
  --seller.escrow_resources[t.resource];
  seller.coin += t.price;
  seller.period_income += t.price;
  ++buyer.trades;
  ++seller.trades;
}

void GtbEnv::ApplyTrade(int i, int action) {
  const TradeAction ta = DecodeTrade(action);
  AgentState& a = agents_[i];
  OrderBook& book = books_[ta.resource];
  if (book.OpenOrders(i, ta.resource) >= config_.max_open_orders) return;
  if (ta.side == kBid) {
    if (a.coin < ta.price) return;  // insufficient escrow
    a.coin -= ta.price;
    a.escrow_coin += ta.price;
  } else {
    if (a.resources[ta.resource] < 1) return;
    --a.resources[ta.resource];
    ++a.escrow_resources[ta.resource];
  }
  Order o{i, ta.resource, ta.side, ta.price, next_order_id_++,
          step_ + config_.order_duration};
  const MatchResult m = book.Submit(o);
  if (m.status == OrderStatus::kRejected) {
    if (ta.side == kBid) {
      a.coin += ta.price;
      a.escrow_coin -= ta.price;
    } else {
      ++a.resources[ta.resource];
      --a.escrow_resources[ta.resource];
    }
    return;
  }
  last_labor_[i] += config_.labor.trade;
  for (const Trade& t : m.trades) {
    // The buyer's escrow is its own bid price: the incoming price for a
    // bid, the standing (= trade) price otherwise.
    Settle(t, ta.side == kBid ? ta.price : t.price);
  }
}

void GtbEnv::Respawn() {
  for (size_t k = 0; k < grid_.size(); ++k) {
    if ((grid_[k] == Cell::kWood || grid_[k] == Cell::kStone) && stock_[k] == 0 &&
        Uniform01(spawn_rng_) < config_.respawn_prob) {
      stock_[k] = 1;
    }
  }
}

void GtbEnv::ApplyTax() {
  const int n = config_.agents;
  PeriodRecord rec;
  rec.step = step_;
  rec.rates = schedule_.rates;
  double pool = 0.0;
  for (int i = 0; i < n; ++i) {
    AgentState& a = agents_[i];
    rec.incomes.push_back(a.period_income);
    rec.coin_before.push_back(a.total_coin());
    // Escrowed coin is committed to open bids, so tax is capped by the
    // liquid balance.
    const double tax =
        std::min(QuantizeCoin(TaxTotal(schedule_, a.period_income)), a.coin);
    rec.taxes.push_back(tax);
    pool += tax;
  }
  const std::vector<double> share = SplitPool(pool, n);
  for (int i = 0; i < n; ++i) {
    AgentState& a = agents_[i];
    a.coin += share[i] - rec.taxes[i];
    a.income_pre += a.period_income;
    a.income_post += a.period_income - rec.taxes[i] + share[i];
    a.tax_paid += rec.taxes[i];
    a.period_income = 0.0;
  }
  periods_.push_back(std::move(rec));
}

GtbStepResult GtbEnv::Step(std::span<const int> actions) {
  if (done()) throw std::logic_error("GTB episode already finished");
  if (static_cast<int>(actions.size()) != config_.agents) {
    throw std::invalid_argument("need one action per agent");
  }
  for (int a : actions) {
    if (a < 0 || a >= kGtbActions) {
      throw std::invalid_argument("malformed GTB action id " + std::to_string(a));
    }
  }
  std::vector<double> before(config_.agents);
  for (int i = 0; i < config_.agents; ++i) before[i] = Utility(i);
  std::fill(last_labor_.begin(), last_labor_.end(), 0.0);

  for (int i = 0; i < config_.agents; ++i) {
    const int a = actions[i];
    if (a == kNoop) continue;
    if (a <= kRight) {
      ApplyMove(i, a);
    } else if (a == kGather) {
      ApplyGather(i);
    } else if (a == kBuild) {
      ApplyBuild(i);
    } else {
      ApplyTrade(i, a);
    }
    agents_[i].labor += last_labor_[i];
  }
  ++step_;
  for (auto& book : books_) {
    for (const Order& o : book.Expire(step_)) {
      AgentState& a = agents_[o.agent];
      if (o.side == kBid) {
        a.escrow_coin -= o.price;
        a.coin += o.price;
      } else {
        --a.escrow_resources[o.resource];
        ++a.resources[o.resource];
      }
    }
  }
  Respawn();
  GtbStepResult out;
  if (step_ % config_.period_length == 0) {
    ApplyTax();
    out.period_end = true;
  }
  for (int i = 0; i < config_.agents; ++i) {
    out.rewards.push_back(Utility(i) - before[i]);
  }
  const std::vector<double> coins = Coins();
  out.productivity = std::accumulate(coins.begin(), coins.end(), 0.0);
  out.equality = EqualityIndex(coins);
  out.designer_reward = out.productivity * out.equality;
  swf_ += out.designer_reward;
  out.done = done();
  return out;
}

int GtbEnv::agent_obs_size() const {
  const int w = 2 * config_.view_radius + 1;
  return w * w * kWindowChannels + 11 + 2 + kGtbBrackets + 2 + kTradeActions;
}

int GtbEnv::designer_obs_size() const {
  return 6 * config_.agents + 2 + kGtbBrackets + kTradeActions;
}

Eigen::RowVectorXd GtbEnv::AgentObservation(int i) const {
  Eigen::RowVectorXd o = Eigen::RowVectorXd::Zero(agent_obs_size());
  const AgentState& a = agents_[i];
  const int rad = config_.view_radius;
  int k = 0;
  for (int dr = -rad; dr <= rad; ++dr) {
    for (int dc = -rad; dc <= rad; ++dc, k += kWindowChannels) {
      const int r = a.row + dr, c = a.col + dc;
      if (r < 0 || c < 0 || r >= config_.height || c >= config_.width) {
        o(k + 3) = 1.0;
        continue;
      }
      const int cell = r * config_.width + c;
      if (grid_[cell] == Cell::kWood && stock_[cell] > 0) o(k) = 1.0;
      if (grid_[cell] == Cell::kStone && stock_[cell] > 0) o(k + 1) = 1.0;
      if (grid_[cell] == Cell::kHouse) o(k + 2) = 1.0;
      if (grid_[cell] == Cell::kWall) o(k + 3) = 1.0;
      for (int j = 0; j < config_.agents; ++j) {
        if (j != i && agents_[j].row == r && agents_[j].col == c) o(k + 4) = 1.0;
      }
    }
  }
  o(k++) = a.resources[0] / kResourceScale;
  o(k++) = a.resources[1] / kResourceScale;
  o(k++) = a.coin / kCoinScale;
  o(k++) = a.escrow_resources[0] / kResourceScale;
  o(k++) = a.escrow_resources[1] / kResourceScale;
  o(k++) = a.escrow_coin / kCoinScale;
  o(k++) = a.labor / kCoinScale;
  o(k++) = config_.CollectSkill(i);
  o(k++) = config_.BuildSkill(i) / 30.0;
  o(k++) = static_cast<double>(a.row) / config_.height;
  o(k++) = static_cast<double>(a.col) / config_.width;
  o(k++) = static_cast<double>(step_) / config_.horizon;
  o(k++) = static_cast<double>(step_ % config_.period_length) / config_.period_length;
  for (double r : schedule_.rates) o(k++) = r;
  o(k++) = MarginalRate(schedule_, a.period_income);
  o(k++) = a.period_income / kCoinScale;
  for (int res = 0; res < kResources; ++res) {
    const auto counts = books_[res].Counts();
    for (int side = 0; side < 2; ++side) {
      for (int p = 0; p < kPriceLevels; ++p) {
        o(k++) = counts[res][side][p] / static_cast<double>(config_.agents);
      }
    }
  }
  return o;
}

Eigen::RowVectorXd GtbEnv::DesignerObservation() const {
  Eigen::RowVectorXd o = Eigen::RowVectorXd::Zero(designer_obs_size());
  int k = 0;
  for (const AgentState& a : agents_) {
    o(k++) = (a.resources[0] + a.escrow_resources[0]) / kResourceScale;
    o(k++) = (a.resources[1] + a.escrow_resources[1]) / kResourceScale;
    o(k++) = a.total_coin() / kCoinScale;
    o(k++) = a.period_income / kCoinScale;
    o(k++) = static_cast<double>(a.row) / config_.height;
    o(k++) = static_cast<double>(a.col) / config_.width;
  }
  o(k++) = static_cast<double>(step_) / config_.horizon;
  o(k++) = static_cast<double>(step_ % config_.period_length) / config_.period_length;
  for (double r : schedule_.rates) o(k++) = r;
  for (int res = 0; res < kResources; ++res) {
    const auto counts = books_[res].Counts();
    for (int side = 0; side < 2; ++side) {
      for (int p = 0; p < kPriceLevels; ++p) {
        o(k++) = counts[res][side][p] / static_cast<double>(config_.agents);
      }
    }
  }
  return o;
}

}  // namespace mgid::envs
