#ifndef MGID_DESIGNERS_STATIC_SCHEDULE_H_
#define MGID_DESIGNERS_STATIC_SCHEDULE_H_

#include <vector>

namespace mgid::designers {

inline constexpr int kNumBrackets = 7;

// Fixed marginal rates, one per bracket, emitted unchanged every period.
class StaticSchedule {
 public:
  // Throws std::invalid_argument unless there are 7 rates in [0, 1].
  explicit StaticSchedule(std::vector<double> rates);

  const std::vector<double>& Rates() const { return rates_; }
  bool monotone() const;

 private:
  std::vector<double> rates_;
};

// 2018 US federal marginal rates (10% ... 37%).
StaticSchedule UsFederalSchedule();
StaticSchedule FreeMarketSchedule();

}  // namespace mgid::designers

#endif  // MGID_DESIGNERS_STATIC_SCHEDULE_H_
