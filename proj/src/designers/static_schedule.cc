#include "mgid/designers/static_schedule.h"

#include <stdexcept>

namespace mgid::designers {

StaticSchedule::StaticSchedule(std::vector<double> rates)
    : rates_(std::move(rates)) {
  if (rates_.size() != static_cast<size_t>(kNumBrackets)) {
    throw std::invalid_argument("a tax schedule needs 7 marginal rates");
  }
  for (double r : rates_) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw std::invalid_argument("marginal rates must lie in [0, 1]");
    }
  }
}

bool StaticSchedule::monotone() const {
  for (size_t b = 1; b < rates_.size(); ++b) {
    if (rates_[b] < rates_[b - 1]) return false;
  }
  return true;
}

StaticSchedule UsFederalSchedule() {
  return StaticSchedule({0.10, 0.12, 0.22, 0.24, 0.32, 0.35, 0.37});
}

StaticSchedule FreeMarketSchedule() {
  return StaticSchedule(std::vector<double>(kNumBrackets, 0.0));
}

}  // namespace mgid::designers
