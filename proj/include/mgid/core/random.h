#ifndef MGID_CORE_RANDOM_H_
#define MGID_CORE_RANDOM_H_

#include <cstdint>
#include <random>

namespace mgid {

using Rng = std::mt19937_64;

// Independent, reproducible stream `stream` derived from a run seed.
inline Rng MakeRng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x6d676964u};
  return Rng(seq);
}

inline double Uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace mgid

#endif  // MGID_CORE_RANDOM_H_
