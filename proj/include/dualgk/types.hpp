#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dualgk
{

inline constexpr int kMaxDim = 8;

// Fixed-capacity storage keeps the simulation inner loop allocation free.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

struct ContractViolation : std::logic_error
{
  using std::logic_error::logic_error;
};

struct NumericalBlowup : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct PolicyFailure : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct InsufficientData : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string & what)
{
  if (!cond) {
    throw ContractViolation(what);
  }
}

inline Vec vec(std::initializer_list<double> values)
{
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) {
    v(i++) = x;
  }
  return v;
}

// splitmix64 finalizer, used to derive independent stream seeds.
inline uint64_t mix_seed(uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename... Tags>
uint64_t derive_seed(uint64_t master, Tags... tags)
{
  uint64_t s = mix_seed(master);
  ((s = mix_seed(s ^ static_cast<uint64_t>(tags))), ...);
  return s;
}

}  // namespace dualgk
