#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lawbound {

// Raised for violated preconditions and malformed inputs.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a numerical guard trips (CFL, NaN, non-convergence).
class NumericalError : public Error {
 public:
  using Error::Error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(what);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream seed for (master, a, b); used per member and per step.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ (a + 0x632be59bd9b4e019ULL)) ^
                    (b * 0xd1342543de82ef95ULL + 1));
}

}  // namespace lawbound
