#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace weightlab {

// Coordinates are dyadic rationals stored as integer multiples of 2^-kTickBits.
using Tick = std::int64_t;

inline constexpr int kTickBits = 30;
inline constexpr int kMaxDim = 4;
inline constexpr int kDefaultResolution = 24;
inline constexpr int kCoarsestLevel = -20;

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure failed to reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr Tick kTicksPerUnit = Tick{1} << kTickBits;

// Side of a cube at the given level (2^-level) in ticks.
Tick side_ticks(int level);

double to_double(Tick t);

// Exact decimal rendering, e.g. 0.25 -> "0.25", -3 -> "-3".
std::string to_decimal(Tick t);

// Parse a decimal string and snap it to the nearest multiple of 2^-resolution_bits.
Tick parse_decimal(const std::string& text, int resolution_bits);

// Snap a double to the nearest multiple of 2^-resolution_bits.
Tick snap(double x, int resolution_bits);

void check_resolution(int resolution_bits);
void check_dim(int dim);

Tick floor_div(Tick a, Tick b);

struct Point {
  int dim = 0;
  std::array<Tick, kMaxDim> x{};

  auto operator<=>(const Point&) const = default;
  bool operator==(const Point&) const = default;
};

void point_to_doubles(const Point& p, double* out);

}  // namespace weightlab
