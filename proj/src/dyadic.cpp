#include "weightlab/dyadic.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>

namespace weightlab {

namespace {
constexpr Tick kMaxAbsTicks = Tick{1} << 52;
}

void check_resolution(int resolution_bits) {
  if (resolution_bits < 0 || resolution_bits > kTickBits) {
    throw ValidationError("resolution must lie in [0, " + std::to_string(kTickBits) + "]");
  }
}

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw ValidationError("dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
  }
}

Tick side_ticks(int level) {
  if (level > kTickBits || level < kCoarsestLevel) {
    throw ValidationError("cube level " + std::to_string(level) + " outside the supported range");
  }
  return Tick{1} << (kTickBits - level);
}

double to_double(Tick t) { return std::ldexp(static_cast<double>(t), -kTickBits); }

Tick floor_div(Tick a, Tick b) {
  Tick q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::string to_decimal(Tick t) {
  bool negative = t < 0;
  std::uint64_t mag = negative ? static_cast<std::uint64_t>(-t) : static_cast<std::uint64_t>(t);
  const std::uint64_t mask = (std::uint64_t{1} << kTickBits) - 1;
  std::string out = negative ? "-" : "";
  out += std::to_string(mag >> kTickBits);
  std::uint64_t frac = mag & mask;
  if (frac != 0) {
    out += '.';
    while (frac != 0) {
      frac *= 10;
      out += static_cast<char>('0' + (frac >> kTickBits));
      frac &= mask;
    }
  }
  return out;
}

Tick snap(double x, int resolution_bits) {
  check_resolution(resolution_bits);
  if (!std::isfinite(x)) throw ValidationError("coordinate is not finite");
  double scaled = std::nearbyint(std::ldexp(x, resolution_bits));
  if (std::fabs(scaled) >= std::ldexp(1.0, 52 - kTickBits + resolution_bits)) {
    throw ValidationError("coordinate out of range");
  }
  return static_cast<Tick>(scaled) << (kTickBits - resolution_bits);
}

Tick parse_decimal(const std::string& text, int resolution_bits) {
  check_resolution(resolution_bits);
  if (text.empty()) throw ValidationError("empty coordinate string");
  errno = 0;
  char* end = nullptr;
  long double v = std::strtold(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || errno == ERANGE) {
    throw ValidationError("malformed coordinate '" + text + "'");
  }
  if (!std::isfinite(static_cast<double>(v))) throw ValidationError("coordinate is not finite");
  long double scaled = std::nearbyintl(std::ldexp(v, resolution_bits));
  if (std::fabs(static_cast<double>(scaled)) >= std::ldexp(1.0, 52 - kTickBits + resolution_bits)) {
    throw ValidationError("coordinate out of range");
  }
  Tick t = static_cast<Tick>(scaled) << (kTickBits - resolution_bits);
  if (t > kMaxAbsTicks || t < -kMaxAbsTicks) throw ValidationError("coordinate out of range");
  return t;
}

void point_to_doubles(const Point& p, double* out) {
  for (int k = 0; k < p.dim; ++k) out[k] = to_double(p.x[k]);
}

}  // namespace weightlab
