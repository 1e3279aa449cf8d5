#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pwf {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;
using IVec3 = std::array<int, 3>;

inline constexpr double pi = std::numbers::pi;

// Raised when a wave functional vanishes at the evaluation point, so that
// the phase (and hence the guidance velocity) is undefined there.
class DegeneratePoint : public std::runtime_error {
public:
    explicit DegeneratePoint(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline double norm2(const Vec3& a) { return dot(a, a); }

} // namespace pwf
