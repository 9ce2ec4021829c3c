#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pano {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Observer left the unit sphere (step >= 1) or step is negative/non-finite.
class InvalidDisplacement : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Trig argument out of [-1, 1] by more than rounding noise.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class InvalidDims : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Equirectangular raster size. Always 2:1.
class ImageDims {
public:
    ImageDims(int width, int height);

    /// Builds the 2:1 dims for a given width.
    static ImageDims from_width(int width);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept
    {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    friend bool operator==(const ImageDims&, const ImageDims&) = default;

private:
    int width_;
    int height_;
};

/// Continuous pixel position. Integer coordinates are pixel centers:
/// column i spans [i - 0.5, i + 0.5).
struct PixelCoord {
    double x;
    double y;
};

/// Direction on the unit sphere. polar 0 is the zenith.
class SphereDir {
public:
    SphereDir(double azimuth, double polar);

    double azimuth() const noexcept { return azimuth_; }
    double polar() const noexcept { return polar_; }
    double elevation() const noexcept { return kPi / 2 - polar_; }

private:
    double azimuth_;
    double polar_;
};

class UnitVec3 {
public:
    /// Normalizes (x, y, z). Throws DomainError for the zero vector.
    UnitVec3(double x, double y, double z);

    double x() const noexcept { return x_; }
    double y() const noexcept { return y_; }
    double z() const noexcept { return z_; }

    double dot(const UnitVec3& o) const noexcept { return x_ * o.x_ + y_ * o.y_ + z_ * o.z_; }

private:
    double x_;
    double y_;
    double z_;
};

/// Horizontal observer translation inside the unit sphere.
class Displacement {
public:
    /// step in [0, 1); direction in degrees, normalized into [0, 360).
    Displacement(double step, double direction_deg);

    double step() const noexcept { return step_; }
    double direction_deg() const noexcept { return direction_deg_; }
    double direction_rad() const noexcept { return direction_deg_ * kPi / 180.0; }

    friend bool operator==(const Displacement&, const Displacement&) = default;

private:
    double step_;
    double direction_deg_;
};

double wrap_two_pi(double angle) noexcept;
double wrap_degrees(double deg) noexcept;

/// Clamps a trig argument into [-1, 1] when it overshoots by at most 1e-9.
double clamp_unit(double v, const char* what);

SphereDir pixel_to_dir(PixelCoord p, const ImageDims& dims) noexcept;
PixelCoord dir_to_pixel(const SphereDir& d, const ImageDims& dims) noexcept;

UnitVec3 to_unit(const SphereDir& d) noexcept;
SphereDir to_dir(const UnitVec3& v) noexcept;

/// Angle between two directions, radians in [0, pi].
double angular_distance(const SphereDir& a, const SphereDir& b) noexcept;

SphereDir rotate_azimuth(const SphereDir& d, double delta) noexcept;

/// Intersection of the ray from the displaced center along v with the
/// original unit sphere.
UnitVec3 displace_intersect(const UnitVec3& v, const Displacement& disp);

/// Direction in the original panorama seen along d_new from the displaced
/// observer. This is the exact mapping every closed form is measured against.
SphereDir map_dir(const SphereDir& d_new, const Displacement& disp);

/// Relative azimuth in the old panorama of a ray at relative azimuth
/// theta_rel (measured from the displacement direction) in the new one:
///   psi = theta - asin(step * sin(theta))
/// Exact on the equator, ignores elevation elsewhere.
double horizontal_map_closed(double theta_rel, double step);

/// Separable vertical closed form. elev is the signed vertical angle of the
/// destination pixel, a the effective displacement. crossed_pole selects
/// the zenith-crossing branch:
///   crossed_pole = false:  sign(e) * acos(-(a - cos e) / sqrt(a^2 - 2 a cos e + 1))
///   crossed_pole = true:   sign(e) * (pi - acos((a - cos e) / sqrt(a^2 - 2 a cos e + 1)))
double vertical_map_closed(double elev, double a, bool crossed_pole);

/// The separable approximation as a whole direction map: horizontal_map_closed
/// for azimuth, vertical_map_closed (effective displacement step * |psi / pi|)
/// for the vertical angle, reflected through the pole when it overshoots.
SphereDir map_dir_separable(const SphereDir& d_new, const Displacement& disp);

}  // namespace pano
