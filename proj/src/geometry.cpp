#include "panoworld/geometry.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace pano {

namespace {

constexpr double kTrigSlack = 1e-9;

// Relative azimuth folded into (-pi, pi].
double wrap_pi(double angle) noexcept
{
    double w = std::remainder(angle, kTwoPi);
    if (w <= -kPi) {
        w += kTwoPi;
    }
    return w;
}

double sign(double v) noexcept
{
    return static_cast<double>((0.0 < v) - (v < 0.0));
}

}  // namespace

ImageDims::ImageDims(int width, int height) : width_(width), height_(height)
{
    if (width < 2 || height < 1) {
        throw InvalidDims(fmt::format("image dims {}x{} too small (width must be >= 2)", width, height));
    }
    if (width != 2 * height) {
        throw InvalidDims(fmt::format("image dims {}x{} are not 2:1 equirectangular", width, height));
    }
}

ImageDims ImageDims::from_width(int width)
{
    if (width % 2 != 0) {
        throw InvalidDims(fmt::format("equirectangular width {} must be even", width));
    }
    return ImageDims(width, width / 2);
}

SphereDir::SphereDir(double azimuth, double polar)
    : azimuth_(wrap_two_pi(azimuth)), polar_(std::clamp(polar, 0.0, kPi))
{
}

UnitVec3::UnitVec3(double x, double y, double z)
{
    const double n = std::sqrt(x * x + y * y + z * z);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw DomainError("cannot normalize a zero or non-finite vector");
    }
    x_ = x / n;
    y_ = y / n;
    z_ = z / n;
}

Displacement::Displacement(double step, double direction_deg)
    : step_(step), direction_deg_(wrap_degrees(direction_deg))
{
    if (!std::isfinite(step) || step < 0.0 || step >= 1.0) {
        throw InvalidDisplacement(fmt::format("step {} outside [0, 1): the observer must stay inside the sphere", step));
    }
    if (!std::isfinite(direction_deg)) {
        throw InvalidDisplacement("direction must be finite");
    }
}

double wrap_two_pi(double angle) noexcept
{
    double w = std::fmod(angle, kTwoPi);
    if (w < 0.0) {
        w += kTwoPi;
    }
    // fmod of a tiny negative number plus 2pi can round up to 2pi.
    return w >= kTwoPi ? 0.0 : w;
}

double wrap_degrees(double deg) noexcept
{
    double w = std::fmod(deg, 360.0);
    if (w < 0.0) {
        w += 360.0;
    }
    return w >= 360.0 ? 0.0 : w;
}

double clamp_unit(double v, const char* what)
{
    if (v > 1.0 + kTrigSlack || v < -1.0 - kTrigSlack || std::isnan(v)) {
        throw DomainError(fmt::format("{}: argument {} outside [-1, 1]", what, v));
    }
    return std::clamp(v, -1.0, 1.0);
}

SphereDir pixel_to_dir(PixelCoord p, const ImageDims& dims) noexcept
{
    return SphereDir(kTwoPi * (p.x + 0.5) / dims.width(), kPi * (p.y + 0.5) / dims.height());
}

PixelCoord dir_to_pixel(const SphereDir& d, const ImageDims& dims) noexcept
{
    const double w = dims.width();
    double x = d.azimuth() * w / kTwoPi - 0.5;
    if (x < 0.0) {
        x += w;
    }
    if (x >= w) {
        x -= w;
    }
    const double y = std::clamp(d.polar() * dims.height() / kPi - 0.5, 0.0, std::nextafter(double(dims.height()), 0.0));
    return {x, y};
}

UnitVec3 to_unit(const SphereDir& d) noexcept
{
    const double s = std::sin(d.polar());
    return UnitVec3(s * std::cos(d.azimuth()), s * std::sin(d.azimuth()), std::cos(d.polar()));
}

SphereDir to_dir(const UnitVec3& v) noexcept
{
    // atan2 keeps the polar angle accurate near the poles, where acos(z) is not.
    const double rho = std::hypot(v.x(), v.y());
    return SphereDir(std::atan2(v.y(), v.x()), std::atan2(rho, v.z()));
}

double angular_distance(const SphereDir& a, const SphereDir& b) noexcept
{
    const UnitVec3 u = to_unit(a);
    const UnitVec3 v = to_unit(b);
    const double cx = u.y() * v.z() - u.z() * v.y();
    const double cy = u.z() * v.x() - u.x() * v.z();
    const double cz = u.x() * v.y() - u.y() * v.x();
    return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), u.dot(v));
}

SphereDir rotate_azimuth(const SphereDir& d, double delta) noexcept
{
    return SphereDir(d.azimuth() + delta, d.polar());
}

UnitVec3 displace_intersect(const UnitVec3& v, const Displacement& disp)
{
    const double step = disp.step();
    if (step >= 1.0) {
        throw InvalidDisplacement("step must be < 1");
    }
    const double lx = step * std::cos(disp.direction_rad());
    const double ly = step * std::sin(disp.direction_rad());
    // |l + t v| = 1  =>  t^2 + 2 (l.v) t + (|l|^2 - 1) = 0, positive root.
    const double lv = lx * v.x() + ly * v.y();
    const double t = -lv + std::sqrt(lv * lv + 1.0 - step * step);
    return UnitVec3(lx + t * v.x(), ly + t * v.y(), t * v.z());
}

SphereDir map_dir(const SphereDir& d_new, const Displacement& disp)
{
    if (disp.step() == 0.0) {
        return d_new;
    }
    return to_dir(displace_intersect(to_unit(d_new), disp));
}

double horizontal_map_closed(double theta_rel, double step)
{
    if (!(step >= 0.0 && step < 1.0)) {
        throw DomainError(fmt::format("horizontal_map_closed: step {} outside [0, 1)", step));
    }
    return theta_rel - std::asin(step * std::sin(theta_rel));
}

double vertical_map_closed(double elev, double a, bool crossed_pole)
{
    if (!(a >= 0.0)) {
        throw DomainError(fmt::format("vertical_map_closed: effective displacement {} is negative", a));
    }
    const double c = std::cos(elev);
    const double denom = std::sqrt(a * a - 2.0 * a * c + 1.0);
    if (denom == 0.0) {
        throw DomainError("vertical_map_closed: observer coincides with the surface point");
    }
    const double ratio = (a - c) / denom;
    if (crossed_pole) {
        return sign(elev) * (kPi - std::acos(clamp_unit(ratio, "vertical_map_closed")));
    }
    return sign(elev) * std::acos(clamp_unit(-ratio, "vertical_map_closed"));
}

SphereDir map_dir_separable(const SphereDir& d_new, const Displacement& disp)
{
    if (disp.step() == 0.0) {
        return d_new;
    }
    const double direction = disp.direction_rad();
    const double psi = horizontal_map_closed(wrap_pi(d_new.azimuth() - direction), disp.step());
    const double effective = disp.step() * std::abs(psi / kPi);

    // Signed angle from the equator, positive toward the nadir (row order).
    const double elev = d_new.polar() - kPi / 2;
    const double beta = vertical_map_closed(elev, effective, false);

    double azimuth = direction + psi;
    double polar = kPi / 2 + beta;
    if (polar < 0.0) {
        polar = -polar;
        azimuth += kPi;
    } else if (polar > kPi) {
        polar = kTwoPi - polar;
        azimuth += kPi;
    }
    return SphereDir(azimuth, polar);
}

}  // namespace pano
