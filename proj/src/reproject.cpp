#include "panoworld/reproject.hpp"

#include "parallel.hpp"

#include <cmath>
#include <fmt/format.h>

namespace pano {

std::string_view to_string(RemapMethod m) noexcept
{
    return m == RemapMethod::oracle3d ? "oracle3d" : "paper-separable";
}

std::string_view to_string(Interpolation i) noexcept
{
    return i == Interpolation::nearest ? "nearest" : "bilinear";
}

std::optional<RemapMethod> parse_remap_method(std::string_view s) noexcept
{
    if (s == "oracle3d") {
        return RemapMethod::oracle3d;
    }
    if (s == "paper-separable") {
        return RemapMethod::paper_separable;
    }
    return std::nullopt;
}

std::optional<Interpolation> parse_interpolation(std::string_view s) noexcept
{
    if (s == "nearest") {
        return Interpolation::nearest;
    }
    if (s == "bilinear") {
        return Interpolation::bilinear;
    }
    return std::nullopt;
}

unsigned Parallelism::resolved() const noexcept
{
    if (threads > 0) {
        return threads;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

RemapField::RemapField(ImageDims dims, std::vector<PixelCoord> source) : dims_(dims), source_(std::move(source))
{
    if (source_.size() != dims_.pixel_count()) {
        throw InvalidDims(fmt::format("remap field has {} entries for {} pixels", source_.size(), dims_.pixel_count()));
    }
    const double w = dims_.width();
    const double h = dims_.height();
    for (const PixelCoord& c : source_) {
        if (!(c.x >= 0.0 && c.x < w && c.y >= 0.0 && c.y < h)) {
            throw std::out_of_range(fmt::format("remap source ({}, {}) outside {}x{}", c.x, c.y, w, h));
        }
    }
}

namespace {

// Per-pixel kernel for the exact mapping: same math as
// dir_to_pixel(map_dir(pixel_to_dir(p))) with the trig of each row and
// column hoisted into tables.
void build_oracle_rows(const ImageDims& dims, const Displacement& disp, std::span<PixelCoord> out, int y0, int y1,
                       std::span<const double> cos_az, std::span<const double> sin_az)
{
    const int w = dims.width();
    const int h = dims.height();
    const double step = disp.step();
    const double lx = step * std::cos(disp.direction_rad());
    const double ly = step * std::sin(disp.direction_rad());
    const double radial = 1.0 - step * step;
    const double x_scale = w / kTwoPi;
    const double y_scale = h / kPi;
    const double y_max = std::nextafter(double(h), 0.0);

    for (int y = y0; y < y1; ++y) {
        const double polar = kPi * (y + 0.5) / h;
        const double sp = std::sin(polar);
        const double vz = std::cos(polar);
        PixelCoord* row = out.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(w);
        for (int x = 0; x < w; ++x) {
            const double vx = sp * cos_az[x];
            const double vy = sp * sin_az[x];
            const double lv = lx * vx + ly * vy;
            const double t = -lv + std::sqrt(lv * lv + radial);
            const double bx = lx + t * vx;
            const double by = ly + t * vy;
            const double bz = t * vz;

            double az = std::atan2(by, bx);
            if (az < 0.0) {
                az += kTwoPi;
            }
            const double pol = std::atan2(std::hypot(bx, by), bz);

            double sx = az * x_scale - 0.5;
            if (sx < 0.0) {
                sx += w;
            }
            if (sx >= w) {
                sx -= w;
            }
            row[x] = {sx, std::clamp(pol * y_scale - 0.5, 0.0, y_max)};
        }
    }
}

}  // namespace

RemapField build_remap_field(const ImageDims& dims, const Displacement& disp, RemapMethod method, Parallelism par)
{
    const int w = dims.width();
    std::vector<PixelCoord> source(dims.pixel_count());

    if (disp.step() == 0.0) {
        for (int y = 0; y < dims.height(); ++y) {
            for (int x = 0; x < w; ++x) {
                source[static_cast<std::size_t>(y) * w + x] = {double(x), double(y)};
            }
        }
        return RemapField(dims, std::move(source));
    }

    if (method == RemapMethod::oracle3d) {
        std::vector<double> cos_az(w);
        std::vector<double> sin_az(w);
        for (int x = 0; x < w; ++x) {
            const double az = kTwoPi * (x + 0.5) / w;
            cos_az[x] = std::cos(az);
            sin_az[x] = std::sin(az);
        }
        detail::for_each_row_band(dims.height(), par.resolved(), [&](int y0, int y1) {
            build_oracle_rows(dims, disp, source, y0, y1, cos_az, sin_az);
        });
    } else {
        detail::for_each_row_band(dims.height(), par.resolved(), [&](int y0, int y1) {
            for (int y = y0; y < y1; ++y) {
                for (int x = 0; x < w; ++x) {
                    const SphereDir d = pixel_to_dir({double(x), double(y)}, dims);
                    source[static_cast<std::size_t>(y) * w + x] = dir_to_pixel(map_dir_separable(d, disp), dims);
                }
            }
        });
    }
    return RemapField(dims, std::move(source));
}

namespace {

// Bilinear blend at an in-range coordinate (x in [0, w), y in [0, h)).
inline void bilinear_in_range(const std::uint8_t* pixels, int w, int h, double x, double y, std::uint8_t* out) noexcept
{
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const double fx = x - x0;
    const double fy = y - y0;
    const int x1 = x0 + 1 == w ? 0 : x0 + 1;
    const int y1 = y0 + 1 < h ? y0 + 1 : h - 1;

    const std::size_t stride = static_cast<std::size_t>(w) * 3;
    const std::uint8_t* r0 = pixels + static_cast<std::size_t>(y0) * stride;
    const std::uint8_t* r1 = pixels + static_cast<std::size_t>(y1) * stride;
    const double w00 = (1.0 - fx) * (1.0 - fy);
    const double w10 = fx * (1.0 - fy);
    const double w01 = (1.0 - fx) * fy;
    const double w11 = fx * fy;
    for (int c = 0; c < 3; ++c) {
        const double v = r0[x0 * 3 + c] * w00 + r0[x1 * 3 + c] * w10 + r1[x0 * 3 + c] * w01 + r1[x1 * 3 + c] * w11;
        out[c] = static_cast<std::uint8_t>(std::min(v + 0.5, 255.0));
    }
}

inline void nearest_in_range(const std::uint8_t* pixels, int w, int h, double x, double y, std::uint8_t* out) noexcept
{
    int xi = static_cast<int>(x + 0.5);
    if (xi == w) {
        xi = 0;
    }
    const int yi = std::min(static_cast<int>(y + 0.5), h - 1);
    const std::uint8_t* p = pixels + (static_cast<std::size_t>(yi) * w + xi) * 3;
    out[0] = p[0];
    out[1] = p[1];
    out[2] = p[2];
}

}  // namespace

Rgb sample(const EquirectImage& image, PixelCoord coord, Interpolation interp) noexcept
{
    const int w = image.width();
    const int h = image.height();
    double x = std::fmod(coord.x, double(w));
    if (x < 0.0) {
        x += w;
    }
    if (x >= w) {
        x = 0.0;
    }
    const double y = std::clamp(coord.y, 0.0, std::nextafter(double(h), 0.0));

    Rgb out{};
    if (interp == Interpolation::nearest) {
        nearest_in_range(image.bytes().data(), w, h, x, y, out.data());
    } else {
        bilinear_in_range(image.bytes().data(), w, h, x, y, out.data());
    }
    return out;
}

EquirectImage apply_remap(const EquirectImage& image, const RemapField& field, Interpolation interp, Parallelism par)
{
    if (image.dims() != field.dims()) {
        throw InvalidDims(fmt::format("remap field is {}x{}, image is {}x{}", field.dims().width(),
                                      field.dims().height(), image.width(), image.height()));
    }
    EquirectImage out(image.dims());
    const int w = image.width();
    const int h = image.height();
    const std::uint8_t* src = image.bytes().data();
    std::uint8_t* dst = out.bytes().data();
    // Field coordinates are range-checked at construction.
    detail::for_each_row_band(h, par.resolved(), [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            const PixelCoord* coords = &field.at(0, y);
            std::uint8_t* row = dst + static_cast<std::size_t>(y) * w * 3;
            if (interp == Interpolation::nearest) {
                for (int x = 0; x < w; ++x) {
                    nearest_in_range(src, w, h, coords[x].x, coords[x].y, row + x * 3);
                }
            } else {
                for (int x = 0; x < w; ++x) {
                    bilinear_in_range(src, w, h, coords[x].x, coords[x].y, row + x * 3);
                }
            }
        }
    });
    return out;
}

EquirectImage reproject_image(const EquirectImage& image, const Displacement& disp, RemapMethod method,
                              Interpolation interp, Parallelism par)
{
    return apply_remap(image, build_remap_field(image.dims(), disp, method, par), interp, par);
}

std::shared_ptr<const RemapField> RemapCache::field(const ImageDims& dims, const Displacement& disp,
                                                    RemapMethod method)
{
    const Key key{dims.width(), disp.step(), disp.direction_deg(), method};
    {
        std::lock_guard lock(mutex_);
        if (auto it = fields_.find(key); it != fields_.end()) {
            return it->second;
        }
    }
    // Built outside the lock; a racing builder produces an identical field.
    auto built = std::make_shared<const RemapField>(build_remap_field(dims, disp, method, par_));
    std::lock_guard lock(mutex_);
    return fields_.try_emplace(key, std::move(built)).first->second;
}

EquirectImage RemapCache::reproject(const EquirectImage& image, const Displacement& disp, RemapMethod method,
                                    Interpolation interp)
{
    return apply_remap(image, *field(image.dims(), disp, method), interp, par_);
}

std::size_t RemapCache::size() const
{
    std::lock_guard lock(mutex_);
    return fields_.size();
}

MethodComparison compare_methods(const ImageDims& dims, const Displacement& disp, Parallelism par)
{
    const int w = dims.width();
    const int h = dims.height();
    const unsigned workers = std::clamp<unsigned>(par.resolved(), 1, static_cast<unsigned>(h));

    struct Partial {
        double max = 0.0;
        double sum = 0.0;
        int wx = 0;
        int wy = 0;
    };
    std::vector<Partial> partials(static_cast<std::size_t>(h));
    detail::for_each_row_band(h, workers, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            Partial& p = partials[static_cast<std::size_t>(y)];
            for (int x = 0; x < w; ++x) {
                const SphereDir d = pixel_to_dir({double(x), double(y)}, dims);
                const double e = angular_distance(map_dir(d, disp), map_dir_separable(d, disp));
                p.sum += e;
                if (e > p.max) {
                    p.max = e;
                    p.wx = x;
                    p.wy = y;
                }
            }
        }
    });

    // Per-row partials reduced in row order: identical result for any thread count.
    MethodComparison report;
    double total = 0.0;
    for (const Partial& p : partials) {
        total += p.sum;
        if (p.max > report.max_error) {
            report.max_error = p.max;
            report.worst_x = p.wx;
            report.worst_y = p.wy;
        }
    }
    report.mean_error = total / static_cast<double>(dims.pixel_count());

    for (int x = 0; x < w; ++x) {
        const SphereDir d(kTwoPi * (x + 0.5) / w, kPi / 2);
        report.equator_max_error = std::max(report.equator_max_error, angular_distance(map_dir(d, disp), map_dir_separable(d, disp)));
    }
    return report;
}

}  // namespace pano
