#pragma once

#include "panoworld/geometry.hpp"
#include "panoworld/image.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string_view>
#include <tuple>
#include <vector>

namespace pano {

enum class RemapMethod { oracle3d, paper_separable };
enum class Interpolation { nearest, bilinear };

std::string_view to_string(RemapMethod m) noexcept;
std::string_view to_string(Interpolation i) noexcept;
std::optional<RemapMethod> parse_remap_method(std::string_view s) noexcept;
std::optional<Interpolation> parse_interpolation(std::string_view s) noexcept;

/// Worker count for row-partitioned kernels. 0 means all logical cores.
struct Parallelism {
    unsigned threads = 0;

    unsigned resolved() const noexcept;
};

/// Source coordinate for every destination pixel, row-major. Immutable once
/// built and safe to share between threads.
class RemapField {
public:
    RemapField(ImageDims dims, std::vector<PixelCoord> source);

    const ImageDims& dims() const noexcept { return dims_; }
    const PixelCoord& at(int x, int y) const noexcept
    {
        return source_[static_cast<std::size_t>(y) * static_cast<std::size_t>(dims_.width()) + static_cast<std::size_t>(x)];
    }
    std::span<const PixelCoord> coords() const noexcept { return source_; }

private:
    ImageDims dims_;
    std::vector<PixelCoord> source_;
};

RemapField build_remap_field(const ImageDims& dims, const Displacement& disp, RemapMethod method,
                             Parallelism par = {});

Rgb sample(const EquirectImage& image, PixelCoord coord, Interpolation interp) noexcept;

/// output(p) = sample(image, field(p)).
EquirectImage apply_remap(const EquirectImage& image, const RemapField& field, Interpolation interp,
                          Parallelism par = {});

/// The panorama as seen after moving the observer by disp.
EquirectImage reproject_image(const EquirectImage& image, const Displacement& disp, RemapMethod method,
                              Interpolation interp, Parallelism par = {});

/// Memoizes remap fields by (dims, displacement, method); thread-safe.
class RemapCache {
public:
    explicit RemapCache(Parallelism par = {}) : par_(par) {}

    std::shared_ptr<const RemapField> field(const ImageDims& dims, const Displacement& disp, RemapMethod method);
    EquirectImage reproject(const EquirectImage& image, const Displacement& disp, RemapMethod method,
                            Interpolation interp);

    std::size_t size() const;

private:
    using Key = std::tuple<int, double, double, RemapMethod>;

    Parallelism par_;
    mutable std::mutex mutex_;
    std::map<Key, std::shared_ptr<const RemapField>> fields_;
};

struct MethodComparison {
    double max_error = 0.0;   // radians, over all pixel centers
    double mean_error = 0.0;  // radians
    int worst_x = 0;
    int worst_y = 0;
    /// Max error along the true equator (polar exactly pi/2), one sample per column.
    double equator_max_error = 0.0;
};

/// Angular disagreement between the exact and the separable mapping.
MethodComparison compare_methods(const ImageDims& dims, const Displacement& disp, Parallelism par = {});

}  // namespace pano
