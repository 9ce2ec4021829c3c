#pragma once

#include "panoworld/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace pano {

using Rgb = std::array<std::uint8_t, 3>;

/// 2:1 equirectangular raster, row-major interleaved RGB8.
class EquirectImage {
public:
    /// All black.
    explicit EquirectImage(ImageDims dims);
    static EquirectImage filled(ImageDims dims, Rgb color);
    /// Takes ownership of an existing buffer; its size must be width * height * 3.
    EquirectImage(ImageDims dims, std::vector<std::uint8_t> pixels);

    const ImageDims& dims() const noexcept { return dims_; }
    int width() const noexcept { return dims_.width(); }
    int height() const noexcept { return dims_.height(); }

    std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }
    std::span<std::uint8_t> bytes() noexcept { return pixels_; }

    std::span<const std::uint8_t> row(int y) const noexcept
    {
        return std::span(pixels_).subspan(static_cast<std::size_t>(y) * row_stride(), row_stride());
    }
    std::span<std::uint8_t> row(int y) noexcept
    {
        return std::span(pixels_).subspan(static_cast<std::size_t>(y) * row_stride(), row_stride());
    }

    Rgb at(int x, int y) const noexcept
    {
        const std::size_t i = offset(x, y);
        return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
    }
    void set(int x, int y, Rgb c) noexcept
    {
        const std::size_t i = offset(x, y);
        pixels_[i] = c[0];
        pixels_[i + 1] = c[1];
        pixels_[i + 2] = c[2];
    }

    friend bool operator==(const EquirectImage&, const EquirectImage&) = default;

private:
    std::size_t row_stride() const noexcept { return static_cast<std::size_t>(dims_.width()) * 3; }
    std::size_t offset(int x, int y) const noexcept
    {
        return static_cast<std::size_t>(y) * row_stride() + static_cast<std::size_t>(x) * 3;
    }

    ImageDims dims_;
    std::vector<std::uint8_t> pixels_;
};

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// PNG or JPEG, by content. Throws ImageIoError on unreadable files and
// InvalidDims when the raster is not 2:1.
EquirectImage load_image(const std::filesystem::path& path);
void save_png(const EquirectImage& image, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const EquirectImage& image);
EquirectImage decode_image(std::span<const std::uint8_t> encoded);

/// Largest per-channel absolute difference. Dims must match.
int max_channel_diff(const EquirectImage& a, const EquirectImage& b);

}  // namespace pano
