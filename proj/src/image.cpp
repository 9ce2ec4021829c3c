#include "panoworld/image.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace pano {

namespace {

EquirectImage from_bgr(const cv::Mat& decoded)
{
    cv::Mat rgb;
    switch (decoded.channels()) {
    case 1:
        cv::cvtColor(decoded, rgb, cv::COLOR_GRAY2RGB);
        break;
    case 3:
        cv::cvtColor(decoded, rgb, cv::COLOR_BGR2RGB);
        break;
    case 4:
        cv::cvtColor(decoded, rgb, cv::COLOR_BGRA2RGB);
        break;
    default:
        throw ImageIoError(fmt::format("unsupported channel count {}", decoded.channels()));
    }
    if (rgb.depth() != CV_8U) {
        throw ImageIoError("only 8-bit images are supported");
    }
    ImageDims dims(rgb.cols, rgb.rows);
    std::vector<std::uint8_t> pixels(dims.pixel_count() * 3);
    for (int y = 0; y < rgb.rows; ++y) {
        const auto* src = rgb.ptr<std::uint8_t>(y);
        std::copy_n(src, static_cast<std::size_t>(rgb.cols) * 3, pixels.begin() + static_cast<std::ptrdiff_t>(y) * rgb.cols * 3);
    }
    return EquirectImage(dims, std::move(pixels));
}

cv::Mat to_bgr(const EquirectImage& image)
{
    // cv::Mat header over const data; cvtColor writes a fresh buffer.
    const cv::Mat rgb(image.height(), image.width(), CV_8UC3, const_cast<std::uint8_t*>(image.bytes().data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    return bgr;
}

const std::vector<int> kPngParams = {cv::IMWRITE_PNG_COMPRESSION, 6};

}  // namespace

EquirectImage::EquirectImage(ImageDims dims) : dims_(dims), pixels_(dims.pixel_count() * 3) {}

EquirectImage EquirectImage::filled(ImageDims dims, Rgb color)
{
    EquirectImage img(dims);
    for (std::size_t i = 0; i < img.pixels_.size(); i += 3) {
        std::copy(color.begin(), color.end(), img.pixels_.begin() + static_cast<std::ptrdiff_t>(i));
    }
    return img;
}

EquirectImage::EquirectImage(ImageDims dims, std::vector<std::uint8_t> pixels) : dims_(dims), pixels_(std::move(pixels))
{
    if (pixels_.size() != dims_.pixel_count() * 3) {
        throw InvalidDims(fmt::format("pixel buffer holds {} bytes, {}x{} RGB needs {}", pixels_.size(), dims_.width(),
                                      dims_.height(), dims_.pixel_count() * 3));
    }
}

EquirectImage load_image(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ImageIoError(fmt::format("cannot open image {}", path.string()));
    }
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_image(data);
    } catch (const ImageIoError& e) {
        throw ImageIoError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void save_png(const EquirectImage& image, const std::filesystem::path& path)
{
    const auto data = encode_png(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw ImageIoError(fmt::format("cannot write {}", path.string()));
    }
}

std::vector<std::uint8_t> encode_png(const EquirectImage& image)
{
    std::vector<std::uint8_t> buf;
    if (!cv::imencode(".png", to_bgr(image), buf, kPngParams)) {
        throw ImageIoError("PNG encoding failed");
    }
    return buf;
}

EquirectImage decode_image(std::span<const std::uint8_t> encoded)
{
    if (encoded.empty()) {
        throw ImageIoError("empty image data");
    }
    const cv::Mat raw(1, static_cast<int>(encoded.size()), CV_8UC1, const_cast<std::uint8_t*>(encoded.data()));
    cv::Mat decoded;
    try {
        decoded = cv::imdecode(raw, cv::IMREAD_UNCHANGED);
    } catch (const cv::Exception& e) {
        throw ImageIoError(fmt::format("image decoding failed: {}", e.what()));
    }
    if (decoded.empty()) {
        throw ImageIoError("not a decodable PNG/JPEG image");
    }
    return from_bgr(decoded);
}

int max_channel_diff(const EquirectImage& a, const EquirectImage& b)
{
    if (a.dims() != b.dims()) {
        throw InvalidDims("max_channel_diff: dims differ");
    }
    int worst = 0;
    const auto pa = a.bytes();
    const auto pb = b.bytes();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        worst = std::max(worst, std::abs(int(pa[i]) - int(pb[i])));
    }
    return worst;
}

}  // namespace pano
