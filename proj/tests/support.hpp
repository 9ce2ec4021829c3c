#pragma once

#include "panoworld/image.hpp"
#include "panoworld/restorer.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <httplib.h>
#include <json.hpp>
#include <map>
#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace pano::test {

// Every pixel's color encodes its own column and row, so a nearest-neighbour
// warp of this chart reveals which source pixel each output pixel pulled.
inline EquirectImage coordinate_chart(int width)
{
    EquirectImage img(ImageDims::from_width(width));
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            img.set(x, y,
                    {static_cast<std::uint8_t>(x & 0xff), static_cast<std::uint8_t>(y & 0xff),
                     static_cast<std::uint8_t>((x >> 8) | ((y >> 8) << 4))});
        }
    }
    return img;
}

inline std::pair<int, int> chart_coord(Rgb c)
{
    return {c[0] | ((c[2] & 0x0f) << 8), c[1] | ((c[2] >> 4) << 8)};
}

inline EquirectImage noise_image(int width, unsigned seed)
{
    EquirectImage img(ImageDims::from_width(width));
    std::mt19937 rng(seed);
    for (auto& b : img.bytes()) {
        b = static_cast<std::uint8_t>(rng() & 0xff);
    }
    return img;
}

inline EquirectImage mirror_columns(const EquirectImage& in, int axis2)
{
    // Column x maps to (axis2 - 1 - x) mod w: a reflection about the
    // boundary at axis2 / 2 columns.
    EquirectImage out(in.dims());
    const int w = in.width();
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < w; ++x) {
            out.set(((axis2 - 1 - x) % w + w) % w, y, in.at(x, y));
        }
    }
    return out;
}

inline EquirectImage mirror_rows(const EquirectImage& in)
{
    EquirectImage out(in.dims());
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            out.set(x, in.height() - 1 - y, in.at(x, y));
        }
    }
    return out;
}

inline EquirectImage roll_columns(const EquirectImage& in, int k)
{
    EquirectImage out(in.dims());
    const int w = in.width();
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < w; ++x) {
            out.set(((x + k) % w + w) % w, y, in.at(x, y));
        }
    }
    return out;
}

class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("panoworld-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Map of relative path -> contents for every regular file under root.
inline std::map<std::string, std::string> snapshot_tree(const std::filesystem::path& root)
{
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            files[std::filesystem::relative(e.path(), root).string()] = read_file(e.path());
        }
    }
    return files;
}

enum class StubMode { echo, wrong_dims, garbage, server_error, slow };

/// Local restorer service on 127.0.0.1 speaking the /restore protocol.
class StubRestorer {
public:
    explicit StubRestorer(StubMode mode, std::string base = "") : mode_(mode)
    {
        server_.Post(base + "/restore", [this](const httplib::Request& req, httplib::Response& res) {
            {
                std::lock_guard lock(mutex_);
                bodies_.push_back(req.body);
            }
            handle(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        base_ = base;
    }
    ~StubRestorer()
    {
        server_.stop();
        thread_.join();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + base_; }
    std::vector<std::string> bodies() const
    {
        std::lock_guard lock(mutex_);
        return bodies_;
    }

private:
    void handle(const httplib::Request& req, httplib::Response& res)
    {
        switch (mode_) {
        case StubMode::server_error:
            res.status = 500;
            res.set_content("boom", "text/plain");
            return;
        case StubMode::garbage:
            res.set_content("{not json", "application/json");
            return;
        case StubMode::slow:
            std::this_thread::sleep_for(std::chrono::milliseconds(600));
            [[fallthrough]];
        case StubMode::echo: {
            const auto body = nlohmann::json::parse(req.body);
            res.set_content(nlohmann::json{{"image", body.at("image")}}.dump(), "application/json");
            return;
        }
        case StubMode::wrong_dims: {
            const auto small = EquirectImage::filled(ImageDims(8, 4), {200, 10, 10});
            res.set_content(nlohmann::json{{"image", base64_encode(encode_png(small))}}.dump(), "application/json");
            return;
        }
        }
    }

    StubMode mode_;
    httplib::Server server_;
    int port_ = 0;
    std::string base_;
    std::thread thread_;
    mutable std::mutex mutex_;
    std::vector<std::string> bodies_;
};

/// A port nothing listens on: bound once, then closed.
inline int unused_port()
{
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return ntohs(addr.sin_port);
}

}  // namespace pano::test
