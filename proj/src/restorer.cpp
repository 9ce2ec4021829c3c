#include "panoworld/restorer.hpp"

#include <chrono>
#include <cstdlib>
#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>
#include <regex>
#include <spdlog/spdlog.h>
#include <thread>

namespace pano {

using json = nlohmann::json;

std::string_view to_string(RestoreErrorKind k) noexcept
{
    switch (k) {
    case RestoreErrorKind::network_unreachable:
        return "network-unreachable";
    case RestoreErrorKind::timeout:
        return "timeout";
    case RestoreErrorKind::malformed_response:
        return "malformed-response";
    case RestoreErrorKind::dims_mismatch:
        return "dims-mismatch";
    case RestoreErrorKind::invalid_request:
        return "invalid-request";
    }
    return "unknown";
}

std::optional<RestorerKind> parse_restorer_kind(std::string_view s) noexcept
{
    if (s == "identity") {
        return RestorerKind::identity;
    }
    if (s == "http") {
        return RestorerKind::http;
    }
    return std::nullopt;
}

std::string_view to_string(RestorerKind k) noexcept
{
    return k == RestorerKind::identity ? "identity" : "http";
}

namespace {

const std::regex kEndpointPattern(R"(^http://([A-Za-z0-9._-]+|\[[0-9A-Fa-f:.]+\])(?::([0-9]{1,5}))?(/[^?#]*)?$)");

}  // namespace

void RestorerConfig::validate() const
{
    if (!(timeout_s > 0.0)) {
        throw std::invalid_argument(fmt::format("restorer timeout must be > 0 (got {})", timeout_s));
    }
    if (retries < 0) {
        throw std::invalid_argument(fmt::format("restorer retries must be >= 0 (got {})", retries));
    }
    if (backoff_initial_s < 0.0 || backoff_factor < 1.0) {
        throw std::invalid_argument("restorer backoff must be non-negative with factor >= 1");
    }
    if (max_in_flight < 1) {
        throw std::invalid_argument("restorer max_in_flight must be >= 1");
    }
    if (kind == RestorerKind::http && !std::regex_match(endpoint, kEndpointPattern)) {
        throw std::invalid_argument(fmt::format("restorer endpoint '{}' is not a well-formed http:// URL", endpoint));
    }
}

RestorerConfig with_env_overrides(RestorerConfig cfg)
{
    if (const char* env = std::getenv(kEndpointEnvVar); env != nullptr && *env != '\0') {
        cfg.endpoint = env;
    }
    return cfg;
}

EquirectImage IdentityRestorer::restore(const RestoreRequest& req)
{
    return req.image;
}

std::string base64_encode(std::span<const std::uint8_t> data)
{
    std::string out(4 * ((data.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(), static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text)
{
    if (text.size() % 4 != 0) {
        throw std::invalid_argument("base64 length is not a multiple of 4");
    }
    std::vector<std::uint8_t> out(text.size() / 4 * 3);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0) {
        throw std::invalid_argument("invalid base64 data");
    }
    // EVP_DecodeBlock counts '=' padding as zero bytes.
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') {
        pad = text.size() >= 2 && text[text.size() - 2] == '=' ? 2 : 1;
    }
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

HttpRestorer::HttpRestorer(RestorerConfig cfg) : cfg_(std::move(cfg)), in_flight_(cfg_.max_in_flight)
{
    cfg_.validate();
    std::smatch m;
    std::regex_match(cfg_.endpoint, m, kEndpointPattern);
    target_.host = m[1].str();
    if (target_.host.front() == '[') {
        target_.host = target_.host.substr(1, target_.host.size() - 2);
    }
    target_.port = m[2].matched ? std::stoi(m[2].str()) : 80;
    std::string base = m[3].matched ? m[3].str() : "";
    while (!base.empty() && base.back() == '/') {
        base.pop_back();
    }
    target_.path = base + "/restore";
}

EquirectImage HttpRestorer::restore(const RestoreRequest& req)
{
    if (req.prompt.empty()) {
        throw RestoreError(RestoreErrorKind::invalid_request, "restore request needs a non-empty prompt");
    }
    if (!(req.strength >= 0.0 && req.strength <= 1.0)) {
        throw RestoreError(RestoreErrorKind::invalid_request, fmt::format("strength {} outside [0, 1]", req.strength));
    }

    json payload = {
        {"image", base64_encode(encode_png(req.image))},
        {"prompt", req.prompt},
        {"strength", req.strength},
        {"seed", req.seed ? json(*req.seed) : json(nullptr)},
    };
    // Serialized once so every retry sends the same bytes.
    const std::string body = payload.dump();
    if (spdlog::should_log(spdlog::level::debug)) {
        json shown = payload;
        shown["image"] = fmt::format("<{} base64 chars elided>", payload["image"].get_ref<const std::string&>().size());
        spdlog::debug("POST http://{}:{}{} {}", target_.host, target_.port, target_.path, shown.dump());
    }

    const auto timeout = std::chrono::duration<double>(cfg_.timeout_s);
    const auto as_micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout);

    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
    } release{in_flight_};

    double delay = cfg_.backoff_initial_s;
    for (int attempt = 0;; ++attempt) {
        httplib::Client client(target_.host, target_.port);
        client.set_connection_timeout(as_micros);
        client.set_read_timeout(as_micros);
        client.set_write_timeout(as_micros);

        auto res = client.Post(target_.path, body, "application/json");
        if (res) {
            spdlog::debug("restorer answered HTTP {} ({} bytes)", res->status, res->body.size());
            if (res->status < 200 || res->status >= 300) {
                throw RestoreError(RestoreErrorKind::malformed_response,
                                   fmt::format("restorer returned HTTP {}", res->status));
            }
            std::vector<std::uint8_t> png;
            try {
                const json reply = json::parse(res->body);
                png = base64_decode(reply.at("image").get<std::string>());
            } catch (const std::exception& e) {
                throw RestoreError(RestoreErrorKind::malformed_response,
                                   fmt::format("unparseable restorer response: {}", e.what()));
            }
            EquirectImage restored = [&] {
                try {
                    return decode_image(png);
                } catch (const std::exception& e) {
                    throw RestoreError(RestoreErrorKind::malformed_response,
                                       fmt::format("restorer image does not decode: {}", e.what()));
                }
            }();
            if (restored.dims() != req.image.dims()) {
                throw RestoreError(RestoreErrorKind::dims_mismatch,
                                   fmt::format("restorer returned {}x{}, expected {}x{}", restored.width(),
                                               restored.height(), req.image.width(), req.image.height()));
            }
            return restored;
        }

        const httplib::Error err = res.error();
        const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                               err == httplib::Error::Write;
        const RestoreErrorKind kind = timed_out ? RestoreErrorKind::timeout : RestoreErrorKind::network_unreachable;
        if (attempt >= cfg_.retries) {
            throw RestoreError(kind, fmt::format("restorer at {} failed after {} attempt(s): {}", cfg_.endpoint,
                                                 attempt + 1, httplib::to_string(err)));
        }
        spdlog::warn("restorer attempt {} failed ({}), retrying in {:.2f} s", attempt + 1, httplib::to_string(err),
                     delay);
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        delay *= cfg_.backoff_factor;
    }
}

std::unique_ptr<Restorer> make_restorer(const RestorerConfig& cfg)
{
    cfg.validate();
    if (cfg.kind == RestorerKind::http) {
        return std::make_unique<HttpRestorer>(cfg);
    }
    return std::make_unique<IdentityRestorer>();
}

EquirectImage restore(const RestoreRequest& req, const RestorerConfig& cfg)
{
    return make_restorer(cfg)->restore(req);
}

}  // namespace pano
