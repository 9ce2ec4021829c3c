#pragma once

#include "panoworld/image.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pano {

inline constexpr double kDefaultStrength = 0.55;

struct RestoreRequest {
    EquirectImage image;
    std::string prompt;
    double strength = kDefaultStrength;
    std::optional<std::int64_t> seed;
};

enum class RestoreErrorKind { network_unreachable, timeout, malformed_response, dims_mismatch, invalid_request };

std::string_view to_string(RestoreErrorKind k) noexcept;

class RestoreError : public std::runtime_error {
public:
    RestoreError(RestoreErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    RestoreErrorKind kind() const noexcept { return kind_; }

private:
    RestoreErrorKind kind_;
};

enum class RestorerKind { identity, http };

std::optional<RestorerKind> parse_restorer_kind(std::string_view s) noexcept;
std::string_view to_string(RestorerKind k) noexcept;

/// Overrides RestorerConfig::endpoint when set.
inline constexpr const char* kEndpointEnvVar = "PANO_RESTORER_ENDPOINT";

struct RestorerConfig {
    RestorerKind kind = RestorerKind::identity;
    std::string endpoint;  // http://host[:port][/base]; requests go to <endpoint>/restore
    double timeout_s = 120.0;
    int retries = 2;
    double backoff_initial_s = 1.0;  // delay before the first retry
    double backoff_factor = 4.0;     // 1 s, 4 s, 16 s, ...
    int max_in_flight = 2;

    /// Throws std::invalid_argument describing the first bad field.
    void validate() const;
};

/// Applies the PANO_RESTORER_ENDPOINT override, if present in the environment.
RestorerConfig with_env_overrides(RestorerConfig cfg);

/// Removes generation artifacts from a reprojected panorama. Implementations
/// must return an image with the request's dims and must not retain it.
class Restorer {
public:
    virtual ~Restorer() = default;
    virtual EquirectImage restore(const RestoreRequest& req) = 0;
};

class IdentityRestorer final : public Restorer {
public:
    EquirectImage restore(const RestoreRequest& req) override;
};

/// JSON-over-HTTP client:
///   POST <endpoint>/restore  {"image": <base64 PNG>, "prompt", "strength", "seed"}
///   200                      {"image": <base64 PNG>}
/// Connection failures and timeouts are retried with exponential backoff;
/// everything else fails immediately.
class HttpRestorer final : public Restorer {
public:
    explicit HttpRestorer(RestorerConfig cfg);

    EquirectImage restore(const RestoreRequest& req) override;

private:
    struct Target {
        std::string host;
        int port;
        std::string path;
    };

    RestorerConfig cfg_;
    Target target_;
    std::counting_semaphore<> in_flight_;
};

std::unique_ptr<Restorer> make_restorer(const RestorerConfig& cfg);

EquirectImage restore(const RestoreRequest& req, const RestorerConfig& cfg);

std::string base64_encode(std::span<const std::uint8_t> data);
/// Throws std::invalid_argument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace pano
