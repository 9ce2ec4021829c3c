#pragma once

#include "panoworld/reproject.hpp"
#include "panoworld/restorer.hpp"

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pano {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kManifestName = "world.json";

struct Move {
    std::string id;
    std::optional<std::string> from;  // defaults to the previously created scene
    double step = 0.0;
    double direction = 0.0;  // degrees
};

struct GridSpec {
    int rows = 1;
    int cols = 1;
    double step = 0.0;
};

struct WorldConfig {
    std::filesystem::path initial_image;
    std::string initial_id = "1";
    std::string prompt;
    std::vector<Move> moves;
    RestorerConfig restorer;
    double strength = kDefaultStrength;
    std::optional<std::int64_t> seed;
    RemapMethod method = RemapMethod::oracle3d;
    Interpolation interpolation = Interpolation::bilinear;
    std::filesystem::path output_dir;
    std::optional<std::string> created_at;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Serpentine path over a rows x cols grid starting at r0c0: even rows walk
/// direction 0, odd rows direction 180, row changes direction 90.
std::vector<Move> expand_grid(const GridSpec& grid);
inline std::string grid_cell_id(int row, int col) { return "r" + std::to_string(row) + "c" + std::to_string(col); }

/// Parses the JSON config dialect. Relative paths resolve against base_dir.
WorldConfig parse_world_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
WorldConfig load_world_config(const std::filesystem::path& path);

/// Checks everything that can be checked without touching images.
void validate_config(const WorldConfig& cfg);

struct SceneRecord {
    std::string id;
    std::string image;  // relative to the manifest directory
    std::string prompt;
};

struct EdgeRecord {
    std::string from;
    std::string to;
    Displacement displacement;
};

struct WorldFailure {
    std::string scene_id;
    std::string kind;
    std::string message;
};

struct WorldMetadata {
    std::string created_at;
    std::string tool_version = kToolVersion;
    RemapMethod remap_method = RemapMethod::oracle3d;
    Interpolation interpolation = Interpolation::bilinear;
    bool partial = false;
    std::optional<WorldFailure> failure;
};

struct WorldGraph {
    std::vector<SceneRecord> scenes;
    std::vector<EdgeRecord> edges;
    WorldMetadata metadata;
};

nlohmann::ordered_json to_json(const WorldGraph& graph);
/// Throws ManifestError on schema violations.
WorldGraph world_from_json(const nlohmann::json& doc);

class ManifestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void write_manifest(const WorldGraph& graph, const std::filesystem::path& path);
WorldGraph read_manifest(const std::filesystem::path& path);

inline std::string scene_image_name(const std::string& id) { return "scenes/" + id + ".png"; }
inline std::string distorted_image_name(const std::string& id) { return "scenes/" + id + ".distorted.png"; }

/// A restorer failure partway through; the prefix is on disk and the
/// manifest written next to it is marked partial.
class WorldBuildError : public std::runtime_error {
public:
    WorldBuildError(const std::string& what, WorldGraph partial) : std::runtime_error(what), partial_(std::move(partial)) {}

    const WorldGraph& partial() const noexcept { return partial_; }

private:
    WorldGraph partial_;
};

struct BuildOptions {
    Parallelism parallelism;
    /// Used instead of cfg.restorer when set.
    Restorer* restorer = nullptr;
};

/// Runs move -> distort -> restore for every move, persisting scenes and
/// the world.json manifest under cfg.output_dir.
WorldGraph build_world(const WorldConfig& cfg, const BuildOptions& opts = {});

struct Violation {
    std::string kind;  // e.g. "missing-file", "dangling-edge"
    std::string detail;
};

/// Empty result means the manifest and the files it names are consistent.
std::vector<Violation> validate_manifest(const std::filesystem::path& path);

class ExportError : public std::runtime_error {
public:
    ExportError(const std::string& what, std::vector<std::string> failures)
        : std::runtime_error(what), failures_(std::move(failures))
    {
    }

    const std::vector<std::string>& failures() const noexcept { return failures_; }

private:
    std::vector<std::string> failures_;
};

/// Writes a statically servable bundle: scenes/, world.json and the viewer
/// assets. Built viewer assets are copied from viewer_assets when given;
/// otherwise a minimal index.html is written.
void export_viewer(const WorldGraph& graph, const std::filesystem::path& source_root,
                   const std::filesystem::path& out_dir,
                   const std::optional<std::filesystem::path>& viewer_assets = std::nullopt);

}  // namespace pano
