#include "panoworld/world.hpp"

#include <cstdlib>
#include <ctime>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <spdlog/spdlog.h>

namespace pano {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

extern const char* const kFallbackViewerHtml;

namespace {

const std::regex kIdPattern(R"([A-Za-z0-9_-][A-Za-z0-9._-]*)");

bool valid_id(const std::string& id)
{
    return std::regex_match(id, kIdPattern) && id != "." && id != "..";
}

std::string resolve_created_at(const WorldConfig& cfg)
{
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
        char* end = nullptr;
        const long long secs = std::strtoll(epoch, &end, 10);
        if (end != epoch && *end == '\0') {
            const std::time_t t = static_cast<std::time_t>(secs);
            std::tm tm{};
            gmtime_r(&t, &tm);
            char buf[32];
            std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
            return buf;
        }
    }
    return cfg.created_at.value_or("1970-01-01T00:00:00Z");
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback)
{
    if (auto it = obj.find(key); it != obj.end() && !it->is_null()) {
        return it->get<T>();
    }
    return fallback;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    }
}

}  // namespace

std::vector<Move> expand_grid(const GridSpec& grid)
{
    if (grid.rows < 1 || grid.cols < 1) {
        throw ConfigError(fmt::format("grid {}x{} needs at least one row and column", grid.rows, grid.cols));
    }
    std::vector<Move> moves;
    std::string prev = grid_cell_id(0, 0);
    for (int r = 0; r < grid.rows; ++r) {
        const bool eastward = r % 2 == 0;
        for (int i = 0; i < grid.cols; ++i) {
            const int c = eastward ? i : grid.cols - 1 - i;
            if (r == 0 && i == 0) {
                continue;
            }
            const double direction = i == 0 ? 90.0 : (eastward ? 0.0 : 180.0);
            std::string id = grid_cell_id(r, c);
            moves.push_back({id, prev, grid.step, direction});
            prev = std::move(id);
        }
    }
    return moves;
}

WorldConfig parse_world_config(const json& doc, const fs::path& base_dir)
{
    try {
        WorldConfig cfg;
        const json& initial = doc.at("initial");
        cfg.initial_image = base_dir / fs::path(initial.at("image").get<std::string>());
        cfg.prompt = initial.at("prompt").get<std::string>();
        cfg.initial_id = get_or<std::string>(initial, "id", "1");

        const bool has_moves = doc.contains("moves");
        const bool has_grid = doc.contains("grid");
        if (has_moves && has_grid) {
            throw ConfigError("config may give either \"moves\" or \"grid\", not both");
        }
        if (has_grid) {
            const json& g = doc.at("grid");
            cfg.moves = expand_grid({g.at("rows").get<int>(), g.at("cols").get<int>(), g.at("step").get<double>()});
            cfg.initial_id = grid_cell_id(0, 0);
        } else if (has_moves) {
            for (const json& m : doc.at("moves")) {
                Move move;
                move.id = m.at("id").get<std::string>();
                if (m.contains("from") && !m.at("from").is_null()) {
                    move.from = m.at("from").get<std::string>();
                }
                move.step = m.at("step").get<double>();
                move.direction = m.at("direction").get<double>();
                cfg.moves.push_back(std::move(move));
            }
        }

        if (doc.contains("restorer")) {
            const json& r = doc.at("restorer");
            const auto kind = parse_restorer_kind(get_or<std::string>(r, "kind", "identity"));
            if (!kind) {
                throw ConfigError("restorer.kind must be \"identity\" or \"http\"");
            }
            cfg.restorer.kind = *kind;
            cfg.restorer.endpoint = get_or<std::string>(r, "endpoint", "");
            cfg.restorer.timeout_s = get_or<double>(r, "timeout", cfg.restorer.timeout_s);
            cfg.restorer.retries = get_or<int>(r, "retries", cfg.restorer.retries);
            cfg.restorer.backoff_initial_s = get_or<double>(r, "backoff_initial", cfg.restorer.backoff_initial_s);
            cfg.restorer.backoff_factor = get_or<double>(r, "backoff_factor", cfg.restorer.backoff_factor);
            cfg.restorer.max_in_flight = get_or<int>(r, "max_in_flight", cfg.restorer.max_in_flight);
            cfg.strength = get_or<double>(r, "strength", cfg.strength);
            if (r.contains("seed") && !r.at("seed").is_null()) {
                cfg.seed = r.at("seed").get<std::int64_t>();
            }
        }

        if (const auto m = parse_remap_method(get_or<std::string>(doc, "method", "oracle3d"))) {
            cfg.method = *m;
        } else {
            throw ConfigError("method must be \"oracle3d\" or \"paper-separable\"");
        }
        if (const auto i = parse_interpolation(get_or<std::string>(doc, "interpolation", "bilinear"))) {
            cfg.interpolation = *i;
        } else {
            throw ConfigError("interpolation must be \"bilinear\" or \"nearest\"");
        }
        if (doc.contains("output")) {
            cfg.output_dir = base_dir / fs::path(doc.at("output").get<std::string>());
        }
        if (doc.contains("created_at")) {
            cfg.created_at = doc.at("created_at").get<std::string>();
        }
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("malformed world config: {}", e.what()));
    }
}

WorldConfig load_world_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("cannot open config {}", path.string()));
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("{} is not valid JSON: {}", path.string(), e.what()));
    }
    return parse_world_config(doc, path.parent_path());
}

void validate_config(const WorldConfig& cfg)
{
    if (cfg.prompt.empty() && cfg.restorer.kind == RestorerKind::http) {
        throw ConfigError("a non-empty prompt is required for an http restorer");
    }
    if (cfg.output_dir.empty()) {
        throw ConfigError("no output directory configured");
    }
    if (!(cfg.strength >= 0.0 && cfg.strength <= 1.0)) {
        throw ConfigError(fmt::format("strength {} outside [0, 1]", cfg.strength));
    }
    try {
        cfg.restorer.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    std::set<std::string> known;
    if (!valid_id(cfg.initial_id)) {
        throw ConfigError(fmt::format("scene id '{}' is not usable as a file name", cfg.initial_id));
    }
    known.insert(cfg.initial_id);
    for (const Move& m : cfg.moves) {
        if (!valid_id(m.id)) {
            throw ConfigError(fmt::format("scene id '{}' is not usable as a file name", m.id));
        }
        if (!known.insert(m.id).second) {
            throw ConfigError(fmt::format("duplicate scene id '{}'", m.id));
        }
        if (m.from && (!known.contains(*m.from) || *m.from == m.id)) {
            throw ConfigError(fmt::format("move '{}' starts from unknown or later scene '{}'", m.id, *m.from));
        }
        if (!(m.step > 0.0 && m.step < 1.0)) {
            throw ConfigError(fmt::format("move '{}' has step {}; must lie in (0, 1)", m.id, m.step));
        }
        if (!std::isfinite(m.direction)) {
            throw ConfigError(fmt::format("move '{}' has a non-finite direction", m.id));
        }
    }
}

ordered_json to_json(const WorldGraph& graph)
{
    ordered_json doc;
    doc["scenes"] = ordered_json::array();
    for (const SceneRecord& s : graph.scenes) {
        doc["scenes"].push_back({{"id", s.id}, {"image", s.image}, {"prompt", s.prompt}});
    }
    doc["edges"] = ordered_json::array();
    for (const EdgeRecord& e : graph.edges) {
        doc["edges"].push_back({{"from", e.from},
                                {"to", e.to},
                                {"displacement",
                                 {{"step", e.displacement.step()}, {"direction", e.displacement.direction_deg()}}}});
    }
    const WorldMetadata& m = graph.metadata;
    ordered_json meta = {
        {"created_at", m.created_at},
        {"tool_version", m.tool_version},
        {"remap_method", std::string(to_string(m.remap_method))},
        {"interpolation", std::string(to_string(m.interpolation))},
        {"status", m.partial ? "partial" : "complete"},
    };
    if (m.failure) {
        meta["failure"] = {{"scene", m.failure->scene_id}, {"kind", m.failure->kind}, {"message", m.failure->message}};
    }
    doc["metadata"] = std::move(meta);
    return doc;
}

WorldGraph world_from_json(const json& doc)
{
    try {
        WorldGraph g;
        for (const json& s : doc.at("scenes")) {
            g.scenes.push_back(
                {s.at("id").get<std::string>(), s.at("image").get<std::string>(), s.at("prompt").get<std::string>()});
        }
        for (const json& e : doc.at("edges")) {
            const json& d = e.at("displacement");
            g.edges.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>(),
                               Displacement(d.at("step").get<double>(), d.at("direction").get<double>())});
        }
        const json& m = doc.at("metadata");
        g.metadata.created_at = m.at("created_at").get<std::string>();
        g.metadata.tool_version = m.at("tool_version").get<std::string>();
        const auto method = parse_remap_method(m.at("remap_method").get<std::string>());
        if (!method) {
            throw ManifestError("unknown metadata.remap_method");
        }
        g.metadata.remap_method = *method;
        g.metadata.interpolation =
            parse_interpolation(get_or<std::string>(m, "interpolation", "bilinear")).value_or(Interpolation::bilinear);
        const auto status = get_or<std::string>(m, "status", "complete");
        if (status != "complete" && status != "partial") {
            throw ManifestError(fmt::format("unknown metadata.status '{}'", status));
        }
        g.metadata.partial = status == "partial";
        if (m.contains("failure")) {
            const json& f = m.at("failure");
            g.metadata.failure = WorldFailure{f.at("scene").get<std::string>(), f.at("kind").get<std::string>(),
                                              get_or<std::string>(f, "message", "")};
        }
        return g;
    } catch (const json::exception& e) {
        throw ManifestError(fmt::format("manifest schema error: {}", e.what()));
    } catch (const InvalidDisplacement& e) {
        throw ManifestError(fmt::format("manifest edge has an invalid displacement: {}", e.what()));
    }
}

void write_manifest(const WorldGraph& graph, const fs::path& path)
{
    write_text(path, to_json(graph).dump(2) + "\n");
}

WorldGraph read_manifest(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ManifestError(fmt::format("cannot open manifest {}", path.string()));
    }
    try {
        return world_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ManifestError(fmt::format("{} is not valid JSON: {}", path.string(), e.what()));
    }
}

WorldGraph build_world(const WorldConfig& cfg, const BuildOptions& opts)
{
    validate_config(cfg);

    std::unique_ptr<Restorer> owned;
    Restorer* restorer = opts.restorer;
    if (restorer == nullptr) {
        owned = make_restorer(cfg.restorer);
        restorer = owned.get();
    }

    EquirectImage initial = load_image(cfg.initial_image);

    const fs::path root = cfg.output_dir;
    fs::create_directories(root / "scenes");

    WorldGraph graph;
    graph.metadata.created_at = resolve_created_at(cfg);
    graph.metadata.remap_method = cfg.method;
    graph.metadata.interpolation = cfg.interpolation;

    save_png(initial, root / scene_image_name(cfg.initial_id));
    graph.scenes.push_back({cfg.initial_id, scene_image_name(cfg.initial_id), cfg.prompt});

    std::map<std::string, EquirectImage> images;
    images.emplace(cfg.initial_id, std::move(initial));
    RemapCache cache(opts.parallelism);
    std::string previous = cfg.initial_id;

    for (const Move& move : cfg.moves) {
        const std::string& parent = move.from.value_or(previous);
        const Displacement disp(move.step, move.direction);
        spdlog::info("scene {}: moving from {} by step {} toward {} deg", move.id, parent, disp.step(),
                     disp.direction_deg());

        EquirectImage distorted = cache.reproject(images.at(parent), disp, cfg.method, cfg.interpolation);
        save_png(distorted, root / distorted_image_name(move.id));

        try {
            EquirectImage restored = restorer->restore({std::move(distorted), cfg.prompt, cfg.strength, cfg.seed});
            if (restored.dims() != images.at(parent).dims()) {
                throw RestoreError(RestoreErrorKind::dims_mismatch,
                                   fmt::format("restorer returned {}x{}", restored.width(), restored.height()));
            }
            save_png(restored, root / scene_image_name(move.id));
            images.insert_or_assign(move.id, std::move(restored));
        } catch (const RestoreError& e) {
            graph.metadata.partial = true;
            graph.metadata.failure = WorldFailure{move.id, std::string(to_string(e.kind())), e.what()};
            write_manifest(graph, root / kManifestName);
            throw WorldBuildError(fmt::format("scene {}: {} ({})", move.id, e.what(), to_string(e.kind())), graph);
        }

        graph.scenes.push_back({move.id, scene_image_name(move.id), cfg.prompt});
        graph.edges.push_back({parent, move.id, disp});
        previous = move.id;
    }

    write_manifest(graph, root / kManifestName);
    return graph;
}

std::vector<Violation> validate_manifest(const fs::path& path)
{
    const WorldGraph g = read_manifest(path);
    const fs::path root = path.parent_path();
    std::vector<Violation> out;

    if (g.scenes.empty()) {
        out.push_back({"empty-world", "manifest lists no scenes"});
        return out;
    }

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < g.scenes.size(); ++i) {
        if (!index.emplace(g.scenes[i].id, i).second) {
            out.push_back({"duplicate-id", fmt::format("scene id '{}' appears more than once", g.scenes[i].id)});
        }
    }

    std::map<std::string, std::vector<std::string>> adjacency;
    for (const EdgeRecord& e : g.edges) {
        const bool from_ok = index.contains(e.from);
        const bool to_ok = index.contains(e.to);
        if (!from_ok || !to_ok) {
            out.push_back({"dangling-edge", fmt::format("edge {} -> {} references an unknown scene", e.from, e.to)});
            continue;
        }
        adjacency[e.from].push_back(e.to);
    }

    std::set<std::string> reached{g.scenes.front().id};
    std::vector<std::string> frontier{g.scenes.front().id};
    while (!frontier.empty()) {
        const std::string id = frontier.back();
        frontier.pop_back();
        for (const std::string& next : adjacency[id]) {
            if (reached.insert(next).second) {
                frontier.push_back(next);
            }
        }
    }
    for (const SceneRecord& s : g.scenes) {
        if (!reached.contains(s.id)) {
            out.push_back({"unreachable-scene", fmt::format("scene '{}' is not reachable from '{}'", s.id, g.scenes.front().id)});
        }
    }

    std::optional<ImageDims> first_dims;
    for (const SceneRecord& s : g.scenes) {
        const fs::path image = root / s.image;
        if (!fs::is_regular_file(image)) {
            out.push_back({"missing-file", fmt::format("scene '{}' image {} does not exist", s.id, s.image)});
            continue;
        }
        try {
            const EquirectImage img = load_image(image);
            if (!first_dims) {
                first_dims = img.dims();
            } else if (img.dims() != *first_dims) {
                out.push_back({"dims-inconsistent", fmt::format("scene '{}' is {}x{}, first scene is {}x{}", s.id,
                                                                img.width(), img.height(), first_dims->width(),
                                                                first_dims->height())});
            }
        } catch (const std::exception& e) {
            out.push_back({"bad-image", fmt::format("scene '{}': {}", s.id, e.what())});
        }
    }
    return out;
}

void export_viewer(const WorldGraph& graph, const fs::path& source_root, const fs::path& out_dir,
                   const std::optional<fs::path>& viewer_assets)
{
    std::vector<std::string> failures;
    std::error_code ec;
    fs::create_directories(out_dir / "scenes", ec);
    if (ec) {
        throw ExportError(fmt::format("cannot create {}: {}", (out_dir / "scenes").string(), ec.message()), {});
    }

    const bool in_place = fs::equivalent(source_root, out_dir, ec);
    auto copy_one = [&](const std::string& rel, bool required) {
        const fs::path src = source_root / rel;
        if (!fs::exists(src)) {
            if (required) {
                failures.push_back(fmt::format("{}: missing", src.string()));
            }
            return;
        }
        if (in_place) {
            return;
        }
        std::error_code copy_ec;
        fs::copy_file(src, out_dir / rel, fs::copy_options::overwrite_existing, copy_ec);
        if (copy_ec) {
            failures.push_back(fmt::format("{}: {}", src.string(), copy_ec.message()));
        }
    };
    for (const SceneRecord& s : graph.scenes) {
        copy_one(s.image, true);
        copy_one(distorted_image_name(s.id), false);
    }

    try {
        write_manifest(graph, out_dir / kManifestName);
    } catch (const std::exception& e) {
        failures.push_back(e.what());
    }

    if (viewer_assets) {
        std::error_code copy_ec;
        fs::copy(*viewer_assets, out_dir,
                 fs::copy_options::recursive | fs::copy_options::overwrite_existing, copy_ec);
        if (copy_ec) {
            failures.push_back(fmt::format("viewer assets {}: {}", viewer_assets->string(), copy_ec.message()));
        }
    } else {
        try {
            write_text(out_dir / "index.html", kFallbackViewerHtml);
        } catch (const std::exception& e) {
            failures.push_back(e.what());
        }
    }

    if (!failures.empty()) {
        throw ExportError(fmt::format("export to {} failed for {} file(s)", out_dir.string(), failures.size()), std::move(failures));
    }
}

}  // namespace pano
