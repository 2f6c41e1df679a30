#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dhrs/codec.hpp"
#include "dhrs/denoise.hpp"
#include "dhrs/netsim.hpp"
#include "dhrs/raytrace.hpp"
#include "dhrs/scene.hpp"
#include "dhrs/trajectory.hpp"

namespace dhrs {

using json = nlohmann::ordered_json;

/// Invalid configuration; the message starts with the dotted path of the offending key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SceneConfig {
    std::string name = "box-room";
    std::string file;  // triangle-soup path; overrides name when set
    std::map<std::string, double> params;
    std::vector<MeshMotion> motions;
};

struct RenderConfig {
    int width = 320;
    int height = 180;
    double fov_deg = 60.0;
    ShadowMode shadow_mode = ShadowMode::soft;
    int ao_rays = 32;
    double ao_radius = 1.0;
    std::uint64_t seed = 1;
    double ambient = 0.15;
};

struct FilterConfig {
    bool enabled = true;
    FilterParams params;
};

struct TransportConfig {
    Codec codec = Codec::lz4;
    int payload_capacity = 1200;
    double expiry_ms = 500.0;
    std::uint32_t frame_size_bytes = 0;  // pad every frame payload up to this size; 0 = off
};

struct LinkSection {
    LinkConfig link;
    std::string trace_file;
};

enum class ClientMode { hybrid, remote };

struct ClientConfig {
    ClientMode mode = ClientMode::hybrid;
    bool prediction = true;
    double prediction_tau_z = 0.1;
    int depth_history = 64;  // retained client depth planes for prediction validation
};

struct OutputConfig {
    std::string dir = "out";
    bool csv = true;
    bool png = false;
    int png_every = 1;
};

struct NetConfig {
    std::string server_host = "127.0.0.1";
    int server_port = 47800;
    std::string client_host = "127.0.0.1";
    int client_port = 47801;
    double timeout_ms = 5000.0;
};

struct Config {
    SceneConfig scene;
    RenderConfig render;
    FilterConfig filter;
    TransportConfig transport;
    LinkSection uplink;
    LinkSection downlink;
    ClientConfig client;
    Trajectory trajectory = standard_trajectory();
    OutputConfig output;
    NetConfig net;
    int reference_spp = 64;

    double fov_rad() const { return render.fov_deg * kPi / 180.0; }
};

namespace detail {

inline json vec_json(const Vec3d& v) { return json::array({v.x, v.y, v.z}); }

inline const char* shadow_mode_name(ShadowMode m) { return m == ShadowMode::hard ? "hard" : "soft"; }

inline json link_json(const LinkSection& s) {
    return {{"delay_ms", s.link.one_way_delay_ms}, {"jitter_ms", s.link.jitter_ms}, {"loss", s.link.loss_prob},
            {"bandwidth_bps", s.link.bandwidth_bps}, {"seed", s.link.seed}, {"trace_file", s.trace_file}};
}

}  // namespace detail

inline json to_json(const Config& c) {
    json params = json::object();
    for (const auto& [k, v] : c.scene.params) params[k] = v;
    json motions = json::array();
    for (const auto& m : c.scene.motions)
        motions.push_back({{"mesh_id", m.mesh_id}, {"velocity", detail::vec_json(m.velocity_per_tick)}});
    json keys = json::array();
    for (const auto& k : c.trajectory.keyframes)
        keys.push_back({{"tick", k.tick}, {"eye", detail::vec_json(k.eye)}, {"target", detail::vec_json(k.target)}});
    const FilterParams& f = c.filter.params;
    return {
        {"scene", {{"name", c.scene.name}, {"file", c.scene.file}, {"params", params}, {"motions", motions}}},
        {"render",
         {{"width", c.render.width}, {"height", c.render.height}, {"fov_deg", c.render.fov_deg},
          {"shadow_mode", detail::shadow_mode_name(c.render.shadow_mode)}, {"ao_rays", c.render.ao_rays},
          {"ao_radius", c.render.ao_radius}, {"seed", c.render.seed}, {"ambient", c.render.ambient}}},
        {"filter",
         {{"enabled", c.filter.enabled}, {"alpha", f.alpha}, {"h_min", f.h_min}, {"iterations", f.iterations},
          {"sigma_z", f.sigma_z}, {"sigma_n", f.sigma_n}, {"tau_z", f.tau_z}, {"tau_n", f.tau_n},
          {"history_cap", f.history_cap}, {"filter_shadows", f.filter_shadows}}},
        {"transport",
         {{"codec", codec_name(c.transport.codec)}, {"payload_capacity", c.transport.payload_capacity},
          {"expiry_ms", c.transport.expiry_ms}, {"frame_size_bytes", c.transport.frame_size_bytes}}},
        {"uplink", detail::link_json(c.uplink)},
        {"downlink", detail::link_json(c.downlink)},
        {"client",
         {{"mode", c.client.mode == ClientMode::hybrid ? "hybrid" : "remote"}, {"prediction", c.client.prediction},
          {"prediction_tau_z", c.client.prediction_tau_z}, {"depth_history", c.client.depth_history}}},
        {"trajectory", {{"tick_rate", c.trajectory.tick_rate}, {"ticks", c.trajectory.ticks}, {"keyframes", keys}}},
        {"output", {{"dir", c.output.dir}, {"csv", c.output.csv}, {"png", c.output.png}, {"png_every", c.output.png_every}}},
        {"net",
         {{"server_host", c.net.server_host}, {"server_port", c.net.server_port}, {"client_host", c.net.client_host},
          {"client_port", c.net.client_port}, {"timeout_ms", c.net.timeout_ms}}},
        {"reference", {{"spp", c.reference_spp}}},
    };
}

namespace detail {

// Typed access with path-qualified error messages.
class Reader {
public:
    explicit Reader(const json& root) : root_(root) {}

    const json& at(const std::string& path) const {
        const json* node = &root_;
        std::size_t start = 0;
        while (true) {
            const auto dot = path.find('.', start);
            const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (!node->is_object() || !node->contains(key)) throw ConfigError(path + ": missing");
            node = &(*node)[key];
            if (dot == std::string::npos) return *node;
            start = dot + 1;
        }
    }

    double number(const std::string& path) const {
        const json& v = at(path);
        if (!v.is_number()) throw ConfigError(path + ": expected a number");
        return v.get<double>();
    }
    double number(const std::string& path, double lo, double hi, const char* range) const {
        const double v = number(path);
        if (!(v >= lo && v <= hi)) throw ConfigError(path + ": must be in " + range);
        return v;
    }
    long long integer(const std::string& path, long long lo, long long hi) const {
        const json& v = at(path);
        if (!v.is_number_integer() && !(v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()))
            throw ConfigError(path + ": expected an integer");
        const auto n = v.is_number_integer() ? v.get<long long>() : static_cast<long long>(v.get<double>());
        if (n < lo || n > hi)
            throw ConfigError(path + ": must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return n;
    }
    bool boolean(const std::string& path) const {
        const json& v = at(path);
        if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
        return v.get<bool>();
    }
    std::string string(const std::string& path) const {
        const json& v = at(path);
        if (!v.is_string()) throw ConfigError(path + ": expected a string");
        return v.get<std::string>();
    }
    Vec3d vec3(const std::string& path, const json& v) const {
        if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
            throw ConfigError(path + ": expected [x, y, z]");
        return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
    }

private:
    const json& root_;
};

// Rejects keys the defaults do not know about. Free-form objects are skipped.
inline void check_keys(const json& user, const json& defaults, const std::string& prefix) {
    if (!user.is_object()) return;
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!defaults.contains(it.key())) throw ConfigError(path + ": unknown key");
        if (path == "scene.params") continue;
        const json& d = defaults[it.key()];
        if (d.is_object()) {
            if (!it.value().is_object()) throw ConfigError(path + ": expected an object");
            check_keys(it.value(), d, path);
        }
    }
}

inline LinkSection read_link(const Reader& r, const std::string& p) {
    LinkSection s;
    s.link.one_way_delay_ms = r.number(p + ".delay_ms", 0, 1e9, "[0, 1e9]");
    s.link.jitter_ms = r.number(p + ".jitter_ms", 0, 1e9, "[0, 1e9]");
    s.link.loss_prob = r.number(p + ".loss", 0, 1, "[0, 1]");
    s.link.bandwidth_bps = r.number(p + ".bandwidth_bps", 0, 1e15, "[0, 1e15] (0 = unlimited)");
    s.link.seed = static_cast<std::uint64_t>(r.integer(p + ".seed", 0, (1LL << 53)));
    s.trace_file = r.string(p + ".trace_file");
    return s;
}

}  // namespace detail

/// Builds a Config from user JSON layered over the defaults. `base_dir` resolves
/// relative file references.
inline Config config_from_json(const json& user, const std::filesystem::path& base_dir = {}) {
    const json defaults = to_json(Config{});
    if (!user.is_object()) throw ConfigError("config: top level must be an object");
    detail::check_keys(user, defaults, "");
    json merged = defaults;
    merged.merge_patch(user);
    const detail::Reader r(merged);
    Config c;

    c.scene.name = r.string("scene.name");
    c.scene.file = r.string("scene.file");
    const json& params = r.at("scene.params");
    if (!params.is_object()) throw ConfigError("scene.params: expected an object");
    for (auto it = params.begin(); it != params.end(); ++it) {
        if (!it.value().is_number()) throw ConfigError("scene.params." + it.key() + ": expected a number");
        c.scene.params[it.key()] = it.value().get<double>();
    }
    const json& motions = r.at("scene.motions");
    if (!motions.is_array()) throw ConfigError("scene.motions: expected an array");
    for (std::size_t i = 0; i < motions.size(); ++i) {
        const std::string p = "scene.motions[" + std::to_string(i) + "]";
        const json& m = motions[i];
        if (!m.is_object() || !m.contains("mesh_id") || !m.contains("velocity") || !m["mesh_id"].is_number_integer())
            throw ConfigError(p + ": expected {mesh_id, velocity}");
        c.scene.motions.push_back({m["mesh_id"].get<int>(), r.vec3(p + ".velocity", m["velocity"])});
    }
    if (!c.scene.file.empty() && !base_dir.empty() && std::filesystem::path(c.scene.file).is_relative())
        c.scene.file = (base_dir / c.scene.file).string();
    if (!c.scene.file.empty() && !std::filesystem::exists(c.scene.file))
        throw ConfigError("scene.file: no such file: " + c.scene.file);
    if (c.scene.file.empty() && c.scene.name != "box-room" && c.scene.name != "columns-hall" &&
        c.scene.name != "corner-wall")
        throw ConfigError("scene.name: unknown scene '" + c.scene.name + "'");

    c.render.width = static_cast<int>(r.integer("render.width", 16, 4096));
    c.render.height = static_cast<int>(r.integer("render.height", 16, 4096));
    c.render.fov_deg = r.number("render.fov_deg", 1, 179, "[1, 179]");
    const std::string mode = r.string("render.shadow_mode");
    if (mode != "hard" && mode != "soft") throw ConfigError("render.shadow_mode: expected \"hard\" or \"soft\"");
    c.render.shadow_mode = mode == "hard" ? ShadowMode::hard : ShadowMode::soft;
    c.render.ao_rays = static_cast<int>(r.integer("render.ao_rays", 1, 255));
    c.render.ao_radius = r.number("render.ao_radius", 1e-9, 1e9, "(0, 1e9]");
    c.render.seed = static_cast<std::uint64_t>(r.integer("render.seed", 0, (1LL << 53)));
    c.render.ambient = r.number("render.ambient", 0, 10, "[0, 10]");

    c.filter.enabled = r.boolean("filter.enabled");
    FilterParams& f = c.filter.params;
    f.alpha = r.number("filter.alpha", 1e-9, 1, "(0, 1]");
    f.h_min = static_cast<int>(r.integer("filter.h_min", 1, 65535));
    f.iterations = static_cast<int>(r.integer("filter.iterations", 1, 12));
    f.sigma_z = r.number("filter.sigma_z", 1e-9, 1e9, "(0, 1e9]");
    f.sigma_n = r.number("filter.sigma_n", 1e-9, 1e9, "(0, 1e9]");
    f.tau_z = r.number("filter.tau_z", 1e-9, 1e9, "(0, 1e9]");
    f.tau_n = r.number("filter.tau_n", -1, 1, "[-1, 1]");
    f.history_cap = static_cast<int>(r.integer("filter.history_cap", 1, 65535));
    f.filter_shadows = r.boolean("filter.filter_shadows");

    try {
        c.transport.codec = parse_codec(r.string("transport.codec"));
    } catch (const std::invalid_argument&) {
        throw ConfigError("transport.codec: expected \"lz4\" or \"identity\"");
    }
    c.transport.payload_capacity = static_cast<int>(r.integer("transport.payload_capacity", 64, 65000));
    c.transport.expiry_ms = r.number("transport.expiry_ms", 0, 1e9, "[0, 1e9]");
    c.transport.frame_size_bytes = static_cast<std::uint32_t>(r.integer("transport.frame_size_bytes", 0, 1LL << 30));

    c.uplink = detail::read_link(r, "uplink");
    c.downlink = detail::read_link(r, "downlink");
    for (LinkSection* s : {&c.uplink, &c.downlink}) {
        const std::string which = s == &c.uplink ? "uplink" : "downlink";
        if (s->trace_file.empty()) continue;
        if (!base_dir.empty() && std::filesystem::path(s->trace_file).is_relative())
            s->trace_file = (base_dir / s->trace_file).string();
        if (!std::filesystem::exists(s->trace_file))
            throw ConfigError(which + ".trace_file: no such file: " + s->trace_file);
    }

    const std::string cm = r.string("client.mode");
    if (cm != "hybrid" && cm != "remote") throw ConfigError("client.mode: expected \"hybrid\" or \"remote\"");
    c.client.mode = cm == "hybrid" ? ClientMode::hybrid : ClientMode::remote;
    c.client.prediction = r.boolean("client.prediction");
    c.client.prediction_tau_z = r.number("client.prediction_tau_z", 1e-9, 1e9, "(0, 1e9]");
    c.client.depth_history = static_cast<int>(r.integer("client.depth_history", 1, 4096));

    c.trajectory.tick_rate = r.number("trajectory.tick_rate", 1e-3, 1e4, "[0.001, 10000]");
    c.trajectory.ticks = static_cast<std::uint32_t>(r.integer("trajectory.ticks", 1, 1000000));
    const json& keys = r.at("trajectory.keyframes");
    if (!keys.is_array() || keys.empty()) throw ConfigError("trajectory.keyframes: expected a nonempty array");
    c.trajectory.keyframes.clear();
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const std::string p = "trajectory.keyframes[" + std::to_string(i) + "]";
        const json& k = keys[i];
        if (!k.is_object() || !k.contains("tick") || !k["tick"].is_number_integer() || k["tick"].get<long long>() < 0 ||
            !k.contains("eye") || !k.contains("target"))
            throw ConfigError(p + ": expected {tick, eye, target}");
        c.trajectory.keyframes.push_back({k["tick"].get<std::uint32_t>(), r.vec3(p + ".eye", k["eye"]),
                                          r.vec3(p + ".target", k["target"])});
    }
    try {
        c.trajectory.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("trajectory: ") + e.what());
    }

    c.output.dir = r.string("output.dir");
    c.output.csv = r.boolean("output.csv");
    c.output.png = r.boolean("output.png");
    c.output.png_every = static_cast<int>(r.integer("output.png_every", 1, 1000000));

    c.net.server_host = r.string("net.server_host");
    c.net.server_port = static_cast<int>(r.integer("net.server_port", 0, 65535));
    c.net.client_host = r.string("net.client_host");
    c.net.client_port = static_cast<int>(r.integer("net.client_port", 0, 65535));
    c.net.timeout_ms = r.number("net.timeout_ms", 1, 1e9, "[1, 1e9]");

    c.reference_spp = static_cast<int>(r.integer("reference.spp", 1, 1 << 20));
    return c;
}

/// Parses a config file. Relative scene and trace paths inside it are
/// rewritten against the file's directory.
inline json read_config_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    const auto dir = std::filesystem::path(path).parent_path();
    auto fix = [&](const char* section, const char* key) {
        if (!j.contains(section) || !j[section].is_object() || !j[section].contains(key)) return;
        json& v = j[section][key];
        if (v.is_string() && !v.get<std::string>().empty() && std::filesystem::path(v.get<std::string>()).is_relative())
            v = (dir / v.get<std::string>()).lexically_normal().string();
    };
    fix("scene", "file");
    fix("uplink", "trace_file");
    fix("downlink", "trace_file");
    return j;
}

inline Config load_config(const std::string& path) { return config_from_json(read_config_json(path)); }

/// Applies `a.b.c=value` to a JSON tree. The value is parsed as JSON when
/// possible and taken as a plain string otherwise.
inline void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set " + assignment + ": expected path=value");
    const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("--set " + assignment + ": empty path component");
        if (!node->is_object()) *node = json::object();
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

/// Loads the scene a config refers to, with rigid motions attached.
inline Scene load_scene(const SceneConfig& sc) {
    Scene s;
    try {
        if (!sc.file.empty()) {
            s = load_triangle_soup(sc.file);
            s.name = sc.file;
        } else {
            s = generate_scene(sc.name, sc.params);
        }
    } catch (const std::exception& e) {
        throw ConfigError(std::string(sc.file.empty() ? "scene.name: " : "scene.file: ") + e.what());
    }
    s.motions = sc.motions;
    return s;
}

}  // namespace dhrs
