#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "dhrs/bytes.hpp"
#include "dhrs/codec.hpp"
#include "dhrs/image.hpp"
#include "dhrs/raytrace.hpp"

namespace dhrs {

enum class Pass : std::uint8_t { visibility = 0, ao = 1, color = 2 };

inline const char* pass_name(Pass p) {
    switch (p) {
        case Pass::visibility: return "visibility";
        case Pass::ao: return "ao";
        case Pass::color: return "color";
    }
    return "?";
}

inline std::size_t bytes_per_pixel(Pass p) { return p == Pass::color ? 3 : 1; }

inline constexpr std::size_t kFrameHeaderSize = 96;
inline constexpr std::size_t kDatagramPrefixSize = 15;
inline constexpr std::size_t kDefaultPayloadCapacity = 1200;

/// Per-frame metadata. Travels in the first datagram of each frame.
///   pose 12 x f32 (position, right, up, forward) | width u16 | height u16 |
///   params 3 x f32 | mode u8 | raw_size u32 | compressed_size u32 | codec u8 |
///   pad_bytes u32 | zeros up to 96 bytes
/// params: visibility {light_count, 0, fov}, ao {N, r, fov}, color {0, 0, fov}.
struct FrameHeader {
    std::uint32_t frame_id = 0;
    Pass pass = Pass::visibility;
    Camera camera;  // width/height mirror the fields below
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    float params[3] = {0, 0, 0};
    std::uint8_t mode = 0;
    std::uint32_t raw_size = 0;
    std::uint32_t compressed_size = 0;
    Codec codec = Codec::lz4;
    std::uint32_t pad_bytes = 0;  // filler appended after the compressed bytes (frame-size sweeps)

    std::uint32_t payload_size() const { return compressed_size + pad_bytes; }
    CameraPose pose() const { return {frame_id, camera}; }
    friend bool operator==(const FrameHeader& a, const FrameHeader& b) {
        return a.frame_id == b.frame_id && a.pass == b.pass && a.camera == b.camera && a.width == b.width &&
               a.height == b.height && a.params[0] == b.params[0] && a.params[1] == b.params[1] &&
               a.params[2] == b.params[2] && a.mode == b.mode && a.raw_size == b.raw_size &&
               a.compressed_size == b.compressed_size && a.codec == b.codec && a.pad_bytes == b.pad_bytes;
    }
};

inline void write_pose(ByteWriter& w, const Camera& c) {
    for (const Vec3f& v : {c.position, c.right, c.up, c.forward}) {
        w.f32(v.x);
        w.f32(v.y);
        w.f32(v.z);
    }
}

inline void read_pose(ByteReader& r, Camera& c) {
    for (Vec3f* v : {&c.position, &c.right, &c.up, &c.forward}) {
        v->x = r.f32();
        v->y = r.f32();
        v->z = r.f32();
    }
}

inline void write_frame_header(ByteWriter& w, const FrameHeader& h) {
    const std::size_t start = w.size();
    write_pose(w, h.camera);
    w.u16(h.width);
    w.u16(h.height);
    for (float p : h.params) w.f32(p);
    w.u8(h.mode);
    w.u32(h.raw_size);
    w.u32(h.compressed_size);
    w.u8(static_cast<std::uint8_t>(h.codec));
    w.u32(h.pad_bytes);
    w.zeros(kFrameHeaderSize - (w.size() - start));
}

/// frame_id and pass come from the enclosing datagram.
inline FrameHeader read_frame_header(ByteReader& r, std::uint32_t frame_id, Pass pass) {
    FrameHeader h;
    h.frame_id = frame_id;
    h.pass = pass;
    const std::size_t start = r.position();
    read_pose(r, h.camera);
    h.width = r.u16();
    h.height = r.u16();
    for (float& p : h.params) p = r.f32();
    h.mode = r.u8();
    h.raw_size = r.u32();
    h.compressed_size = r.u32();
    const std::uint8_t codec = r.u8();
    if (codec > 1) throw DecodeError("unknown codec id");
    h.codec = static_cast<Codec>(codec);
    h.pad_bytes = r.u32();
    r.skip(kFrameHeaderSize - (r.position() - start));
    h.camera.width = h.width;
    h.camera.height = h.height;
    h.camera.vertical_fov = h.params[2];
    if (static_cast<std::size_t>(h.width) * h.height * bytes_per_pixel(pass) != h.raw_size)
        throw DecodeError("raw_size does not match dimensions");
    return h;
}

struct EncodedFrame {
    FrameHeader header;
    std::vector<std::uint8_t> payload;  // compressed bytes followed by pad_bytes zeros
};

namespace detail {

inline EncodedFrame encode_plane(FrameHeader h, std::span<const std::uint8_t> raw, Codec codec,
                                 std::uint32_t pad_bytes) {
    h.width = static_cast<std::uint16_t>(h.camera.width);
    h.height = static_cast<std::uint16_t>(h.camera.height);
    h.params[2] = h.camera.vertical_fov;
    h.raw_size = static_cast<std::uint32_t>(raw.size());
    h.codec = codec;
    EncodedFrame f{h, compress(codec, raw)};
    f.header.compressed_size = static_cast<std::uint32_t>(f.payload.size());
    f.header.pad_bytes = pad_bytes;
    f.payload.resize(f.payload.size() + pad_bytes, 0);
    return f;
}

inline std::vector<std::uint8_t> decode_plane(const EncodedFrame& f, Pass expected) {
    const FrameHeader& h = f.header;
    if (h.pass != expected) throw DecodeError("unexpected pass id");
    if (f.payload.size() != h.payload_size()) throw DecodeError("payload length does not match header");
    if (static_cast<std::size_t>(h.width) * h.height * bytes_per_pixel(h.pass) != h.raw_size)
        throw DecodeError("raw_size does not match dimensions");
    return decompress(h.codec, std::span(f.payload).first(h.compressed_size), h.raw_size);
}

inline FrameHeader base_header(Pass pass, const CameraPose& pose) {
    FrameHeader h;
    h.frame_id = pose.frame_id;
    h.pass = pass;
    h.camera = pose.camera;
    return h;
}

}  // namespace detail

inline EncodedFrame encode_frame(const VisibilityBuffer& v, Codec codec = Codec::lz4, std::uint32_t pad = 0) {
    FrameHeader h = detail::base_header(Pass::visibility, v.pose);
    h.params[0] = static_cast<float>(v.light_count);
    h.mode = static_cast<std::uint8_t>(v.mode);
    return detail::encode_plane(h, v.bits, codec, pad);
}

inline EncodedFrame encode_frame(const AoBuffer& a, Codec codec = Codec::lz4, std::uint32_t pad = 0) {
    FrameHeader h = detail::base_header(Pass::ao, a.pose);
    h.params[0] = static_cast<float>(a.rays);
    h.params[1] = a.radius;
    return detail::encode_plane(h, a.counts, codec, pad);
}

inline EncodedFrame encode_frame(const Image& img, Codec codec = Codec::lz4, std::uint32_t pad = 0) {
    return detail::encode_plane(detail::base_header(Pass::color, img.pose), img.rgb, codec, pad);
}

inline VisibilityBuffer decode_visibility(const EncodedFrame& f) {
    VisibilityBuffer v;
    v.bits = detail::decode_plane(f, Pass::visibility);
    const FrameHeader& h = f.header;
    const float lc = h.params[0];
    if (!(lc >= 0.0f && lc <= kMaxLights) || lc != std::floor(lc)) throw DecodeError("bad light count");
    if (h.mode > 1) throw DecodeError("bad shadow mode");
    v.width = h.width;
    v.height = h.height;
    v.pose = h.pose();
    v.light_count = static_cast<int>(lc);
    v.mode = static_cast<ShadowMode>(h.mode);
    const auto mask = v.all_lit();
    for (auto b : v.bits)
        if (b & ~mask) throw DecodeError("visibility bits above light count");
    return v;
}

inline AoBuffer decode_ao(const EncodedFrame& f) {
    AoBuffer a;
    a.counts = detail::decode_plane(f, Pass::ao);
    const FrameHeader& h = f.header;
    const float n = h.params[0];
    if (!(n >= 1.0f && n <= 255.0f) || n != std::floor(n)) throw DecodeError("bad AO ray count");
    a.width = h.width;
    a.height = h.height;
    a.pose = h.pose();
    a.rays = static_cast<int>(n);
    a.radius = h.params[1];
    for (auto c : a.counts)
        if (c > a.rays) throw DecodeError("AO count exceeds ray count");
    return a;
}

inline Image decode_color(const EncodedFrame& f) {
    Image img;
    img.rgb = detail::decode_plane(f, Pass::color);
    img.width = f.header.width;
    img.height = f.header.height;
    img.pose = f.header.pose();
    return img;
}

using DecodedFrame = std::variant<VisibilityBuffer, AoBuffer, Image>;

inline DecodedFrame decode_frame(const EncodedFrame& f) {
    switch (f.header.pass) {
        case Pass::visibility: return decode_visibility(f);
        case Pass::ao: return decode_ao(f);
        case Pass::color: return decode_color(f);
    }
    throw DecodeError("unknown pass id");
}

// ---------------------------------------------------------------------------
// Datagrams
//   "DHRP" u32 frame_id u8 pass u16 packet_index u16 packet_count u16 payload_len
//   [96-byte FrameHeader when packet_index == 0] payload

struct Datagram {
    std::uint32_t frame_id = 0;
    Pass pass = Pass::visibility;
    std::uint16_t packet_index = 0;
    std::uint16_t packet_count = 1;
    std::optional<FrameHeader> header;
    std::vector<std::uint8_t> payload;

    std::size_t wire_size() const {
        return kDatagramPrefixSize + (header ? kFrameHeaderSize : 0) + payload.size();
    }
    friend bool operator==(const Datagram&, const Datagram&) = default;
};

inline std::vector<std::uint8_t> serialize_datagram(const Datagram& d) {
    std::vector<std::uint8_t> out;
    out.reserve(d.wire_size());
    ByteWriter w(out);
    w.tag("DHRP");
    w.u32(d.frame_id);
    w.u8(static_cast<std::uint8_t>(d.pass));
    w.u16(d.packet_index);
    w.u16(d.packet_count);
    w.u16(static_cast<std::uint16_t>(d.payload.size()));
    if (d.packet_index == 0) {
        if (!d.header) throw std::invalid_argument("first datagram of a frame must carry the header");
        write_frame_header(w, *d.header);
    }
    w.bytes(d.payload);
    return out;
}

inline Datagram parse_datagram(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_tag("DHRP");
    Datagram d;
    d.frame_id = r.u32();
    const std::uint8_t pass = r.u8();
    if (pass > 2) throw DecodeError("unknown pass id");
    d.pass = static_cast<Pass>(pass);
    d.packet_index = r.u16();
    d.packet_count = r.u16();
    const std::uint16_t len = r.u16();
    if (d.packet_count == 0 || d.packet_index >= d.packet_count) throw DecodeError("bad packet index");
    if (d.packet_index == 0) d.header = read_frame_header(r, d.frame_id, d.pass);
    const auto payload = r.bytes(len);
    d.payload.assign(payload.begin(), payload.end());
    if (r.remaining() != 0) throw DecodeError("trailing bytes after datagram payload");
    return d;
}

inline std::uint16_t packet_count_for(std::size_t bytes, std::size_t capacity) {
    const std::size_t n = std::max<std::size_t>(1, (bytes + capacity - 1) / capacity);
    if (n > 65535) throw std::invalid_argument("frame needs more than 65535 packets");
    return static_cast<std::uint16_t>(n);
}

inline std::vector<Datagram> packetize(const EncodedFrame& f, std::size_t capacity = kDefaultPayloadCapacity) {
    if (capacity < 64 || capacity > 65535) throw std::invalid_argument("payload capacity must be in [64, 65535]");
    const std::uint16_t count = packet_count_for(f.payload.size(), capacity);
    std::vector<Datagram> out(count);
    for (std::uint16_t k = 0; k < count; ++k) {
        Datagram& d = out[k];
        d.frame_id = f.header.frame_id;
        d.pass = f.header.pass;
        d.packet_index = k;
        d.packet_count = count;
        if (k == 0) d.header = f.header;
        const std::size_t lo = static_cast<std::size_t>(k) * capacity;
        const std::size_t hi = std::min(f.payload.size(), lo + capacity);
        if (lo < hi) d.payload.assign(f.payload.begin() + static_cast<std::ptrdiff_t>(lo),
                                      f.payload.begin() + static_cast<std::ptrdiff_t>(hi));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reassembly with whole-frame-drop semantics.

struct AssemblerPolicy {
    double expiry_ms = 500.0;
};

enum class FrameStatus { unknown, pending, complete, dropped };

struct AssemblyEvent {
    FrameStatus status = FrameStatus::unknown;  // complete or dropped
    Pass pass = Pass::visibility;
    std::uint32_t frame_id = 0;
    std::optional<EncodedFrame> frame;  // set when complete
    std::string reason;                 // set when dropped
};

class Assembler {
public:
    explicit Assembler(AssemblerPolicy policy = {}) : policy_(policy) {}

    /// Feeds one datagram; returns frames that completed or were dropped as a result.
    std::vector<AssemblyEvent> ingest(const Datagram& d, double now_ms) {
        std::vector<AssemblyEvent> events = expire(now_ms);
        const Key key{static_cast<std::uint8_t>(d.pass), d.frame_id};
        if (auto it = finished_.find(key); it != finished_.end()) return events;  // duplicate or late
        if (auto latest = latest_complete_.find(key.pass); latest != latest_complete_.end() && d.frame_id <= latest->second) {
            finish(key, FrameStatus::dropped);
            events.push_back(dropped_event(key, "superseded"));
            return events;
        }
        auto [it, inserted] = pending_.try_emplace(key);
        Partial& p = it->second;
        if (inserted) {
            p.first_seen = now_ms;
            p.packet_count = d.packet_count;
            p.chunks.resize(d.packet_count);
        }
        if (d.packet_count != p.packet_count || d.packet_index >= p.packet_count ||
            (d.header && p.header && !(*d.header == *p.header))) {
            pending_.erase(it);
            finish(key, FrameStatus::dropped);
            events.push_back(dropped_event(key, "conflicting headers"));
            return events;
        }
        if (d.header) p.header = d.header;
        auto& chunk = p.chunks[d.packet_index];
        if (!chunk) {
            chunk = d.payload;
            ++p.received;
        } else if (*chunk != d.payload) {
            pending_.erase(it);
            finish(key, FrameStatus::dropped);
            events.push_back(dropped_event(key, "conflicting payloads"));
            return events;
        }
        if (p.received == p.packet_count) {
            AssemblyEvent ev;
            ev.pass = d.pass;
            ev.frame_id = d.frame_id;
            EncodedFrame f{*p.header, {}};
            for (const auto& c : p.chunks) f.payload.insert(f.payload.end(), c->begin(), c->end());
            const bool even = evenly_split(p);
            pending_.erase(it);
            if (f.payload.size() != f.header.payload_size() || !even) {
                finish(key, FrameStatus::dropped);
                events.push_back(dropped_event(key, "payload length mismatch"));
                return events;
            }
            ev.status = FrameStatus::complete;
            ev.frame = std::move(f);
            finish(key, FrameStatus::complete);
            latest_complete_[key.pass] = std::max(latest_complete_[key.pass], d.frame_id);
            events.push_back(std::move(ev));
            supersede(key.pass, d.frame_id, events);
        }
        return events;
    }

    /// Drops every pending frame first seen at least expiry_ms ago.
    std::vector<AssemblyEvent> expire(double now_ms) {
        std::vector<AssemblyEvent> events;
        for (auto it = pending_.begin(); it != pending_.end();) {
            if (now_ms - it->second.first_seen >= policy_.expiry_ms) {
                const Key key = it->first;
                it = pending_.erase(it);
                finish(key, FrameStatus::dropped);
                events.push_back(dropped_event(key, "expired"));
            } else {
                ++it;
            }
        }
        return events;
    }

    FrameStatus status(Pass pass, std::uint32_t frame_id) const {
        const Key key{static_cast<std::uint8_t>(pass), frame_id};
        if (auto it = finished_.find(key); it != finished_.end()) return it->second;
        return pending_.count(key) ? FrameStatus::pending : FrameStatus::unknown;
    }

    std::size_t pending_count() const { return pending_.size(); }

private:
    struct Key {
        std::uint8_t pass;
        std::uint32_t frame_id;
        friend auto operator<=>(const Key&, const Key&) = default;
    };
    struct Partial {
        double first_seen = 0.0;
        std::uint16_t packet_count = 0;
        std::uint16_t received = 0;
        std::optional<FrameHeader> header;
        std::vector<std::optional<std::vector<std::uint8_t>>> chunks;
    };

    // Every datagram but the last is full.
    static bool evenly_split(const Partial& p) {
        const std::size_t full = p.chunks.front()->size();
        for (std::size_t k = 0; k + 1 < p.chunks.size(); ++k)
            if (p.chunks[k]->size() != full || full == 0) return false;
        return p.chunks.back()->size() <= full;
    }

    void finish(const Key& key, FrameStatus s) { finished_[key] = s; }

    static AssemblyEvent dropped_event(const Key& key, std::string reason) {
        AssemblyEvent ev;
        ev.status = FrameStatus::dropped;
        ev.pass = static_cast<Pass>(key.pass);
        ev.frame_id = key.frame_id;
        ev.reason = std::move(reason);
        return ev;
    }

    void supersede(std::uint8_t pass, std::uint32_t frame_id, std::vector<AssemblyEvent>& events) {
        for (auto it = pending_.begin(); it != pending_.end();) {
            if (it->first.pass == pass && it->first.frame_id < frame_id) {
                const Key key = it->first;
                it = pending_.erase(it);
                finish(key, FrameStatus::dropped);
                events.push_back(dropped_event(key, "superseded"));
            } else {
                ++it;
            }
        }
    }

    AssemblerPolicy policy_;
    std::map<Key, Partial> pending_;
    std::map<Key, FrameStatus> finished_;
    std::map<std::uint8_t, std::uint32_t> latest_complete_;
};

// ---------------------------------------------------------------------------
// Client -> server camera message: "DHRC" u32 frame_id, pose 12 x f32, u32 timestamp_ms.

struct CameraMessage {
    std::uint32_t frame_id = 0;
    Camera camera;
    std::uint32_t timestamp_ms = 0;
    friend bool operator==(const CameraMessage&, const CameraMessage&) = default;
};

inline constexpr std::size_t kCameraMessageSize = 4 + 4 + 48 + 4;

inline std::vector<std::uint8_t> serialize_camera_message(const CameraMessage& m) {
    std::vector<std::uint8_t> out;
    ByteWriter w(out);
    w.tag("DHRC");
    w.u32(m.frame_id);
    write_pose(w, m.camera);
    w.u32(m.timestamp_ms);
    return out;
}

/// Resolution and field of view are not on the wire; they come from `base`.
inline CameraMessage parse_camera_message(std::span<const std::uint8_t> bytes, const Camera& base = {}) {
    ByteReader r(bytes);
    r.expect_tag("DHRC");
    CameraMessage m;
    m.camera = base;
    m.frame_id = r.u32();
    read_pose(r, m.camera);
    m.timestamp_ms = r.u32();
    if (r.remaining() != 0) throw DecodeError("trailing bytes after camera message");
    return m;
}

}  // namespace dhrs
