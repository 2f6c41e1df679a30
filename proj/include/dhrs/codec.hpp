#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <lz4.h>

#include "dhrs/bytes.hpp"

namespace dhrs {

enum class Codec : std::uint8_t { identity = 0, lz4 = 1 };

inline Codec parse_codec(const std::string& name) {
    if (name == "lz4") return Codec::lz4;
    if (name == "identity") return Codec::identity;
    throw std::invalid_argument("unknown codec: " + name);
}

inline const char* codec_name(Codec c) { return c == Codec::lz4 ? "lz4" : "identity"; }

/// Lossless block compression of one raw plane.
inline std::vector<std::uint8_t> compress(Codec codec, std::span<const std::uint8_t> raw) {
    if (codec == Codec::identity) return {raw.begin(), raw.end()};
    if (raw.size() > static_cast<std::size_t>(LZ4_MAX_INPUT_SIZE)) throw std::invalid_argument("plane too large for LZ4");
    const int src = static_cast<int>(raw.size());
    std::vector<std::uint8_t> out(static_cast<std::size_t>(LZ4_compressBound(src)));
    const int n = LZ4_compress_default(reinterpret_cast<const char*>(raw.data()), reinterpret_cast<char*>(out.data()),
                                       src, static_cast<int>(out.size()));
    if (n <= 0) throw std::runtime_error("LZ4 compression failed");
    out.resize(static_cast<std::size_t>(n));
    return out;
}

/// Inverse of compress; the output must be exactly `raw_size` bytes.
inline std::vector<std::uint8_t> decompress(Codec codec, std::span<const std::uint8_t> bytes, std::size_t raw_size) {
    if (codec == Codec::identity) {
        if (bytes.size() != raw_size) throw DecodeError("identity payload size mismatch");
        return {bytes.begin(), bytes.end()};
    }
    if (codec != Codec::lz4) throw DecodeError("unknown codec id");
    if (raw_size > static_cast<std::size_t>(std::numeric_limits<int>::max()) ||
        bytes.size() > static_cast<std::size_t>(std::numeric_limits<int>::max()))
        throw DecodeError("frame too large");
    std::vector<std::uint8_t> out(raw_size);
    const int n = LZ4_decompress_safe(reinterpret_cast<const char*>(bytes.data()), reinterpret_cast<char*>(out.data()),
                                      static_cast<int>(bytes.size()), static_cast<int>(raw_size));
    if (n < 0) throw DecodeError("corrupt LZ4 stream");
    if (static_cast<std::size_t>(n) != raw_size) throw DecodeError("decompressed size does not match header");
    return out;
}

}  // namespace dhrs
