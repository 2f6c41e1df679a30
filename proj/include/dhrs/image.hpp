#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dhrs/gbuffer.hpp"

namespace dhrs {

/// 8-bit RGB image, row-major, interleaved. Carries the pose it was rendered for.
struct Image {
    int width = 0;
    int height = 0;
    CameraPose pose;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    std::uint8_t* at(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const std::uint8_t* at(int x, int y) const {
        return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    friend bool operator==(const Image&, const Image&) = default;
};

}  // namespace dhrs
