#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace unload {

// RGB observation, 8-bit per channel, row-major from the top-left pixel.
// Logical values are byte/255, in [0, 1].
struct Observation {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> rgb;  // height * width * 3, interleaved

    int num_pixels() const { return height * width; }

    uint8_t& at(int v, int u, int c) { return rgb[(v * width + u) * 3 + c]; }
    uint8_t at(int v, int u, int c) const { return rgb[(v * width + u) * 3 + c]; }

    bool operator==(const Observation&) const = default;
};

inline Observation make_observation(int height, int width) {
    Observation obs;
    obs.height = height;
    obs.width = width;
    obs.rgb.assign(static_cast<size_t>(height) * width * 3, 0);
    return obs;
}

// Binary PPM (P6), 8-bit, row-major.
inline void write_ppm(const Observation& obs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << "P6\n" << obs.width << " " << obs.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(obs.rgb.data()),
              static_cast<std::streamsize>(obs.rgb.size()));
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

}  // namespace unload
