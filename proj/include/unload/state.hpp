#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "unload/rng.hpp"

namespace unload {

struct Cell {
    int column = 0;
    int row = 0;  // row 0 is the bottom of the stack
    bool operator==(const Cell&) const = default;
};

// Full state of one episode. Counters satisfy
//   removed_success + removed_fallen + removed_forced + occupied_count == N_total
// and clock == total removed, at every step boundary.
struct StackState {
    int columns = 0;
    int rows = 0;
    std::vector<uint8_t> occupancy;           // rows * columns, row-major by row
    std::vector<std::array<uint8_t, 3>> shades;  // parcel colors, 8-bit RGB
    int clock = 0;
    int removed_success = 0;
    int removed_fallen = 0;
    int removed_forced = 0;
    Rng rng{0};  // drives stochastic fall outcomes

    bool occupied(int column, int row) const {
        return occupancy[static_cast<size_t>(row) * columns + column] != 0;
    }
    void set_occupied(int column, int row, bool value) {
        occupancy[static_cast<size_t>(row) * columns + column] = value ? 1 : 0;
    }
    const std::array<uint8_t, 3>& shade(int column, int row) const {
        return shades[static_cast<size_t>(row) * columns + column];
    }
    std::array<uint8_t, 3>& shade(int column, int row) {
        return shades[static_cast<size_t>(row) * columns + column];
    }

    int occupied_count() const {
        int n = 0;
        for (uint8_t o : occupancy) n += o;
        return n;
    }

    int total_parcels() const { return columns * rows; }

    // Height of a column: number of occupied cells (contiguous from the
    // bottom once gravity closure holds).
    int column_height(int column) const {
        int h = 0;
        for (int r = 0; r < rows; ++r) h += occupied(column, r) ? 1 : 0;
        return h;
    }
};

}  // namespace unload
