#include "unload/camera.hpp"

#include <algorithm>
#include <stdexcept>

namespace unload {

CameraModel CameraModel::make(int obs_resolution, int columns, int rows, double parcel_edge) {
    if (obs_resolution < std::max(columns, rows)) {
        throw std::invalid_argument("obs_resolution must be >= max(columns, rows)");
    }
    CameraModel cam;
    cam.obs_resolution = obs_resolution;
    cam.columns = columns;
    cam.rows = rows;
    cam.parcel_edge = parcel_edge;
    cam.cell_px = obs_resolution / std::max(columns, rows);
    cam.origin_u = (obs_resolution - columns * cam.cell_px) / 2;
    cam.origin_v = (obs_resolution - rows * cam.cell_px) / 2;
    return cam;
}

std::optional<Cell> CameraModel::pixel_to_cell(Pixel p) const {
    const int du = p.u - origin_u;
    const int dv = p.v - origin_v;
    if (du < 0 || dv < 0 || du >= columns * cell_px || dv >= rows * cell_px) {
        return std::nullopt;
    }
    // image rows count from the top, grid rows from the bottom
    return Cell{du / cell_px, rows - 1 - dv / cell_px};
}

Pixel CameraModel::cell_center_pixel(Cell c) const {
    return Pixel{origin_u + c.column * cell_px + cell_px / 2,
                 origin_v + (rows - 1 - c.row) * cell_px + cell_px / 2};
}

Workspace Workspace::covering_stack(int columns, int rows, double parcel_edge,
                                    double front_plane_y) {
    Workspace ws;
    ws.x_min = 0.0;
    ws.x_max = columns * parcel_edge;
    ws.y_min = front_plane_y - parcel_edge;
    ws.y_max = front_plane_y + parcel_edge;
    ws.z_min = -parcel_edge;  // ground margin
    ws.z_max = rows * parcel_edge;
    return ws;
}

std::optional<PickPose> pixel_to_pose(Pixel p, const StackState& state,
                                      const CameraModel& camera, const Workspace& ws) {
    if (!camera.in_image(p)) {
        throw std::out_of_range("pixel outside image bounds");
    }
    const auto cell = camera.pixel_to_cell(p);
    if (!cell || !state.occupied(cell->column, cell->row)) {
        return std::nullopt;  // background: depth follows occupancy
    }
    PickPose pose;
    pose.position = camera.cell_position(*cell);
    pose.in_workspace = ws.contains(pose.position);
    return pose;
}

bool in_workspace(const PickPose& pose, const Workspace& ws) {
    return ws.contains(pose.position);
}

std::vector<uint8_t> workspace_action_mask(const StackState& state,
                                           const CameraModel& camera, const Workspace& ws) {
    const int res = camera.obs_resolution;
    std::vector<uint8_t> mask(static_cast<size_t>(res) * res, 0);
    // Rasterize per occupied cell instead of probing every pixel.
    for (int r = 0; r < camera.rows; ++r) {
        for (int c = 0; c < camera.columns; ++c) {
            if (!state.occupied(c, r)) continue;
            if (!ws.contains(camera.cell_position({c, r}))) continue;
            const int u0 = camera.origin_u + c * camera.cell_px;
            const int v0 = camera.origin_v + (camera.rows - 1 - r) * camera.cell_px;
            for (int v = v0; v < v0 + camera.cell_px; ++v) {
                for (int u = u0; u < u0 + camera.cell_px; ++u) {
                    mask[static_cast<size_t>(v) * res + u] = 1;
                }
            }
        }
    }
    return mask;
}

}  // namespace unload
