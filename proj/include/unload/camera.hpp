#pragma once

#include <optional>
#include <vector>

#include "unload/state.hpp"

namespace unload {

struct Pixel {
    int u = 0;  // image x, left to right
    int v = 0;  // image y, top to bottom
    bool operator==(const Pixel&) const = default;
};

struct Vec3 {
    double x = 0, y = 0, z = 0;
    bool operator==(const Vec3&) const = default;
};

// Orthographic front-face camera. The grid occupies a centered, axis-aligned
// viewport of whole-pixel cell rectangles; everything else is background.
struct CameraModel {
    int obs_resolution = 0;
    int columns = 0;
    int rows = 0;
    double parcel_edge = 0.25;
    double front_plane_y = 0.0;
    int cell_px = 0;   // side of one cell rectangle, pixels
    int origin_u = 0;  // viewport top-left
    int origin_v = 0;

    static CameraModel make(int obs_resolution, int columns, int rows, double parcel_edge);

    bool in_image(Pixel p) const {
        return p.u >= 0 && p.u < obs_resolution && p.v >= 0 && p.v < obs_resolution;
    }

    // Cell under the pixel, or nullopt when the pixel lies in the margin.
    std::optional<Cell> pixel_to_cell(Pixel p) const;

    Pixel cell_center_pixel(Cell c) const;

    // Face-center position of a cell in the inertial frame (z up).
    Vec3 cell_position(Cell c) const {
        return {(c.column + 0.5) * parcel_edge, front_plane_y, (c.row + 0.5) * parcel_edge};
    }
};

// Axis-aligned box in the inertial frame, closed bounds.
struct Workspace {
    double x_min = 0, x_max = 0;
    double y_min = 0, y_max = 0;
    double z_min = 0, z_max = 0;

    bool contains(const Vec3& p) const {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max &&
               p.z >= z_min && p.z <= z_max;
    }

    // Stack bounding box plus a ground margin: by default only background
    // pixels resolve out of workspace.
    static Workspace covering_stack(int columns, int rows, double parcel_edge,
                                    double front_plane_y = 0.0);
};

// Picking pose with the fixed front-orthogonal orientation.
struct PickPose {
    Vec3 position;
    bool in_workspace = false;
};

// Resolves a pixel against the scene. Occupied cell -> pose at the cell face
// center; margin or empty cell -> nullopt (background, a far-plane point
// outside every workspace).
std::optional<PickPose> pixel_to_pose(Pixel p, const StackState& state,
                                      const CameraModel& camera, const Workspace& ws);

bool in_workspace(const PickPose& pose, const Workspace& ws);

// Per-pixel boolean map (row-major, obs_resolution^2): true iff pixel_to_pose
// yields an in-workspace pose.
std::vector<uint8_t> workspace_action_mask(const StackState& state,
                                           const CameraModel& camera, const Workspace& ws);

}  // namespace unload
