#pragma once

#include <algorithm>
#include <cmath>

#include "hmr/numerics.hpp"

namespace hmr {

// Weak-perspective camera: orthographic drop of Z, scaled by s and shifted
// by (t_x, t_y) in normalized image units.
struct CameraParams {
    double s = 1.0;
    double t_x = 0.0;
    double t_y = 0.0;
};

// Center-size box normalized to [0,1] relative to the image extent.
struct NormBox {
    double cx = 0.5;
    double cy = 0.5;
    double w = 1.0;
    double h = 1.0;

    static constexpr double kMinSide = 1e-4;

    NormBox clamped() const {
        NormBox b = *this;
        b.cx = std::clamp(b.cx, 0.0, 1.0);
        b.cy = std::clamp(b.cy, 0.0, 1.0);
        b.w = std::clamp(b.w, kMinSide, 1.0);
        b.h = std::clamp(b.h, kMinSide, 1.0);
        return b;
    }

    bool valid() const {
        return cx >= 0.0 && cx <= 1.0 && cy >= 0.0 && cy <= 1.0 &&
               w > 0.0 && w <= 1.0 && h > 0.0 && h <= 1.0;
    }
};

// Fixed conversion constants between weak-perspective scale and depth.
// The proportionality constant is a declared convention of this project.
struct CameraConventions {
    double focal = 5000.0;
    double img_extent = 1288.0;
};

inline Matrix project(const Matrix& points3d, const CameraParams& cam) {
    if (points3d.cols != 3) throw ShapeError("project: expected N x 3 points");
    Matrix out(points3d.rows, 2);
    for (std::size_t i = 0; i < points3d.rows; ++i) {
        out.at(i, 0) = cam.s * points3d.at(i, 0) + cam.t_x;
        out.at(i, 1) = cam.s * points3d.at(i, 1) + cam.t_y;
    }
    return out;
}

inline double scale_to_depth(double s, double focal, double img_extent) {
    if (s <= 0.0) throw DomainError("scale_to_depth: scale must be positive");
    return 2.0 * focal / (s * img_extent);
}

inline double depth_to_scale(double depth, double focal, double img_extent) {
    if (depth <= 0.0) throw DomainError("depth_to_scale: depth must be positive");
    return 2.0 * focal / (depth * img_extent);
}

inline double scale_to_depth(double s, const CameraConventions& conv) {
    return scale_to_depth(s, conv.focal, conv.img_extent);
}

inline double depth_to_scale(double depth, const CameraConventions& conv) {
    return depth_to_scale(depth, conv.focal, conv.img_extent);
}

// Tight axis-aligned box around 2D points, clamped to the unit square.
inline NormBox box_from_points(const Matrix& p2d) {
    if (p2d.cols != 2) throw ShapeError("box_from_points: expected N x 2 points");
    if (p2d.rows == 0) throw DomainError("box_from_points: empty point set");
    double x0 = p2d.at(0, 0), x1 = x0, y0 = p2d.at(0, 1), y1 = y0;
    for (std::size_t i = 1; i < p2d.rows; ++i) {
        x0 = std::min(x0, p2d.at(i, 0));
        x1 = std::max(x1, p2d.at(i, 0));
        y0 = std::min(y0, p2d.at(i, 1));
        y1 = std::max(y1, p2d.at(i, 1));
    }
    NormBox b;
    b.cx = 0.5 * (x0 + x1);
    b.cy = 0.5 * (y0 + y1);
    b.w = x1 - x0;
    b.h = y1 - y0;
    return b.clamped();
}

} // namespace hmr
