#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "hmr/camera.hpp"
#include "hmr/numerics.hpp"

namespace hmr {

struct AlignmentError : std::runtime_error {
    explicit AlignmentError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SimilarityTransform {
    double scale = 1.0;
    std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
    std::array<double, 3> translation{0, 0, 0};

    Matrix apply(const Matrix& pts) const {
        Matrix out(pts.rows, 3);
        for (std::size_t i = 0; i < pts.rows; ++i)
            for (int r = 0; r < 3; ++r)
                out.at(i, r) = scale * (rotation[r * 3 + 0] * pts.at(i, 0) +
                                        rotation[r * 3 + 1] * pts.at(i, 1) +
                                        rotation[r * 3 + 2] * pts.at(i, 2)) +
                               translation[r];
        return out;
    }
};

// Mean per-joint position error in millimeters (inputs in meters).
inline double mpjpe(const Matrix& pred, const Matrix& gt) {
    if (!pred.same_shape(gt) || pred.cols != 3)
        throw ShapeError("mpjpe: expected matching K x 3 inputs");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.rows; ++i) {
        const double dx = pred.at(i, 0) - gt.at(i, 0);
        const double dy = pred.at(i, 1) - gt.at(i, 1);
        const double dz = pred.at(i, 2) - gt.at(i, 2);
        sum += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return 1000.0 * sum / static_cast<double>(pred.rows);
}

inline double pve(const Matrix& pred_verts, const Matrix& gt_verts) {
    return mpjpe(pred_verts, gt_verts);
}

inline double pck3d(const Matrix& pred, const Matrix& gt, double thresh_mm) {
    if (!pred.same_shape(gt) || pred.cols != 3)
        throw ShapeError("pck3d: expected matching K x 3 inputs");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.rows; ++i) {
        const double dx = pred.at(i, 0) - gt.at(i, 0);
        const double dy = pred.at(i, 1) - gt.at(i, 1);
        const double dz = pred.at(i, 2) - gt.at(i, 2);
        if (1000.0 * std::sqrt(dx * dx + dy * dy + dz * dz) <= thresh_mm) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(pred.rows);
}

struct ProcrustesResult {
    SimilarityTransform transform;
    Matrix aligned;  // transform applied to pred
};

// Least-squares similarity alignment of pred onto gt (rotation, uniform
// scale, translation) via the orthogonal-Procrustes SVD construction with
// reflection correction.
inline ProcrustesResult procrustes_align(const Matrix& pred, const Matrix& gt) {
    if (!pred.same_shape(gt) || pred.cols != 3)
        throw ShapeError("procrustes_align: expected matching K x 3 inputs");
    const std::size_t K = pred.rows;
    if (K < 3) throw AlignmentError("procrustes_align: need at least 3 points");

    Eigen::Vector3d mu_p = Eigen::Vector3d::Zero(), mu_g = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < K; ++i)
        for (int c = 0; c < 3; ++c) {
            mu_p[c] += pred.at(i, c);
            mu_g[c] += gt.at(i, c);
        }
    mu_p /= static_cast<double>(K);
    mu_g /= static_cast<double>(K);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    double var_p = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        Eigen::Vector3d p(pred.at(i, 0) - mu_p[0], pred.at(i, 1) - mu_p[1], pred.at(i, 2) - mu_p[2]);
        Eigen::Vector3d g(gt.at(i, 0) - mu_g[0], gt.at(i, 1) - mu_g[1], gt.at(i, 2) - mu_g[2]);
        cov += g * p.transpose();
        var_p += p.squaredNorm();
    }
    if (var_p < 1e-18) throw AlignmentError("procrustes_align: degenerate point set");

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues()(1) < 1e-15 * std::max(1.0, svd.singularValues()(0)))
        throw AlignmentError("procrustes_align: rank-deficient configuration");
    Eigen::Matrix3d U = svd.matrixU(), V = svd.matrixV();
    Eigen::Vector3d d = Eigen::Vector3d::Ones();
    if ((U * V.transpose()).determinant() < 0.0) d(2) = -1.0;
    Eigen::Matrix3d R = U * d.asDiagonal() * V.transpose();
    const double trace = svd.singularValues()(0) * d(0) + svd.singularValues()(1) * d(1) +
                         svd.singularValues()(2) * d(2);
    const double scale = trace / var_p;
    Eigen::Vector3d t = mu_g - scale * (R * mu_p);

    ProcrustesResult res;
    res.transform.scale = scale;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) res.transform.rotation[r * 3 + c] = R(r, c);
    for (int r = 0; r < 3; ++r) res.transform.translation[r] = t[r];
    res.aligned = res.transform.apply(pred);
    return res;
}

inline double pa_mpjpe(const Matrix& pred, const Matrix& gt) {
    return mpjpe(procrustes_align(pred, gt).aligned, gt);
}

inline double iou(const NormBox& a, const NormBox& b) {
    const double ax0 = a.cx - 0.5 * a.w, ax1 = a.cx + 0.5 * a.w;
    const double ay0 = a.cy - 0.5 * a.h, ay1 = a.cy + 0.5 * a.h;
    const double bx0 = b.cx - 0.5 * b.w, bx1 = b.cx + 0.5 * b.w;
    const double by0 = b.cy - 0.5 * b.h, by1 = b.cy + 0.5 * b.h;
    const double iw = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
    const double ih = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
    const double inter = iw * ih;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return (uni > 0.0) ? inter / uni : 0.0;
}

// IoU minus the fraction of the enclosing hull not covered by the union.
inline double giou(const NormBox& a, const NormBox& b) {
    const double ax0 = a.cx - 0.5 * a.w, ax1 = a.cx + 0.5 * a.w;
    const double ay0 = a.cy - 0.5 * a.h, ay1 = a.cy + 0.5 * a.h;
    const double bx0 = b.cx - 0.5 * b.w, bx1 = b.cx + 0.5 * b.w;
    const double by0 = b.cy - 0.5 * b.h, by1 = b.cy + 0.5 * b.h;
    const double iw = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
    const double ih = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
    const double inter = iw * ih;
    const double uni = a.w * a.h + b.w * b.h - inter;
    const double hull = (std::max(ax1, bx1) - std::min(ax0, bx0)) *
                        (std::max(ay1, by1) - std::min(ay0, by0));
    const double v = (uni > 0.0 ? inter / uni : 0.0) -
                     (hull > 0.0 ? (hull - uni) / hull : 0.0);
    return v;
}

} // namespace hmr
