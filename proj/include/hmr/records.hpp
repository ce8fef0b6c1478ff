#pragma once

#include <vector>

#include "hmr/body_model.hpp"
#include "hmr/camera.hpp"
#include "hmr/numerics.hpp"

namespace hmr {

// One recovered person. Joints and vertices are in camera space (meters);
// keypoints and box are in normalized image coordinates.
struct PersonPrediction {
    double conf = 0.0;
    BodyParams params;
    CameraParams cam;
    double depth = 0.0;
    Matrix joints3d;   // K x 3
    Matrix vertices;   // V x 3
    Matrix kpts2d;     // K x 2
    NormBox bbox;
};

struct PersonTruth {
    BodyParams params;
    CameraParams cam;
    double depth = 0.0;
    Matrix joints3d;   // K x 3
    Matrix kpts2d;     // K x 2
    NormBox bbox;
    std::vector<std::uint8_t> kpts_visible;  // optional, empty = all visible
};

using PredictionSet = std::vector<PersonPrediction>;
using GroundTruthSet = std::vector<PersonTruth>;

} // namespace hmr
