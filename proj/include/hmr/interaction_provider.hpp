#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmr/metrics.hpp"
#include "hmr/records.hpp"
#include "hmr/rng.hpp"

namespace hmr {

enum class ProviderMode { geometric, labeled, zero };

struct ProviderConfig {
    std::size_t feature_dim = 768;
    ProviderMode mode = ProviderMode::geometric;
    double label_iou_floor = 0.3;
};

// L-infinity bound on any feature component produced by extract():
// sinusoidal lifting contributes at most 1, the label embedding at most 0.5.
constexpr double kFeatureBound = 1.5;

struct SceneObject {
    NormBox box;
    int category = 0;
};

struct InteractionLabel {
    std::size_t subject_person = 0;
    bool object_is_person = false;
    std::size_t object_index = 0;
    int label = 0;
};

// Deterministic synthetic scene; stands in for an annotated dataset image.
struct SceneSpec {
    std::uint64_t seed = 0;
    GroundTruthSet persons;
    std::vector<SceneObject> objects;
    std::vector<InteractionLabel> interactions;
};

// Relative box geometry used as the base interaction descriptor:
// center offset, log size ratios, IoU, GIoU.
inline std::array<double, 6> pair_geometry(const NormBox& bh, const NormBox& be) {
    return {be.cx - bh.cx,
            be.cy - bh.cy,
            std::log(be.w / bh.w),
            std::log(be.h / bh.h),
            iou(bh, be),
            giou(bh, be)};
}

namespace detail {

// Sinusoidal lifting of the 6 geometry components to dim values.
// Block b holds sin(2^b * g_c) then cos(2^b * g_c) for c = 0..5.
inline std::vector<double> lift_geometry(const std::array<double, 6>& g, std::size_t dim) {
    std::vector<double> out(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) {
        const std::size_t block = d / 12;
        const std::size_t slot = d % 12;
        const std::size_t c = slot % 6;
        const double freq = std::ldexp(1.0, static_cast<int>(block));
        out[d] = (slot < 6) ? std::sin(freq * g[c]) : std::cos(freq * g[c]);
    }
    return out;
}

inline int best_iou_match(const NormBox& box, const std::vector<NormBox>& candidates,
                          double floor) {
    int best = -1;
    double best_iou = floor;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double v = iou(box, candidates[i]);
        if (v > best_iou) {
            best_iou = v;
            best = static_cast<int>(i);
        }
    }
    return best;
}

} // namespace detail

// Deterministic stand-in for a pretrained pairwise interaction feature
// extractor. Pure function of (scene, boxes, cfg).
inline std::vector<double> extract(const SceneSpec& scene, const NormBox& bh,
                                   const NormBox& be, const ProviderConfig& cfg) {
    if (!bh.valid() || !be.valid())
        throw DomainError("extract: invalid box");
    if (cfg.mode == ProviderMode::zero)
        return std::vector<double>(cfg.feature_dim, 0.0);

    std::vector<double> feat = detail::lift_geometry(pair_geometry(bh, be), cfg.feature_dim);
    if (cfg.mode != ProviderMode::labeled) return feat;

    // match provider boxes to scene entities by greatest IoU above the floor
    std::vector<NormBox> person_boxes;
    for (const auto& p : scene.persons) person_boxes.push_back(p.bbox);
    std::vector<NormBox> entity_boxes = person_boxes;
    for (const auto& o : scene.objects) entity_boxes.push_back(o.box);

    const int subj = detail::best_iou_match(bh, person_boxes, cfg.label_iou_floor);
    const int obj = detail::best_iou_match(be, entity_boxes, cfg.label_iou_floor);
    if (subj < 0 || obj < 0) return feat;

    const bool obj_is_person = static_cast<std::size_t>(obj) < person_boxes.size();
    const std::size_t obj_index =
        obj_is_person ? static_cast<std::size_t>(obj)
                      : static_cast<std::size_t>(obj) - person_boxes.size();
    for (const auto& lab : scene.interactions) {
        if (lab.subject_person != static_cast<std::size_t>(subj)) continue;
        if (lab.object_is_person != obj_is_person || lab.object_index != obj_index) continue;
        // fixed hash embedding of the label id, components in [-0.5, 0.5]
        Rng rng(0x1abe1ull ^ (static_cast<std::uint64_t>(lab.label) * 0x9e3779b97f4a7c15ull));
        for (std::size_t d = 0; d < cfg.feature_dim; ++d)
            feat[d] += rng.uniform(-0.5, 0.5);
        break;
    }
    return feat;
}

// Ground-truth object boxes jittered by seeded uniform noise; stands in for
// an off-the-shelf object detector.
inline std::vector<NormBox> detect_objects(const SceneSpec& scene, double noise,
                                           std::size_t max_out) {
    if (noise < 0.0) throw DomainError("detect_objects: noise must be >= 0");
    Rng rng(scene.seed ^ 0xde7ec7ull);
    std::vector<NormBox> out;
    for (const auto& obj : scene.objects) {
        if (out.size() >= max_out) break;
        NormBox b = obj.box;
        if (noise > 0.0) {
            b.cx += rng.uniform(-noise, noise);
            b.cy += rng.uniform(-noise, noise);
            b.w += rng.uniform(-noise, noise);
            b.h += rng.uniform(-noise, noise);
        }
        out.push_back(b.clamped());
    }
    return out;
}

// --- JSON ------------------------------------------------------------------

inline nlohmann::json norm_box_to_json(const NormBox& b) {
    return {{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}};
}

inline NormBox norm_box_from_json(const nlohmann::json& j) {
    NormBox b;
    b.cx = j.at("cx").get<double>();
    b.cy = j.at("cy").get<double>();
    b.w = j.at("w").get<double>();
    b.h = j.at("h").get<double>();
    return b;
}

inline nlohmann::json person_truth_to_json(const PersonTruth& p) {
    nlohmann::json j;
    j["pose"] = nlohmann::json::array();
    for (const auto& aa : p.params.pose) j["pose"].push_back({aa[0], aa[1], aa[2]});
    j["shape"] = p.params.shape;
    j["cam"] = {{"s", p.cam.s}, {"t_x", p.cam.t_x}, {"t_y", p.cam.t_y}};
    j["depth"] = p.depth;
    j["joints3d"] = matrix_to_json(p.joints3d);
    j["kpts2d"] = matrix_to_json(p.kpts2d);
    j["bbox"] = norm_box_to_json(p.bbox);
    return j;
}

inline PersonTruth person_truth_from_json(const nlohmann::json& j) {
    PersonTruth p;
    for (const auto& aa : j.at("pose"))
        p.params.pose.push_back({aa.at(0).get<double>(), aa.at(1).get<double>(),
                                 aa.at(2).get<double>()});
    p.params.shape = j.at("shape").get<std::vector<double>>();
    p.cam.s = j.at("cam").at("s").get<double>();
    p.cam.t_x = j.at("cam").at("t_x").get<double>();
    p.cam.t_y = j.at("cam").at("t_y").get<double>();
    p.depth = j.at("depth").get<double>();
    p.joints3d = matrix_from_json(j.at("joints3d"), "joints3d");
    p.kpts2d = matrix_from_json(j.at("kpts2d"), "kpts2d");
    p.bbox = norm_box_from_json(j.at("bbox"));
    return p;
}

inline nlohmann::json scene_to_json(const SceneSpec& s) {
    nlohmann::json j;
    j["seed"] = s.seed;
    j["persons"] = nlohmann::json::array();
    for (const auto& p : s.persons) j["persons"].push_back(person_truth_to_json(p));
    j["objects"] = nlohmann::json::array();
    for (const auto& o : s.objects)
        j["objects"].push_back({{"box", norm_box_to_json(o.box)}, {"category", o.category}});
    j["interactions"] = nlohmann::json::array();
    for (const auto& l : s.interactions)
        j["interactions"].push_back({{"subject_person", l.subject_person},
                                     {"object_is_person", l.object_is_person},
                                     {"object_index", l.object_index},
                                     {"label", l.label}});
    return j;
}

inline SceneSpec scene_from_json(const nlohmann::json& j) {
    SceneSpec s;
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& p : j.at("persons")) s.persons.push_back(person_truth_from_json(p));
    for (const auto& o : j.at("objects")) {
        SceneObject so;
        so.box = norm_box_from_json(o.at("box"));
        so.category = o.at("category").get<int>();
        s.objects.push_back(so);
    }
    for (const auto& l : j.at("interactions")) {
        InteractionLabel il;
        il.subject_person = l.at("subject_person").get<std::size_t>();
        il.object_is_person = l.at("object_is_person").get<bool>();
        il.object_index = l.at("object_index").get<std::size_t>();
        il.label = l.at("label").get<int>();
        s.interactions.push_back(il);
    }
    return s;
}

} // namespace hmr
