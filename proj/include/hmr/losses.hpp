#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmr/matching.hpp"
#include "hmr/records.hpp"

namespace hmr {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct LossWeights {
    double depth = 0.5;
    double pose = 5.0;
    double shape = 3.0;
    double j3ds = 8.0;
    double j2ds = 40.0;
    double box = 2.0;
    double det = 1.0;
    // kept in the serialized format for compatibility; must stay 0 because
    // the scale-map branch is not part of this artifact
    double map = 0.0;
};

struct TermLosses {
    double depth = 0.0;
    double pose = 0.0;
    double shape = 0.0;
    double j3ds = 0.0;
    double j2ds = 0.0;
    double box = 0.0;
};

struct LossBreakdown {
    TermLosses terms;          // averaged over matched pairs
    double det = 0.0;
    double total = 0.0;
    std::vector<TermLosses> per_pair;
    Assignment assignment;
};

// All L1 terms reduce by mean over their elements (documented convention);
// the 3D joint term is root-relative with depth supervised separately.
inline TermLosses term_losses(const PersonPrediction& pred, const PersonTruth& gt) {
    TermLosses t;
    t.depth = std::abs(pred.depth - gt.depth);

    if (pred.params.pose.size() != gt.params.pose.size() ||
        pred.params.shape.size() != gt.params.shape.size())
        throw ShapeError("term_losses: parameter shapes disagree");
    double psum = 0.0;
    for (std::size_t k = 0; k < gt.params.pose.size(); ++k)
        for (int c = 0; c < 3; ++c)
            psum += std::abs(pred.params.pose[k][c] - gt.params.pose[k][c]);
    t.pose = psum / static_cast<double>(gt.params.pose.size() * 3);

    double ssum = 0.0;
    for (std::size_t b = 0; b < gt.params.shape.size(); ++b)
        ssum += std::abs(pred.params.shape[b] - gt.params.shape[b]);
    t.shape = ssum / static_cast<double>(gt.params.shape.size());

    if (!pred.joints3d.same_shape(gt.joints3d) || !pred.kpts2d.same_shape(gt.kpts2d))
        throw ShapeError("term_losses: joint shapes disagree");
    const std::size_t K = gt.joints3d.rows;
    double jsum = 0.0;
    for (std::size_t k = 0; k < K; ++k)
        for (int c = 0; c < 3; ++c)
            jsum += std::abs((pred.joints3d.at(k, c) - pred.joints3d.at(0, c)) -
                             (gt.joints3d.at(k, c) - gt.joints3d.at(0, c)));
    t.j3ds = jsum / static_cast<double>(K * 3);

    double j2sum = 0.0;
    for (std::size_t k = 0; k < K; ++k)
        for (int c = 0; c < 2; ++c)
            j2sum += std::abs(pred.kpts2d.at(k, c) - gt.kpts2d.at(k, c));
    t.j2ds = j2sum / static_cast<double>(K * 2);

    const double l1 = std::abs(pred.bbox.cx - gt.bbox.cx) + std::abs(pred.bbox.cy - gt.bbox.cy) +
                      std::abs(pred.bbox.w - gt.bbox.w) + std::abs(pred.bbox.h - gt.bbox.h);
    t.box = l1 + (1.0 - giou(pred.bbox, gt.bbox));
    return t;
}

// Focal binary detection loss: matched queries are positives, the rest
// negatives; mean over all queries.
inline double detection_loss(const std::vector<double>& confidences,
                             const std::vector<bool>& matched,
                             double gamma = 2.0, double alpha = 0.25) {
    if (confidences.size() != matched.size())
        throw ShapeError("detection_loss: flag count must match confidences");
    if (confidences.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        const double p = std::clamp(confidences[i], 1e-7, 1.0 - 1e-7);
        if (matched[i])
            sum += -alpha * std::pow(1.0 - p, gamma) * std::log(p);
        else
            sum += -(1.0 - alpha) * std::pow(p, gamma) * std::log(1.0 - p);
    }
    return sum / static_cast<double>(confidences.size());
}

inline LossBreakdown total_loss(const PredictionSet& preds, const GroundTruthSet& gts,
                                const LossWeights& lw, const CostWeights& cw) {
    if (lw.map != 0.0)
        throw ConfigError("LossWeights: lambda_map must be 0 (scale-map branch absent)");
    LossBreakdown out;
    if (!gts.empty() && !preds.empty()) {
        out.assignment = hungarian(build_cost_matrix(preds, gts, cw));
        for (const auto& [pi, gi] : out.assignment.pairs)
            out.per_pair.push_back(term_losses(preds[pi], gts[gi]));
        const double n = static_cast<double>(out.per_pair.size());
        for (const auto& t : out.per_pair) {
            out.terms.depth += t.depth / n;
            out.terms.pose += t.pose / n;
            out.terms.shape += t.shape / n;
            out.terms.j3ds += t.j3ds / n;
            out.terms.j2ds += t.j2ds / n;
            out.terms.box += t.box / n;
        }
    }
    std::vector<double> confs;
    std::vector<bool> matched(preds.size(), false);
    for (const auto& p : preds) confs.push_back(p.conf);
    for (const auto& [pi, gi] : out.assignment.pairs) matched[pi] = true;
    out.det = detection_loss(confs, matched, cw.gamma_conf);

    out.total = lw.depth * out.terms.depth + lw.pose * out.terms.pose +
                lw.shape * out.terms.shape + lw.j3ds * out.terms.j3ds +
                lw.j2ds * out.terms.j2ds + lw.box * out.terms.box + lw.det * out.det;
    return out;
}

// --- JSON ------------------------------------------------------------------

inline nlohmann::json loss_weights_to_json(const LossWeights& w) {
    return {{"lambda_map", w.map},     {"lambda_depth", w.depth}, {"lambda_pose", w.pose},
            {"lambda_shape", w.shape}, {"lambda_j3ds", w.j3ds},   {"lambda_j2ds", w.j2ds},
            {"lambda_box", w.box},     {"lambda_det", w.det}};
}

inline LossWeights loss_weights_from_json(const nlohmann::json& j) {
    LossWeights w;
    w.map = j.value("lambda_map", 0.0);
    w.depth = j.value("lambda_depth", w.depth);
    w.pose = j.value("lambda_pose", w.pose);
    w.shape = j.value("lambda_shape", w.shape);
    w.j3ds = j.value("lambda_j3ds", w.j3ds);
    w.j2ds = j.value("lambda_j2ds", w.j2ds);
    w.box = j.value("lambda_box", w.box);
    w.det = j.value("lambda_det", w.det);
    if (w.map != 0.0)
        throw ConfigError("lambda_map must be 0: the scale-map encoder branch "
                          "is not part of this build");
    return w;
}

inline nlohmann::json cost_weights_to_json(const CostWeights& w) {
    return {{"alpha_conf", w.alpha_conf}, {"alpha_bbox", w.alpha_bbox},
            {"alpha_giou", w.alpha_giou}, {"alpha_kpts", w.alpha_kpts},
            {"gamma_conf", w.gamma_conf}, {"use_visibility", w.use_visibility}};
}

inline CostWeights cost_weights_from_json(const nlohmann::json& j) {
    CostWeights w;
    w.alpha_conf = j.value("alpha_conf", w.alpha_conf);
    w.alpha_bbox = j.value("alpha_bbox", w.alpha_bbox);
    w.alpha_giou = j.value("alpha_giou", w.alpha_giou);
    w.alpha_kpts = j.value("alpha_kpts", w.alpha_kpts);
    w.gamma_conf = j.value("gamma_conf", w.gamma_conf);
    w.use_visibility = j.value("use_visibility", w.use_visibility);
    return w;
}

} // namespace hmr
