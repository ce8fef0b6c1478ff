#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hmr/body_model.hpp"
#include "hmr/camera.hpp"
#include "hmr/numerics.hpp"
#include "hmr/records.hpp"
#include "hmr/rng.hpp"

namespace hmr {

enum class InteractionMode { full, igr_only, none };

struct DecoderConfig {
    std::size_t n_queries = 50;
    std::size_t d_model = 768;
    std::size_t n_heads = 8;
    std::size_t ffn_dim = 2048;
    std::size_t n_layers = 6;
    std::size_t interaction_start_layer = 0;
    std::size_t interaction_feature_dim = 768;
    InteractionMode interaction_mode = InteractionMode::full;

    void validate() const {
        if (d_model % n_heads != 0)
            throw ShapeError("DecoderConfig: d_model must be divisible by n_heads");
        if (interaction_start_layer > n_layers)
            throw ShapeError("DecoderConfig: interaction_start_layer out of range");
    }
};

// Ragged per-query interaction token groups stored as one flat sequence.
struct InteractionTokenSet {
    Matrix tokens;                          // T x d
    std::vector<std::size_t> group_offsets; // per query
    std::vector<std::size_t> group_sizes;

    std::size_t n_groups() const { return group_sizes.size(); }

    void check() const {
        std::size_t total = 0;
        for (std::size_t g = 0; g < group_sizes.size(); ++g) {
            if (group_offsets[g] != total)
                throw ShapeError("InteractionTokenSet: offsets are not contiguous");
            total += group_sizes[g];
        }
        if (total != tokens.rows)
            throw ShapeError("InteractionTokenSet: token count does not match group sizes");
    }
};

struct HumanQueryState {
    Matrix queries;               // n x d
    std::vector<NormBox> ref_boxes;
    std::size_t layer = 0;
};

// --- weights ----------------------------------------------------------------

struct MhaWeights {
    Linear q, k, v, o;
};

struct FfnWeights {
    Linear in, out;
};

// attention + residual norm + FFN + residual norm (post-norm throughout)
struct AttnBlockWeights {
    MhaWeights mha;
    LayerNormParams norm1;
    FfnWeights ffn;
    LayerNormParams norm2;
};

struct Mlp {
    Linear hidden, out;

    Matrix apply(const Matrix& x) const { return out.apply(relu(hidden.apply(x))); }
};

struct HeadWeights {
    Mlp conf, shape, pose, cam, bbox;
};

struct LayerWeights {
    MhaWeights self_attn;
    LayerNormParams self_norm;
    MhaWeights cross_attn;
    LayerNormParams cross_norm;
    FfnWeights ffn;
    LayerNormParams ffn_norm;
    AttnBlockWeights cie;
    AttnBlockWeights igr;
};

struct DecoderWeights {
    DecoderConfig config;
    Matrix query_init;              // n x d
    std::vector<NormBox> ref_init;  // n boxes
    std::vector<LayerWeights> layers;
    Linear interaction_proj;        // feature_dim -> d
    HeadWeights heads;
};

// --- core ops ---------------------------------------------------------------

inline NormBox update_ref_box(const NormBox& p, const std::array<double, 4>& delta) {
    NormBox out;
    out.cx = sigmoid(inv_sigmoid(p.cx) + delta[0]);
    out.cy = sigmoid(inv_sigmoid(p.cy) + delta[1]);
    out.w = sigmoid(inv_sigmoid(p.w) + delta[2]);
    out.h = sigmoid(inv_sigmoid(p.h) + delta[3]);
    return out.clamped();
}

// sinusoidal encoding of the box center; first half encodes cx, second cy
inline std::vector<double> pos_encode_center(const NormBox& box, std::size_t dim) {
    std::vector<double> out(dim, 0.0);
    const std::size_t half = dim / 2;
    for (std::size_t d = 0; d < dim; ++d) {
        const double coord = (d < half) ? box.cx : box.cy;
        const std::size_t i = (d < half) ? d : d - half;
        const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i / 2) /
                                                   static_cast<double>(half));
        out[d] = (i % 2 == 0) ? std::sin(coord * 6.283185307179586477 * freq)
                              : std::cos(coord * 6.283185307179586477 * freq);
    }
    return out;
}

inline Matrix add_row_vector(const Matrix& x, const std::vector<double>& v) {
    Matrix out = x;
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) out.at(i, j) += v[j];
    return out;
}

// Multi-head attention with a boolean mask. Disallowed positions contribute
// nothing to either the softmax or the weighted sum, so cross-group
// perturbations cannot change an output row even at the bit level.
inline Matrix multi_head_attention(const Matrix& q_in, const Matrix& k_in, const Matrix& v_in,
                                   const MhaWeights& w, const AttnMask& mask,
                                   std::size_t n_heads) {
    const std::size_t d = w.q.out_dim();
    if (d % n_heads != 0) throw ShapeError("multi_head_attention: head split mismatch");
    const std::size_t dh = d / n_heads;
    const Matrix Q = w.q.apply(q_in);
    const Matrix K = w.k.apply(k_in);
    const Matrix V = w.v.apply(v_in);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Matrix concat(q_in.rows, d);
    for (std::size_t h = 0; h < n_heads; ++h) {
        const std::size_t off = h * dh;
        Matrix scores(Q.rows, K.rows);
        for (std::size_t i = 0; i < Q.rows; ++i)
            for (std::size_t j = 0; j < K.rows; ++j) {
                if (!mask.at(i, j)) continue;
                double s = 0.0;
                for (std::size_t c = 0; c < dh; ++c)
                    s += Q.at(i, off + c) * K.at(j, off + c);
                scores.at(i, j) = s * scale;
            }
        const Matrix attn = masked_softmax(scores, mask);
        for (std::size_t i = 0; i < Q.rows; ++i)
            for (std::size_t j = 0; j < K.rows; ++j) {
                if (!mask.at(i, j)) continue;
                const double a = attn.at(i, j);
                for (std::size_t c = 0; c < dh; ++c)
                    concat.at(i, off + c) += a * V.at(j, off + c);
            }
    }
    return w.o.apply(concat);
}

inline Matrix ffn_forward(const Matrix& x, const FfnWeights& w) {
    return w.out.apply(relu(w.in.apply(x)));
}

// For query i: all human boxes except i in index order, then all object boxes.
inline std::vector<std::pair<std::size_t, NormBox>> enumerate_pairs(
    const std::vector<NormBox>& human_boxes, const std::vector<NormBox>& object_boxes) {
    std::vector<std::pair<std::size_t, NormBox>> out;
    const std::size_t n = human_boxes.size();
    if (n + object_boxes.size() >= 1)
        out.reserve(n * (n + object_boxes.size() - 1));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) out.emplace_back(i, human_boxes[j]);
        for (const auto& ob : object_boxes) out.emplace_back(i, ob);
    }
    return out;
}

// Block-diagonal self-attention mask over the flattened token sequence.
inline AttnMask block_diagonal_mask(const InteractionTokenSet& tokens) {
    const std::size_t T = tokens.tokens.rows;
    AttnMask mask(T, T, false);
    for (std::size_t g = 0; g < tokens.n_groups(); ++g) {
        const std::size_t off = tokens.group_offsets[g], sz = tokens.group_sizes[g];
        for (std::size_t i = 0; i < sz; ++i)
            for (std::size_t j = 0; j < sz; ++j)
                mask.set(off + i, off + j, true);
    }
    return mask;
}

// Cross-attention mask: query g attends only to its own token segment.
inline AttnMask group_cross_mask(const InteractionTokenSet& tokens) {
    const std::size_t T = tokens.tokens.rows;
    AttnMask mask(tokens.n_groups(), T, false);
    for (std::size_t g = 0; g < tokens.n_groups(); ++g)
        for (std::size_t j = 0; j < tokens.group_sizes[g]; ++j)
            mask.set(g, tokens.group_offsets[g] + j, true);
    return mask;
}

// Self-attention over each query's token group, realized over the flat
// sequence with the block-diagonal mask. Grouping is preserved.
inline InteractionTokenSet contextual_interaction_encoder(const InteractionTokenSet& tokens,
                                                          const AttnBlockWeights& w,
                                                          std::size_t n_heads,
                                                          const AttnMask* mask_override = nullptr) {
    tokens.check();
    InteractionTokenSet out = tokens;
    if (tokens.tokens.rows == 0) return out;
    const AttnMask mask = mask_override ? *mask_override : block_diagonal_mask(tokens);
    Matrix x = tokens.tokens;
    x = layer_norm(add(x, multi_head_attention(x, x, x, w.mha, mask, n_heads)), w.norm1);
    x = layer_norm(add(x, ffn_forward(x, w.ffn)), w.norm2);
    out.tokens = std::move(x);
    return out;
}

// Each query cross-attends to its own token group; queries with empty groups
// pass through unchanged (attention, norms and FFN all skipped).
inline Matrix interaction_guided_refiner(const Matrix& queries, const InteractionTokenSet& tokens,
                                         const AttnBlockWeights& w, std::size_t n_heads,
                                         const AttnMask* mask_override = nullptr) {
    tokens.check();
    if (tokens.n_groups() != queries.rows)
        throw ShapeError("interaction_guided_refiner: group count must equal query count");

    std::vector<std::size_t> active;
    for (std::size_t g = 0; g < tokens.n_groups(); ++g)
        if (tokens.group_sizes[g] > 0) active.push_back(g);
    Matrix out = queries;
    if (active.empty()) return out;

    Matrix sub(active.size(), queries.cols);
    for (std::size_t i = 0; i < active.size(); ++i)
        for (std::size_t j = 0; j < queries.cols; ++j)
            sub.at(i, j) = queries.at(active[i], j);

    AttnMask mask(active.size(), tokens.tokens.rows, false);
    if (mask_override) {
        // override rows are indexed by query; gather the active rows
        for (std::size_t i = 0; i < active.size(); ++i)
            for (std::size_t j = 0; j < tokens.tokens.rows; ++j)
                mask.set(i, j, mask_override->at(active[i], j));
    } else {
        for (std::size_t i = 0; i < active.size(); ++i) {
            const std::size_t g = active[i];
            for (std::size_t j = 0; j < tokens.group_sizes[g]; ++j)
                mask.set(i, tokens.group_offsets[g] + j, true);
        }
    }

    Matrix x = sub;
    x = layer_norm(add(x, multi_head_attention(x, tokens.tokens, tokens.tokens,
                                               w.mha, mask, n_heads)), w.norm1);
    x = layer_norm(add(x, ffn_forward(x, w.ffn)), w.norm2);
    for (std::size_t i = 0; i < active.size(); ++i)
        for (std::size_t j = 0; j < queries.cols; ++j)
            out.at(active[i], j) = x.at(i, j);
    return out;
}

// Source of pairwise interaction features for (human box, partner box).
using PairFeatureFn = std::function<std::vector<double>(const NormBox&, const NormBox&)>;

// Builds the projected, grouped token set for one sample.
inline InteractionTokenSet build_interaction_tokens(const std::vector<NormBox>& human_boxes,
                                                    const std::vector<NormBox>& object_boxes,
                                                    const PairFeatureFn& provider,
                                                    const Linear& proj) {
    const auto pairs = enumerate_pairs(human_boxes, object_boxes);
    const std::size_t n = human_boxes.size();
    const std::size_t group = (n + object_boxes.size() >= 1) ? n + object_boxes.size() - 1 : 0;

    InteractionTokenSet set;
    set.group_offsets.resize(n);
    set.group_sizes.assign(n, group);
    for (std::size_t i = 0; i < n; ++i) set.group_offsets[i] = i * group;

    Matrix raw(pairs.size(), proj.in_dim());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const std::vector<double> f = provider(human_boxes[pairs[p].first], pairs[p].second);
        if (f.size() != proj.in_dim())
            throw ShapeError("build_interaction_tokens: provider feature dim mismatch");
        for (std::size_t c = 0; c < f.size(); ++c) raw.at(p, c) = f[c];
    }
    set.tokens = (pairs.empty()) ? Matrix(0, proj.out_dim()) : proj.apply(raw);
    set.check();
    return set;
}

struct LayerOutput {
    HumanQueryState state;
    std::vector<NormBox> predicted_boxes;
};

inline std::array<double, 4> bbox_delta(const Mlp& head, const Matrix& queries, std::size_t row) {
    Matrix one(1, queries.cols);
    for (std::size_t j = 0; j < queries.cols; ++j) one.at(0, j) = queries.at(row, j);
    const Matrix d = head.apply(one);
    return {d.at(0, 0), d.at(0, 1), d.at(0, 2), d.at(0, 3)};
}

// One decoder layer: self-attention, cross-attention to image tokens, FFN,
// reference-box update, then interaction contextualization and query
// refinement when the layer is at or past interaction_start_layer.
inline LayerOutput decoder_layer(const HumanQueryState& state, const Matrix& image_tokens,
                                 const PairFeatureFn& provider,
                                 const std::vector<NormBox>& object_boxes,
                                 const LayerWeights& lw, const DecoderWeights& w) {
    const DecoderConfig& cfg = w.config;
    const std::size_t n = state.queries.rows;
    if (image_tokens.cols != cfg.d_model)
        throw ShapeError("decoder_layer: image token dim must equal d_model");

    Matrix pe(n, cfg.d_model);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> v = pos_encode_center(state.ref_boxes[i], cfg.d_model);
        for (std::size_t j = 0; j < cfg.d_model; ++j) pe.at(i, j) = v[j];
    }

    Matrix x = state.queries;
    const AttnMask self_mask(n, n, true);
    const Matrix qk = add(x, pe);
    x = layer_norm(add(x, multi_head_attention(qk, qk, x, lw.self_attn, self_mask, cfg.n_heads)),
                   lw.self_norm);

    const AttnMask cross_mask(n, image_tokens.rows, true);
    x = layer_norm(add(x, multi_head_attention(add(x, pe), image_tokens, image_tokens,
                                               lw.cross_attn, cross_mask, cfg.n_heads)),
                   lw.cross_norm);
    x = layer_norm(add(x, ffn_forward(x, lw.ffn)), lw.ffn_norm);

    LayerOutput out;
    out.predicted_boxes.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.predicted_boxes[i] = update_ref_box(state.ref_boxes[i], bbox_delta(w.heads.bbox, x, i));

    const bool interact = cfg.interaction_mode != InteractionMode::none &&
                          state.layer >= cfg.interaction_start_layer;
    if (interact) {
        InteractionTokenSet tokens = build_interaction_tokens(out.predicted_boxes, object_boxes,
                                                              provider, w.interaction_proj);
        if (cfg.interaction_mode == InteractionMode::full)
            tokens = contextual_interaction_encoder(tokens, lw.cie, cfg.n_heads);
        x = interaction_guided_refiner(x, tokens, lw.igr, cfg.n_heads);
    }

    out.state.queries = std::move(x);
    out.state.ref_boxes = out.predicted_boxes;
    out.state.layer = state.layer + 1;
    return out;
}

struct DecoderForward {
    HumanQueryState final_state;
    std::vector<LayerOutput> per_layer;
};

inline DecoderForward decoder_forward(const DecoderWeights& w, const Matrix& image_tokens,
                                      const PairFeatureFn& provider,
                                      const std::vector<NormBox>& object_boxes) {
    w.config.validate();
    HumanQueryState state;
    state.queries = w.query_init;
    state.ref_boxes = w.ref_init;
    state.layer = 0;

    DecoderForward out;
    for (std::size_t l = 0; l < w.config.n_layers; ++l) {
        LayerOutput lo = decoder_layer(state, image_tokens, provider, object_boxes,
                                       w.layers[l], w);
        state = lo.state;
        out.per_layer.push_back(std::move(lo));
    }
    out.final_state = state;
    return out;
}

inline double softplus(double x) {
    return (x > 30.0) ? x : std::log1p(std::exp(x));
}

// Regression heads applied per final-layer query, with derived quantities
// (depth, joints, vertices, keypoints, box) computed through the body model
// and camera conventions.
inline PredictionSet regress(const Matrix& queries, const DecoderWeights& w,
                             const BodyModelSpec& body, const CameraConventions& conv) {
    const std::size_t K = body.joint_count, B = body.shape_count;
    if (w.heads.pose.out.out_dim() != K * 3 || w.heads.shape.out.out_dim() != B)
        throw ShapeError("regress: head dims do not match the body model");

    const Matrix conf = w.heads.conf.apply(queries);
    const Matrix shape = w.heads.shape.apply(queries);
    const Matrix pose = w.heads.pose.apply(queries);
    const Matrix cam = w.heads.cam.apply(queries);

    PredictionSet preds(queries.rows);
    for (std::size_t i = 0; i < queries.rows; ++i) {
        PersonPrediction& p = preds[i];
        p.conf = sigmoid(conf.at(i, 0));

        std::vector<double> beta(B);
        for (std::size_t b = 0; b < B; ++b) beta[b] = shape.at(i, b);
        std::vector<std::array<double, 3>> theta(K);
        for (std::size_t k = 0; k < K; ++k)
            theta[k] = {pose.at(i, k * 3), pose.at(i, k * 3 + 1), pose.at(i, k * 3 + 2)};
        p.params = BodyParams(std::move(theta), std::move(beta));

        p.cam.s = softplus(cam.at(i, 0)) + 1e-3;
        p.cam.t_x = cam.at(i, 1);
        p.cam.t_y = cam.at(i, 2);
        p.depth = scale_to_depth(p.cam.s, conv);

        const ForwardResultBody fb = forward(body, p.params);
        p.kpts2d = project(fb.joints, p.cam);
        p.bbox = box_from_points(p.kpts2d);
        p.joints3d = fb.joints;
        p.vertices = fb.vertices;
        for (std::size_t r = 0; r < p.joints3d.rows; ++r) {
            p.joints3d.at(r, 0) += p.cam.t_x;
            p.joints3d.at(r, 1) += p.cam.t_y;
            p.joints3d.at(r, 2) += p.depth;
        }
        for (std::size_t r = 0; r < p.vertices.rows; ++r) {
            p.vertices.at(r, 0) += p.cam.t_x;
            p.vertices.at(r, 1) += p.cam.t_y;
            p.vertices.at(r, 2) += p.depth;
        }
    }
    return preds;
}

// --- initialization ---------------------------------------------------------

namespace detail {

inline void init_linear(Linear& lin, std::size_t in_dim, std::size_t out_dim, Rng& rng) {
    lin = Linear(in_dim, out_dim);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (double& v : lin.weight.data) v = rng.uniform(-bound, bound);
    for (double& v : lin.bias) v = rng.uniform(-bound, bound);
}

inline void init_mha(MhaWeights& w, std::size_t d, Rng& rng) {
    init_linear(w.q, d, d, rng);
    init_linear(w.k, d, d, rng);
    init_linear(w.v, d, d, rng);
    init_linear(w.o, d, d, rng);
}

inline void init_block(AttnBlockWeights& w, std::size_t d, std::size_t ffn, Rng& rng) {
    init_mha(w.mha, d, rng);
    w.norm1 = LayerNormParams(d);
    init_linear(w.ffn.in, d, ffn, rng);
    init_linear(w.ffn.out, ffn, d, rng);
    w.norm2 = LayerNormParams(d);
}

inline void init_mlp(Mlp& m, std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) {
    init_linear(m.hidden, in, hidden, rng);
    init_linear(m.out, hidden, out, rng);
}

} // namespace detail

// Deterministic initialization; the bbox head's final layer is zeroed so the
// first reference-box update is the identity.
inline DecoderWeights init_weights(const DecoderConfig& cfg, std::uint64_t seed,
                                   std::size_t joint_count, std::size_t shape_count) {
    cfg.validate();
    Rng rng(seed ^ 0x5eedull);
    DecoderWeights w;
    w.config = cfg;
    const std::size_t d = cfg.d_model;

    w.query_init = Matrix(cfg.n_queries, d);
    const double qb = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& v : w.query_init.data) v = rng.uniform(-qb, qb);

    w.ref_init.resize(cfg.n_queries);
    const std::size_t grid = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(cfg.n_queries))));
    for (std::size_t i = 0; i < cfg.n_queries; ++i) {
        NormBox b;
        b.cx = (static_cast<double>(i % grid) + 0.5) / static_cast<double>(grid);
        b.cy = (static_cast<double>(i / grid) + 0.5) / static_cast<double>(grid);
        b.w = 0.2;
        b.h = 0.2;
        w.ref_init[i] = b;
    }

    w.layers.resize(cfg.n_layers);
    for (auto& lw : w.layers) {
        detail::init_mha(lw.self_attn, d, rng);
        lw.self_norm = LayerNormParams(d);
        detail::init_mha(lw.cross_attn, d, rng);
        lw.cross_norm = LayerNormParams(d);
        detail::init_linear(lw.ffn.in, d, cfg.ffn_dim, rng);
        detail::init_linear(lw.ffn.out, cfg.ffn_dim, d, rng);
        lw.ffn_norm = LayerNormParams(d);
        detail::init_block(lw.cie, d, cfg.ffn_dim, rng);
        detail::init_block(lw.igr, d, cfg.ffn_dim, rng);
    }

    detail::init_linear(w.interaction_proj, cfg.interaction_feature_dim, d, rng);

    detail::init_mlp(w.heads.conf, d, d, 1, rng);
    detail::init_mlp(w.heads.shape, d, d, shape_count, rng);
    detail::init_mlp(w.heads.pose, d, d, joint_count * 3, rng);
    detail::init_mlp(w.heads.cam, d, d, 3, rng);
    detail::init_mlp(w.heads.bbox, d, d, 4, rng);
    for (double& v : w.heads.bbox.out.weight.data) v = 0.0;
    for (double& v : w.heads.bbox.out.bias) v = 0.0;
    return w;
}

// --- checkpoint serialization -----------------------------------------------

namespace detail {

inline nlohmann::json linear_to_json(const Linear& l) {
    return {{"weight", matrix_to_json(l.weight)}, {"bias", l.bias}};
}

inline Linear linear_from_json(const nlohmann::json& j, const std::string& path) {
    Linear l;
    l.weight = matrix_from_json(j.at("weight"), path + ".weight");
    l.bias = j.at("bias").get<std::vector<double>>();
    if (l.bias.size() != l.weight.cols)
        throw ModelError(path + ".bias: length must equal weight cols");
    return l;
}

inline nlohmann::json mha_to_json(const MhaWeights& w) {
    return {{"q", linear_to_json(w.q)}, {"k", linear_to_json(w.k)},
            {"v", linear_to_json(w.v)}, {"o", linear_to_json(w.o)}};
}

inline MhaWeights mha_from_json(const nlohmann::json& j, const std::string& path) {
    MhaWeights w;
    w.q = linear_from_json(j.at("q"), path + ".q");
    w.k = linear_from_json(j.at("k"), path + ".k");
    w.v = linear_from_json(j.at("v"), path + ".v");
    w.o = linear_from_json(j.at("o"), path + ".o");
    return w;
}

inline nlohmann::json norm_to_json(const LayerNormParams& p) {
    return {{"gain", p.gain}, {"bias", p.bias}, {"eps", p.eps}};
}

inline LayerNormParams norm_from_json(const nlohmann::json& j) {
    LayerNormParams p;
    p.gain = j.at("gain").get<std::vector<double>>();
    p.bias = j.at("bias").get<std::vector<double>>();
    p.eps = j.at("eps").get<double>();
    return p;
}

inline nlohmann::json block_to_json(const AttnBlockWeights& w) {
    return {{"mha", mha_to_json(w.mha)},
            {"norm1", norm_to_json(w.norm1)},
            {"ffn_in", linear_to_json(w.ffn.in)},
            {"ffn_out", linear_to_json(w.ffn.out)},
            {"norm2", norm_to_json(w.norm2)}};
}

inline AttnBlockWeights block_from_json(const nlohmann::json& j, const std::string& path) {
    AttnBlockWeights w;
    w.mha = mha_from_json(j.at("mha"), path + ".mha");
    w.norm1 = norm_from_json(j.at("norm1"));
    w.ffn.in = linear_from_json(j.at("ffn_in"), path + ".ffn_in");
    w.ffn.out = linear_from_json(j.at("ffn_out"), path + ".ffn_out");
    w.norm2 = norm_from_json(j.at("norm2"));
    return w;
}

inline nlohmann::json mlp_to_json(const Mlp& m) {
    return {{"hidden", linear_to_json(m.hidden)}, {"out", linear_to_json(m.out)}};
}

inline Mlp mlp_from_json(const nlohmann::json& j, const std::string& path) {
    Mlp m;
    m.hidden = linear_from_json(j.at("hidden"), path + ".hidden");
    m.out = linear_from_json(j.at("out"), path + ".out");
    return m;
}

} // namespace detail

inline nlohmann::json decoder_config_to_json(const DecoderConfig& c) {
    const char* mode = c.interaction_mode == InteractionMode::full ? "full"
                     : c.interaction_mode == InteractionMode::igr_only ? "igr_only" : "none";
    return {{"n_queries", c.n_queries},       {"d_model", c.d_model},
            {"n_heads", c.n_heads},           {"ffn_dim", c.ffn_dim},
            {"n_layers", c.n_layers},         {"interaction_start_layer", c.interaction_start_layer},
            {"interaction_feature_dim", c.interaction_feature_dim},
            {"interaction_mode", mode}};
}

inline DecoderConfig decoder_config_from_json(const nlohmann::json& j) {
    DecoderConfig c;
    c.n_queries = j.value("n_queries", c.n_queries);
    c.d_model = j.value("d_model", c.d_model);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
    c.n_layers = j.value("n_layers", c.n_layers);
    c.interaction_start_layer = j.value("interaction_start_layer", c.interaction_start_layer);
    c.interaction_feature_dim = j.value("interaction_feature_dim", c.interaction_feature_dim);
    const std::string mode = j.value("interaction_mode", std::string("full"));
    if (mode == "full") c.interaction_mode = InteractionMode::full;
    else if (mode == "igr_only") c.interaction_mode = InteractionMode::igr_only;
    else if (mode == "none") c.interaction_mode = InteractionMode::none;
    else throw ModelError("interaction_mode: unknown value '" + mode + "'");
    c.validate();
    return c;
}

inline nlohmann::json checkpoint_to_json(const DecoderWeights& w) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["config"] = decoder_config_to_json(w.config);
    j["query_init"] = matrix_to_json(w.query_init);
    j["ref_init"] = nlohmann::json::array();
    for (const auto& b : w.ref_init)
        j["ref_init"].push_back({b.cx, b.cy, b.w, b.h});
    j["layers"] = nlohmann::json::array();
    for (const auto& lw : w.layers) {
        j["layers"].push_back({{"self_attn", detail::mha_to_json(lw.self_attn)},
                               {"self_norm", detail::norm_to_json(lw.self_norm)},
                               {"cross_attn", detail::mha_to_json(lw.cross_attn)},
                               {"cross_norm", detail::norm_to_json(lw.cross_norm)},
                               {"ffn_in", detail::linear_to_json(lw.ffn.in)},
                               {"ffn_out", detail::linear_to_json(lw.ffn.out)},
                               {"ffn_norm", detail::norm_to_json(lw.ffn_norm)},
                               {"cie", detail::block_to_json(lw.cie)},
                               {"igr", detail::block_to_json(lw.igr)}});
    }
    j["interaction_proj"] = detail::linear_to_json(w.interaction_proj);
    j["heads"] = {{"conf", detail::mlp_to_json(w.heads.conf)},
                  {"shape", detail::mlp_to_json(w.heads.shape)},
                  {"pose", detail::mlp_to_json(w.heads.pose)},
                  {"cam", detail::mlp_to_json(w.heads.cam)},
                  {"bbox", detail::mlp_to_json(w.heads.bbox)}};
    return j;
}

inline DecoderWeights checkpoint_from_json(const nlohmann::json& j) {
    if (j.value("format_version", 0) != 1)
        throw ModelError("checkpoint: unsupported format_version");
    DecoderWeights w;
    w.config = decoder_config_from_json(j.at("config"));
    w.query_init = matrix_from_json(j.at("query_init"), "query_init");
    for (const auto& b : j.at("ref_init")) {
        NormBox nb;
        nb.cx = b.at(0).get<double>();
        nb.cy = b.at(1).get<double>();
        nb.w = b.at(2).get<double>();
        nb.h = b.at(3).get<double>();
        w.ref_init.push_back(nb);
    }
    std::size_t li = 0;
    for (const auto& lj : j.at("layers")) {
        const std::string path = "layers[" + std::to_string(li++) + "]";
        LayerWeights lw;
        lw.self_attn = detail::mha_from_json(lj.at("self_attn"), path + ".self_attn");
        lw.self_norm = detail::norm_from_json(lj.at("self_norm"));
        lw.cross_attn = detail::mha_from_json(lj.at("cross_attn"), path + ".cross_attn");
        lw.cross_norm = detail::norm_from_json(lj.at("cross_norm"));
        lw.ffn.in = detail::linear_from_json(lj.at("ffn_in"), path + ".ffn_in");
        lw.ffn.out = detail::linear_from_json(lj.at("ffn_out"), path + ".ffn_out");
        lw.ffn_norm = detail::norm_from_json(lj.at("ffn_norm"));
        lw.cie = detail::block_from_json(lj.at("cie"), path + ".cie");
        lw.igr = detail::block_from_json(lj.at("igr"), path + ".igr");
        w.layers.push_back(std::move(lw));
    }
    w.interaction_proj = detail::linear_from_json(j.at("interaction_proj"), "interaction_proj");
    w.heads.conf = detail::mlp_from_json(j.at("heads").at("conf"), "heads.conf");
    w.heads.shape = detail::mlp_from_json(j.at("heads").at("shape"), "heads.shape");
    w.heads.pose = detail::mlp_from_json(j.at("heads").at("pose"), "heads.pose");
    w.heads.cam = detail::mlp_from_json(j.at("heads").at("cam"), "heads.cam");
    w.heads.bbox = detail::mlp_from_json(j.at("heads").at("bbox"), "heads.bbox");
    if (w.layers.size() != w.config.n_layers)
        throw ModelError("checkpoint: layer count does not match config");
    return w;
}

} // namespace hmr
