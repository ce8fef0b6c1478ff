#pragma once

#include <cmath>
#include <cstdlib>
#include <vector>

#include "hmr/body_model.hpp"
#include "hmr/decoder.hpp"
#include "hmr/matching.hpp"
#include "hmr/metrics.hpp"
#include "hmr/rng.hpp"

// Oracle suites shared between selftest() and the acceptance tests. Each
// check is independent of the implementation path it verifies (brute force,
// per-group loops, direct geometric constructions).

namespace hmr::checks {

inline bool hungarian_matches_brute_force(std::uint64_t seed, std::size_t instances) {
    Rng rng(seed);
    for (std::size_t it = 0; it < instances; ++it) {
        const std::size_t np = 1 + rng.index(7);
        const std::size_t ng = 1 + rng.index(7);
        Matrix cost(np, ng);
        for (double& v : cost.data) v = rng.uniform(-5.0, 5.0);
        const CostMatrix cm = CostMatrix::from_total(cost);
        const Assignment h = hungarian(cm);
        const Assignment b = brute_force_assign(cm);
        if (std::abs(h.total_cost - b.total_cost) > 1e-9) return false;
        if (h.pairs != b.pairs) return false;
    }
    // exact-tie instance: all-equal costs must take the lexicographic minimum
    Matrix flat(3, 3);
    for (double& v : flat.data) v = 1.0;
    const Assignment h = hungarian(CostMatrix::from_total(flat));
    const Assignment b = brute_force_assign(CostMatrix::from_total(flat));
    return h.pairs == b.pairs;
}

struct RaggedBatch {
    InteractionTokenSet tokens;
    Matrix queries;  // one query per group
    AttnBlockWeights cie;
    AttnBlockWeights igr;
    std::size_t n_heads = 2;
    std::size_t d_model = 16;
};

// Random ragged batch: n queries per sample, per-sample object counts give
// group sizes n + r - 1 (exactly the flattening used for batched training).
inline RaggedBatch make_ragged_batch(Rng& rng, std::size_t n_per_sample,
                                     const std::vector<std::size_t>& objects_per_sample) {
    RaggedBatch batch;
    const std::size_t d = batch.d_model;
    detail::init_block(batch.cie, d, 2 * d, rng);
    detail::init_block(batch.igr, d, 2 * d, rng);

    std::size_t total = 0;
    for (std::size_t r : objects_per_sample) {
        const std::size_t group = n_per_sample + r - 1;
        for (std::size_t q = 0; q < n_per_sample; ++q) {
            batch.tokens.group_offsets.push_back(total);
            batch.tokens.group_sizes.push_back(group);
            total += group;
        }
    }
    batch.tokens.tokens = Matrix(total, d);
    for (double& v : batch.tokens.tokens.data) v = rng.uniform(-1.0, 1.0);
    batch.queries = Matrix(batch.tokens.n_groups(), d);
    for (double& v : batch.queries.data) v = rng.uniform(-1.0, 1.0);
    batch.tokens.check();
    return batch;
}

inline RaggedBatch random_ragged_batch(Rng& rng) {
    const std::size_t n = 1 + rng.index(6);
    const std::size_t samples = 1 + rng.index(3);
    std::vector<std::size_t> objects;
    for (std::size_t s = 0; s < samples; ++s) {
        std::size_t r = rng.index(6);
        if (n == 1 && r == 0) r = 1;  // keep at least one non-empty group around
        objects.push_back(r);
    }
    return make_ragged_batch(rng, n, objects);
}

// Per-group unmasked oracle for the interaction encoder: runs every group
// through the same weights as a standalone dense sequence.
inline Matrix cie_group_loop_oracle(const RaggedBatch& batch) {
    Matrix out = batch.tokens.tokens;
    for (std::size_t g = 0; g < batch.tokens.n_groups(); ++g) {
        const std::size_t off = batch.tokens.group_offsets[g];
        const std::size_t sz = batch.tokens.group_sizes[g];
        if (sz == 0) continue;
        InteractionTokenSet single;
        single.group_offsets = {0};
        single.group_sizes = {sz};
        single.tokens = Matrix(sz, batch.d_model);
        for (std::size_t i = 0; i < sz; ++i)
            for (std::size_t j = 0; j < batch.d_model; ++j)
                single.tokens.at(i, j) = batch.tokens.tokens.at(off + i, j);
        const InteractionTokenSet res =
            contextual_interaction_encoder(single, batch.cie, batch.n_heads);
        for (std::size_t i = 0; i < sz; ++i)
            for (std::size_t j = 0; j < batch.d_model; ++j)
                out.at(off + i, j) = res.tokens.at(i, j);
    }
    return out;
}

// Per-query oracle for the refiner: each query against only its own group.
inline Matrix igr_group_loop_oracle(const RaggedBatch& batch) {
    Matrix out = batch.queries;
    for (std::size_t g = 0; g < batch.tokens.n_groups(); ++g) {
        const std::size_t sz = batch.tokens.group_sizes[g];
        if (sz == 0) continue;
        InteractionTokenSet single;
        single.group_offsets = {0};
        single.group_sizes = {sz};
        single.tokens = Matrix(sz, batch.d_model);
        const std::size_t off = batch.tokens.group_offsets[g];
        for (std::size_t i = 0; i < sz; ++i)
            for (std::size_t j = 0; j < batch.d_model; ++j)
                single.tokens.at(i, j) = batch.tokens.tokens.at(off + i, j);
        Matrix q(1, batch.d_model);
        for (std::size_t j = 0; j < batch.d_model; ++j) q.at(0, j) = batch.queries.at(g, j);
        const Matrix res = interaction_guided_refiner(q, single, batch.igr, batch.n_heads);
        for (std::size_t j = 0; j < batch.d_model; ++j) out.at(g, j) = res.at(0, j);
    }
    return out;
}

// Perturbing one token must leave every other group's CIE and IGR outputs
// bit-identical.
inline bool isolation_holds_for(const RaggedBatch& batch, std::size_t token_index,
                                bool inject_mask_fault) {
    std::size_t owner = 0;
    for (std::size_t g = 0; g < batch.tokens.n_groups(); ++g) {
        const std::size_t off = batch.tokens.group_offsets[g];
        if (token_index >= off && token_index < off + batch.tokens.group_sizes[g]) owner = g;
    }

    AttnMask mask = block_diagonal_mask(batch.tokens);
    if (inject_mask_fault && batch.tokens.n_groups() >= 2) {
        // leak one cross-group attention edge: row 0 may now read the
        // perturbed token even when it belongs to another group
        mask.set(0, token_index, true);
    }

    const InteractionTokenSet base =
        contextual_interaction_encoder(batch.tokens, batch.cie, batch.n_heads, &mask);
    const Matrix base_igr =
        interaction_guided_refiner(batch.queries, base, batch.igr, batch.n_heads);

    RaggedBatch pert = batch;
    pert.tokens.tokens.data[token_index * batch.d_model] += 0.5;
    const InteractionTokenSet pert_cie =
        contextual_interaction_encoder(pert.tokens, pert.cie, pert.n_heads, &mask);
    const Matrix pert_igr =
        interaction_guided_refiner(pert.queries, pert_cie, pert.igr, pert.n_heads);

    for (std::size_t g = 0; g < batch.tokens.n_groups(); ++g) {
        if (g == owner) continue;
        const std::size_t off = batch.tokens.group_offsets[g];
        for (std::size_t i = 0; i < batch.tokens.group_sizes[g]; ++i)
            for (std::size_t j = 0; j < batch.d_model; ++j)
                if (base.tokens.at(off + i, j) != pert_cie.tokens.at(off + i, j)) return false;
        for (std::size_t j = 0; j < batch.d_model; ++j)
            if (base_igr.at(g, j) != pert_igr.at(g, j)) return false;
    }
    return true;
}

inline bool isolation_holds(std::uint64_t seed, std::size_t batches, bool inject_fault = false) {
    Rng rng(seed);
    if (inject_fault) {
        // negative control: perturb the first token of group 1 while a leaked
        // mask bit lets group 0 read it; the isolation check must now fail
        RaggedBatch batch = make_ragged_batch(rng, 2, {2});
        if (!isolation_holds_for(batch, batch.tokens.group_offsets[1], true)) return false;
    }
    for (std::size_t it = 0; it < batches; ++it) {
        const RaggedBatch batch = random_ragged_batch(rng);
        if (batch.tokens.tokens.rows == 0) continue;
        const std::size_t tok = rng.index(batch.tokens.tokens.rows);
        if (!isolation_holds_for(batch, tok, false)) return false;
    }
    return true;
}

inline bool batch_equivalence_holds(std::uint64_t seed, std::size_t batches, double tol = 1e-9) {
    Rng rng(seed);
    for (std::size_t it = 0; it < batches; ++it) {
        const RaggedBatch batch = random_ragged_batch(rng);
        const InteractionTokenSet flat =
            contextual_interaction_encoder(batch.tokens, batch.cie, batch.n_heads);
        const Matrix oracle = cie_group_loop_oracle(batch);
        for (std::size_t i = 0; i < flat.tokens.data.size(); ++i)
            if (std::abs(flat.tokens.data[i] - oracle.data[i]) > tol) return false;

        RaggedBatch after = batch;
        after.tokens = flat;
        const Matrix refined =
            interaction_guided_refiner(after.queries, after.tokens, after.igr, after.n_heads);
        const Matrix igr_oracle = igr_group_loop_oracle(after);
        for (std::size_t i = 0; i < refined.data.size(); ++i)
            if (std::abs(refined.data[i] - igr_oracle.data[i]) > tol) return false;
    }
    return true;
}

inline Matrix random_points(Rng& rng, std::size_t n) {
    Matrix m(n, 3);
    for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
    return m;
}

inline SimilarityTransform random_similarity(Rng& rng) {
    SimilarityTransform t;
    t.scale = rng.uniform(0.5, 2.0);
    t.rotation = rodrigues({rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)});
    t.translation = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    return t;
}

inline bool procrustes_invariance_holds(std::uint64_t seed, std::size_t trials) {
    Rng rng(seed);
    for (std::size_t it = 0; it < trials; ++it) {
        const Matrix gt = random_points(rng, 6 + rng.index(10));
        const Matrix pred = random_similarity(rng).apply(gt);
        if (pa_mpjpe(pred, gt) > 1e-6) return false;
        const Matrix noisy = random_points(rng, gt.rows);
        if (pa_mpjpe(noisy, gt) > mpjpe(noisy, gt) + 1e-9) return false;
    }
    return true;
}

inline bool body_rigid_invariance_holds(std::uint64_t seed, std::size_t trials) {
    Rng rng(seed);
    const BodyModelSpec body = make_toy_model(seed, 40, 6, 3);
    for (std::size_t it = 0; it < trials; ++it) {
        BodyParams params = BodyParams::rest(body.joint_count, body.shape_count);
        for (auto& aa : params.pose)
            for (int c = 0; c < 3; ++c) aa[c] = rng.uniform(-0.6, 0.6);
        const ForwardResultBody base = forward(body, params);

        const std::array<double, 3> root_aa{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                                            rng.uniform(-2.0, 2.0)};
        BodyParams rotated = params;
        // compose the rigid motion onto the root rotation
        const auto r_new = rodrigues(root_aa);
        const auto r_old = rodrigues(params.pose[0]);
        std::array<double, 9> composed{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k)
                    composed[i * 3 + j] += r_new[i * 3 + k] * r_old[k * 3 + j];
        // back to axis-angle via the matrix log
        const double tr = composed[0] + composed[4] + composed[8];
        const double angle = std::acos(std::clamp((tr - 1.0) / 2.0, -1.0, 1.0));
        std::array<double, 3> axis{composed[7] - composed[5], composed[2] - composed[6],
                                   composed[3] - composed[1]};
        const double an = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
        if (an < 1e-9 || angle < 1e-9) continue;  // skip near-degenerate draws
        rotated.pose[0] = {axis[0] / an * angle, axis[1] / an * angle, axis[2] / an * angle};

        const ForwardResultBody moved = forward(body, rotated);
        // oracle: rotate the base output about the root joint
        const std::array<double, 3> pivot{base.joints.at(0, 0), base.joints.at(0, 1),
                                          base.joints.at(0, 2)};
        for (std::size_t v = 0; v < base.vertices.rows; ++v) {
            std::array<double, 3> p{base.vertices.at(v, 0) - pivot[0],
                                    base.vertices.at(v, 1) - pivot[1],
                                    base.vertices.at(v, 2) - pivot[2]};
            std::array<double, 3> q{};
            for (int i = 0; i < 3; ++i)
                q[i] = r_new[i * 3] * p[0] + r_new[i * 3 + 1] * p[1] + r_new[i * 3 + 2] * p[2] +
                       pivot[i];
            for (int i = 0; i < 3; ++i)
                if (std::abs(q[i] - moved.vertices.at(v, i)) > 1e-9) return false;
        }
    }
    return true;
}

} // namespace hmr::checks
