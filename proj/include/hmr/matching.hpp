#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "hmr/metrics.hpp"
#include "hmr/numerics.hpp"
#include "hmr/records.hpp"

namespace hmr {

struct CostWeights {
    double alpha_conf = 0.25;
    double alpha_bbox = 1.0;
    double alpha_giou = 1.0;
    double alpha_kpts = 20.0;
    double gamma_conf = 2.0;
    // gate the keypoint cost on ground-truth visibility flags (extension,
    // off by default)
    bool use_visibility = false;
};

struct CostTerms {
    double conf = 0.0;
    double bbox = 0.0;
    double giou = 0.0;
    double kpts = 0.0;
    double total = 0.0;
    bool conf_clamped = false;
};

inline CostTerms cost_terms(const PersonPrediction& pred, const PersonTruth& gt,
                            const CostWeights& w) {
    CostTerms t;
    double conf = pred.conf;
    if (conf < 1e-7 || conf > 1.0 - 1e-7) {
        conf = std::clamp(conf, 1e-7, 1.0 - 1e-7);
        t.conf_clamped = true;
    }
    t.conf = -std::pow(1.0 - conf, w.gamma_conf) * std::log(conf);

    t.bbox = std::abs(pred.bbox.cx - gt.bbox.cx) + std::abs(pred.bbox.cy - gt.bbox.cy) +
             std::abs(pred.bbox.w - gt.bbox.w) + std::abs(pred.bbox.h - gt.bbox.h);
    t.giou = -hmr::giou(pred.bbox, gt.bbox);

    if (!pred.kpts2d.same_shape(gt.kpts2d))
        throw ShapeError("cost_terms: keypoint shapes disagree");
    double ksum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < gt.kpts2d.rows; ++i) {
        if (w.use_visibility && i < gt.kpts_visible.size() && gt.kpts_visible[i] == 0)
            continue;
        ksum += std::abs(pred.kpts2d.at(i, 0) - gt.kpts2d.at(i, 0)) +
                std::abs(pred.kpts2d.at(i, 1) - gt.kpts2d.at(i, 1));
        count += 2;
    }
    t.kpts = (count > 0) ? ksum / static_cast<double>(count) : 0.0;

    t.total = w.alpha_conf * t.conf + w.alpha_bbox * t.bbox +
              w.alpha_giou * t.giou + w.alpha_kpts * t.kpts;
    return t;
}

struct CostMatrix {
    std::size_t n_pred = 0;
    std::size_t n_gt = 0;
    Matrix total;
    Matrix conf, bbox, giou, kpts;  // per-term breakdown for diagnostics

    CostMatrix() = default;
    CostMatrix(std::size_t np, std::size_t ng)
        : n_pred(np), n_gt(ng), total(np, ng), conf(np, ng), bbox(np, ng),
          giou(np, ng), kpts(np, ng) {}

    static CostMatrix from_total(Matrix m) {
        CostMatrix c;
        c.n_pred = m.rows;
        c.n_gt = m.cols;
        c.total = std::move(m);
        return c;
    }
};

inline CostMatrix build_cost_matrix(const PredictionSet& preds, const GroundTruthSet& gts,
                                    const CostWeights& w) {
    CostMatrix cm(preds.size(), gts.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        for (std::size_t j = 0; j < gts.size(); ++j) {
            const CostTerms t = cost_terms(preds[i], gts[j], w);
            cm.total.at(i, j) = t.total;
            cm.conf.at(i, j) = t.conf;
            cm.bbox.at(i, j) = t.bbox;
            cm.giou.at(i, j) = t.giou;
            cm.kpts.at(i, j) = t.kpts;
        }
    return cm;
}

struct Assignment {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (pred, gt), ascending pred
    std::vector<std::size_t> unmatched_pred;
    std::vector<std::size_t> unmatched_gt;
    double total_cost = 0.0;
};

namespace detail {

constexpr double kPadSentinel = 1e9;
constexpr double kTieEps = 1e-9;

// Shortest augmenting path assignment on a square matrix (Jonker-Volgenant
// style with dual potentials). Returns col matched to each row.
inline std::vector<int> jv_square(const Matrix& a) {
    const int n = static_cast<int>(a.rows);
    const double INF = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, INF);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = INF;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a.at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
                if (minv[j] < delta) { delta = minv[j]; j1 = j; }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) { u[p[j]] += delta; v[j] -= delta; }
                else minv[j] -= delta;
            }
            j0 = j1;
        } while (p[j0] != 0);
        do { const int j1 = way[j0]; p[j0] = p[j1]; j0 = j1; } while (j0);
    }
    std::vector<int> col_of_row(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) col_of_row[p[j] - 1] = j - 1;
    return col_of_row;
}

// Pads a rectangular problem to square with a large finite sentinel, solves,
// and reports sentinel pairs as unmatched.
inline Assignment jv_rect(const Matrix& cost) {
    const std::size_t np = cost.rows, ng = cost.cols;
    const std::size_t n = std::max(np, ng);
    Matrix sq(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            sq.at(i, j) = (i < np && j < ng) ? cost.at(i, j) : kPadSentinel;
    const std::vector<int> col_of_row = jv_square(sq);

    Assignment out;
    std::vector<char> gt_used(ng, 0);
    for (std::size_t i = 0; i < np; ++i) {
        const int j = col_of_row[i];
        if (j >= 0 && static_cast<std::size_t>(j) < ng) {
            out.pairs.emplace_back(i, static_cast<std::size_t>(j));
            gt_used[static_cast<std::size_t>(j)] = 1;
        } else {
            out.unmatched_pred.push_back(i);
        }
    }
    for (std::size_t j = 0; j < ng; ++j)
        if (!gt_used[j]) out.unmatched_gt.push_back(j);
    out.total_cost = 0.0;
    for (const auto& [r, c] : out.pairs) out.total_cost += cost.at(r, c);
    return out;
}

// Optimal value of matching all min(rows, cols) pairs of a submatrix,
// addressed through row/col index lists.
inline double jv_value(const Matrix& cost, const std::vector<std::size_t>& rows,
                       const std::vector<std::size_t>& cols) {
    if (rows.empty() || cols.empty()) return 0.0;
    Matrix sub(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            sub.at(i, j) = cost.at(rows[i], cols[j]);
    return jv_rect(sub).total_cost;
}

} // namespace detail

inline void finalize_unmatched(Assignment& a, std::size_t np, std::size_t ng) {
    a.unmatched_pred.clear();
    a.unmatched_gt.clear();
    std::vector<char> pu(np, 0), gu(ng, 0);
    for (const auto& [r, c] : a.pairs) { pu[r] = 1; gu[c] = 1; }
    for (std::size_t i = 0; i < np; ++i)
        if (!pu[i]) a.unmatched_pred.push_back(i);
    for (std::size_t j = 0; j < ng; ++j)
        if (!gu[j]) a.unmatched_gt.push_back(j);
}

// Optimal assignment with ties broken toward the lexicographically smallest
// pair list. The tie-break refinement re-solves subproblems, so it is only
// applied below a size cap; above it the raw solver result (already
// deterministic) is returned.
inline Assignment hungarian(const CostMatrix& cost) {
    for (double v : cost.total.data)
        if (!std::isfinite(v)) throw DomainError("hungarian: non-finite cost entry");
    const std::size_t np = cost.n_pred, ng = cost.n_gt;
    Assignment base = detail::jv_rect(cost.total);
    const std::size_t m = std::min(np, ng);
    if (m == 0) return base;
    if (std::max(np, ng) > 16) return base;

    const double target = base.total_cost;
    Assignment out;
    std::vector<char> col_used(ng, 0);
    double acc = 0.0;
    std::size_t next_row = 0;
    for (std::size_t pos = 0; pos < m; ++pos) {
        const std::size_t need = m - pos;
        bool placed = false;
        for (std::size_t r = next_row; r + need <= np && !placed; ++r) {
            for (std::size_t c = 0; c < ng && !placed; ++c) {
                if (col_used[c]) continue;
                std::vector<std::size_t> rrows, rcols;
                for (std::size_t rr = r + 1; rr < np; ++rr) rrows.push_back(rr);
                for (std::size_t cc = 0; cc < ng; ++cc)
                    if (!col_used[cc] && cc != c) rcols.push_back(cc);
                const double rest = detail::jv_value(cost.total, rrows, rcols);
                if (acc + cost.total.at(r, c) + rest <= target + detail::kTieEps) {
                    out.pairs.emplace_back(r, c);
                    acc += cost.total.at(r, c);
                    col_used[c] = 1;
                    next_row = r + 1;
                    placed = true;
                }
            }
        }
        if (!placed) return base;  // numerical fallback
    }
    out.total_cost = acc;
    finalize_unmatched(out, np, ng);
    return out;
}

// Exhaustive minimum over injections, enumerated in lexicographic pair-list
// order so the first optimum found is the tie-break winner.
inline Assignment brute_force_assign(const CostMatrix& cost) {
    const std::size_t np = cost.n_pred, ng = cost.n_gt;
    if (std::max(np, ng) > 9)
        throw DomainError("brute_force_assign: refused above 9x9");
    const std::size_t m = std::min(np, ng);

    Assignment best;
    best.total_cost = std::numeric_limits<double>::infinity();
    std::vector<std::pair<std::size_t, std::size_t>> cur;
    std::vector<char> col_used(ng, 0);

    auto rec = [&](auto&& self, std::size_t row, double acc) -> void {
        if (cur.size() == m) {
            if (acc < best.total_cost - detail::kTieEps) {
                best.pairs = cur;
                best.total_cost = acc;
            }
            return;
        }
        if (row >= np || np - row < m - cur.size()) return;
        // matching this row (any column) precedes skipping it in pair-list order
        for (std::size_t c = 0; c < ng; ++c) {
            if (col_used[c]) continue;
            col_used[c] = 1;
            cur.emplace_back(row, c);
            self(self, row + 1, acc + cost.total.at(row, c));
            cur.pop_back();
            col_used[c] = 0;
        }
        if (np - row > m - cur.size()) self(self, row + 1, acc);
    };
    rec(rec, 0, 0.0);
    finalize_unmatched(best, np, ng);
    return best;
}

} // namespace hmr
