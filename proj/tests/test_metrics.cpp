#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hmr/metrics.hpp"
#include "hmr/pipeline_checks.hpp"
#include "hmr/rng.hpp"

using namespace hmr;

namespace {

Matrix random_points(Rng& rng, std::size_t n) {
    Matrix m(n, 3);
    for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
    return m;
}

} // namespace

TEST_CASE("mpjpe of identical point sets is zero") {
    Rng rng(401);
    const Matrix p = random_points(rng, 10);
    CHECK(mpjpe(p, p) == 0.0);
}

TEST_CASE("mpjpe of a constant 50mm shift is 50") {
    Rng rng(402);
    const Matrix gt = random_points(rng, 8);
    Matrix pred = gt;
    for (std::size_t i = 0; i < 8; ++i) pred.at(i, 0) += 0.05;
    CHECK(mpjpe(pred, gt) == doctest::Approx(50.0).epsilon(1e-9));
}

TEST_CASE("mpjpe matches a per-joint recomputation") {
    Rng rng(403);
    const Matrix gt = random_points(rng, 12), pred = random_points(rng, 12);
    double acc = 0.0;
    for (std::size_t i = 0; i < 12; ++i) {
        double d2 = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double d = pred.at(i, c) - gt.at(i, c);
            d2 += d * d;
        }
        acc += std::sqrt(d2);
    }
    CHECK(std::abs(mpjpe(pred, gt) - 1000.0 * acc / 12.0) <= 1e-9);
}

TEST_CASE("procrustes recovers an exact similarity fit") {
    Rng rng(404);
    for (int it = 0; it < 20; ++it) {
        const Matrix pred = random_points(rng, 8);
        const SimilarityTransform t = checks::random_similarity(rng);
        const Matrix gt = t.apply(pred);
        const ProcrustesResult res = procrustes_align(pred, gt);
        CHECK(mpjpe(res.aligned, gt) <= 1e-9 * 1000.0);
        CHECK(std::abs(res.transform.scale - t.scale) <= 1e-6 * t.scale);
        for (int i = 0; i < 9; ++i)
            CHECK(std::abs(res.transform.rotation[i] - t.rotation[i]) <= 1e-6);
    }
}

TEST_CASE("procrustes on identical sets is the identity transform") {
    Rng rng(405);
    const Matrix p = random_points(rng, 6);
    const ProcrustesResult res = procrustes_align(p, p);
    CHECK(std::abs(res.transform.scale - 1.0) <= 1e-9);
    for (int i = 0; i < 9; ++i)
        CHECK(std::abs(res.transform.rotation[i] - ((i % 4 == 0) ? 1.0 : 0.0)) <= 1e-9);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(res.transform.translation[i]) <= 1e-9);
}

TEST_CASE("procrustes residual beats random similarity transforms") {
    Rng rng(406);
    const Matrix gt = random_points(rng, 10);
    Matrix pred = gt;
    for (double& v : pred.data) v += rng.uniform(-0.1, 0.1);
    const double best = mpjpe(procrustes_align(pred, gt).aligned, gt);
    for (int it = 0; it < 100; ++it) {
        const SimilarityTransform t = checks::random_similarity(rng);
        CHECK(best <= mpjpe(t.apply(pred), gt) + 1e-9);
    }
}

TEST_CASE("procrustes rejects degenerate input") {
    CHECK_THROWS_AS(procrustes_align(Matrix(2, 3), Matrix(2, 3)), AlignmentError);
    Matrix collinear(5, 3);
    for (std::size_t i = 0; i < 5; ++i) collinear.at(i, 0) = static_cast<double>(i);
    CHECK_THROWS_AS(procrustes_align(collinear, collinear), AlignmentError);
}

TEST_CASE("pa_mpjpe is zero for similarity-transformed copies") {
    Rng rng(407);
    for (int it = 0; it < 20; ++it) {
        const Matrix gt = random_points(rng, 9);
        const Matrix pred = checks::random_similarity(rng).apply(gt);
        CHECK(pa_mpjpe(pred, gt) <= 1e-6);
    }
}

TEST_CASE("pa_mpjpe never exceeds mpjpe") {
    Rng rng(408);
    for (int it = 0; it < 200; ++it) {
        const Matrix gt = random_points(rng, 5 + rng.index(10));
        const Matrix pred = random_points(rng, gt.rows);
        CHECK(pa_mpjpe(pred, gt) <= mpjpe(pred, gt) + 1e-9);
    }
}

TEST_CASE("pck3d threshold bracketing at a uniform 100mm displacement") {
    Rng rng(409);
    const Matrix gt = random_points(rng, 7);
    Matrix pred = gt;
    for (std::size_t i = 0; i < 7; ++i) pred.at(i, 1) += 0.1;
    CHECK(pck3d(pred, gt, 150.0) == 1.0);
    CHECK(pck3d(pred, gt, 50.0) == 0.0);
}

TEST_CASE("pck3d is monotone in the threshold") {
    Rng rng(410);
    const Matrix gt = random_points(rng, 20);
    const Matrix pred = random_points(rng, 20);
    double prev = 0.0;
    for (double t = 10.0; t <= 4000.0; t *= 1.5) {
        const double v = pck3d(pred, gt, t);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("pve matches an oracle recomputation") {
    Rng rng(411);
    const Matrix gt = random_points(rng, 30);
    const Matrix pred = random_points(rng, 30);
    CHECK(std::abs(pve(pred, gt) - mpjpe(pred, gt)) <= 1e-12);
}

TEST_CASE("giou of a box with itself is one") {
    NormBox b{0.4, 0.6, 0.2, 0.3};
    CHECK(giou(b, b) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("giou of edge-adjacent squares with hull equal to union is zero") {
    NormBox a{0.25, 0.5, 0.5, 0.5};
    NormBox b{0.75, 0.5, 0.5, 0.5};
    CHECK(std::abs(giou(a, b)) <= 1e-12);
}

TEST_CASE("giou of two known separated boxes matches corner arithmetic") {
    NormBox a{0.25, 0.25, 0.5, 0.5};
    NormBox b{0.75, 0.75, 0.5, 0.5};
    // corners: a = [0,.5]x[0,.5], b = [.5,1]x[.5,1]; no overlap, hull = unit square
    const double uni = 0.25 + 0.25;
    const double want = 0.0 - (1.0 - uni) / 1.0;
    CHECK(giou(a, b) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("giou is symmetric and bounded above by iou") {
    Rng rng(412);
    for (int it = 0; it < 500; ++it) {
        NormBox a{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.01, 1.0),
                  rng.uniform(0.01, 1.0)};
        NormBox b{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.01, 1.0),
                  rng.uniform(0.01, 1.0)};
        CHECK(giou(a, b) == giou(b, a));
        CHECK(giou(a, b) <= iou(a, b) + 1e-12);
        CHECK(giou(a, b) >= -1.0);
        CHECK(giou(a, b) <= 1.0);
    }
}

TEST_CASE("giou decreases monotonically along a separation ray") {
    NormBox a{0.1, 0.5, 0.1, 0.1};
    double prev = 2.0;
    for (double cx = 0.1; cx <= 0.9; cx += 0.1) {
        NormBox b{cx, 0.5, 0.1, 0.1};
        const double v = giou(a, b);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
}
