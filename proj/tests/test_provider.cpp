#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hmr/interaction_provider.hpp"
#include "hmr/rng.hpp"

using namespace hmr;

namespace {

SceneSpec tiny_scene() {
    SceneSpec s;
    s.seed = 77;
    PersonTruth a, b;
    a.bbox = NormBox{0.3, 0.5, 0.2, 0.4};
    b.bbox = NormBox{0.7, 0.5, 0.2, 0.4};
    a.joints3d = Matrix(1, 3);
    b.joints3d = Matrix(1, 3);
    a.kpts2d = Matrix(1, 2);
    b.kpts2d = Matrix(1, 2);
    s.persons = {a, b};
    s.objects.push_back({NormBox{0.5, 0.8, 0.1, 0.1}, 3});
    InteractionLabel lab;
    lab.subject_person = 0;
    lab.object_is_person = false;
    lab.object_index = 0;
    lab.label = 5;
    s.interactions.push_back(lab);
    return s;
}

} // namespace

TEST_CASE("zero mode returns a zero vector of the requested dimension") {
    ProviderConfig cfg;
    cfg.feature_dim = 48;
    cfg.mode = ProviderMode::zero;
    const auto f = extract(tiny_scene(), NormBox{0.3, 0.5, 0.2, 0.4},
                           NormBox{0.7, 0.5, 0.2, 0.4}, cfg);
    CHECK(f.size() == 48);
    for (double v : f) CHECK(v == 0.0);
}

TEST_CASE("extract is deterministic") {
    ProviderConfig cfg;
    cfg.feature_dim = 32;
    const SceneSpec s = tiny_scene();
    const NormBox bh{0.3, 0.5, 0.2, 0.4}, be{0.7, 0.5, 0.2, 0.4};
    CHECK(extract(s, bh, be, cfg) == extract(s, bh, be, cfg));
    cfg.mode = ProviderMode::labeled;
    CHECK(extract(s, bh, be, cfg) == extract(s, bh, be, cfg));
}

TEST_CASE("geometric features of a box with itself encode zero offset, unit IoU") {
    const NormBox b{0.4, 0.4, 0.25, 0.3};
    const auto g = pair_geometry(b, b);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
    CHECK(g[2] == 0.0);
    CHECK(g[3] == 0.0);
    CHECK(g[4] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g[5] == doctest::Approx(1.0).epsilon(1e-12));

    ProviderConfig cfg;
    cfg.feature_dim = 24;
    const auto f = extract(tiny_scene(), b, b, cfg);
    // slots 0..5 hold sin(g_c): zero offsets give sin(0)=0, IoU/GIoU give sin(1)
    CHECK(f[0] == 0.0);
    CHECK(f[1] == 0.0);
    CHECK(f[2] == 0.0);
    CHECK(f[3] == 0.0);
    CHECK(f[4] == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
    CHECK(f[6] == doctest::Approx(std::cos(0.0)).epsilon(1e-12));
}

TEST_CASE("features stay within the documented L-infinity bound") {
    Rng rng(601);
    ProviderConfig geo, lab;
    geo.feature_dim = lab.feature_dim = 40;
    lab.mode = ProviderMode::labeled;
    const SceneSpec s = tiny_scene();
    for (int it = 0; it < 100; ++it) {
        NormBox bh{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.05, 0.6),
                   rng.uniform(0.05, 0.6)};
        NormBox be{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.05, 0.6),
                   rng.uniform(0.05, 0.6)};
        for (double v : extract(s, bh, be, geo)) {
            CHECK(std::isfinite(v));
            CHECK(std::abs(v) <= 1.0 + 1e-12);
        }
        for (double v : extract(s, bh, be, lab)) {
            CHECK(std::isfinite(v));
            CHECK(std::abs(v) <= kFeatureBound);
        }
    }
}

TEST_CASE("labeled mode embeds the interaction label for matching boxes") {
    const SceneSpec s = tiny_scene();
    ProviderConfig geo, lab;
    geo.feature_dim = lab.feature_dim = 32;
    lab.mode = ProviderMode::labeled;
    // boxes equal to the labeled pair's entities: person 0 and object 0
    const NormBox bh = s.persons[0].bbox, be = s.objects[0].box;
    const auto fg = extract(s, bh, be, geo);
    const auto fl = extract(s, bh, be, lab);
    bool differs = false;
    for (std::size_t i = 0; i < fg.size(); ++i)
        if (fg[i] != fl[i]) differs = true;
    CHECK(differs);
    // an unlabeled pair (person 1 -> object) falls back to geometric features
    const auto fg2 = extract(s, s.persons[1].bbox, be, geo);
    const auto fl2 = extract(s, s.persons[1].bbox, be, lab);
    CHECK(fg2 == fl2);
}

TEST_CASE("labeled embeddings differ across the label vocabulary") {
    ProviderConfig lab;
    lab.feature_dim = 16;
    lab.mode = ProviderMode::labeled;
    std::vector<std::vector<double>> feats;
    for (int label = 1; label <= 20; ++label) {
        SceneSpec s = tiny_scene();
        s.interactions[0].label = label;
        feats.push_back(extract(s, s.persons[0].bbox, s.objects[0].box, lab));
    }
    for (std::size_t a = 0; a < feats.size(); ++a)
        for (std::size_t b = a + 1; b < feats.size(); ++b)
            CHECK(feats[a] != feats[b]);
}

TEST_CASE("detect_objects with zero noise returns the exact boxes") {
    const SceneSpec s = tiny_scene();
    const auto out = detect_objects(s, 0.0, 8);
    REQUIRE(out.size() == 1);
    CHECK(out[0].cx == s.objects[0].box.cx);
    CHECK(out[0].cy == s.objects[0].box.cy);
    CHECK(out[0].w == s.objects[0].box.w);
    CHECK(out[0].h == s.objects[0].box.h);
}

TEST_CASE("detect_objects honors max_out = 0") {
    CHECK(detect_objects(tiny_scene(), 0.0, 0).empty());
}

TEST_CASE("detect_objects noise stays within the stated bound") {
    SceneSpec s = tiny_scene();
    for (int i = 0; i < 5; ++i)
        s.objects.push_back({NormBox{0.2 + 0.1 * i, 0.3, 0.2, 0.2}, i});
    const auto out = detect_objects(s, 0.05, 100);
    REQUIRE(out.size() == s.objects.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(std::abs(out[i].cx - s.objects[i].box.cx) <= 0.05 + 1e-12);
        CHECK(std::abs(out[i].cy - s.objects[i].box.cy) <= 0.05 + 1e-12);
        CHECK(std::abs(out[i].w - s.objects[i].box.w) <= 0.05 + 1e-12);
        CHECK(std::abs(out[i].h - s.objects[i].box.h) <= 0.05 + 1e-12);
        CHECK(out[i].valid());
    }
    CHECK_THROWS_AS(detect_objects(s, -0.1, 4), DomainError);
}

TEST_CASE("scene JSON round trip") {
    const SceneSpec s = tiny_scene();
    const SceneSpec r = scene_from_json(scene_to_json(s));
    CHECK(r.seed == s.seed);
    REQUIRE(r.persons.size() == 2);
    CHECK(r.persons[0].bbox.cx == s.persons[0].bbox.cx);
    REQUIRE(r.objects.size() == 1);
    CHECK(r.objects[0].category == 3);
    REQUIRE(r.interactions.size() == 1);
    CHECK(r.interactions[0].label == 5);
}
