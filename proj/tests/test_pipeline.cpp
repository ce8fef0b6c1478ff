#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hmr/pipeline.hpp"

using namespace hmr;

namespace {

RunConfig quick_config() {
    RunConfig cfg;
    cfg.seed = 5;
    cfg.scene.persons_min = 1;
    cfg.scene.persons_max = 2;
    cfg.scene.objects_min = 0;
    cfg.scene.objects_max = 2;
    cfg.body_vertices = 24;
    cfg.body_joints = 5;
    cfg.body_shapes = 2;
    cfg.decoder.n_queries = 4;
    cfg.decoder.d_model = 32;
    cfg.decoder.n_heads = 4;
    cfg.decoder.ffn_dim = 64;
    cfg.decoder.n_layers = 2;
    cfg.decoder.interaction_feature_dim = 16;
    cfg.provider.feature_dim = 16;
    return cfg;
}

PredictionSet truth_as_predictions(const SceneSpec& scene, const BodyModelSpec& body,
                                   const RunConfig& cfg) {
    PredictionSet preds;
    for (const auto& g : scene.persons) {
        PersonPrediction p;
        p.conf = 0.95;
        p.params = g.params;
        p.cam = g.cam;
        p.depth = g.depth;
        p.joints3d = g.joints3d;
        p.kpts2d = g.kpts2d;
        p.bbox = g.bbox;
        ForwardResultBody fb = forward(body, g.params);
        for (std::size_t r = 0; r < fb.vertices.rows; ++r) {
            fb.vertices.at(r, 0) += g.cam.t_x;
            fb.vertices.at(r, 1) += g.cam.t_y;
            fb.vertices.at(r, 2) += g.depth;
        }
        p.vertices = fb.vertices;
        preds.push_back(std::move(p));
    }
    return preds;
}

} // namespace

TEST_CASE("gen_scenes is deterministic for identical configs") {
    const RunConfig cfg = quick_config();
    const BodyModelSpec body = make_body_for(cfg);
    const auto a = gen_scenes(cfg, 3, body);
    const auto b = gen_scenes(cfg, 3, body);
    REQUIRE(a.size() == 3);
    for (std::size_t s = 0; s < 3; ++s)
        CHECK(scene_to_json(a[s]).dump() == scene_to_json(b[s]).dump());
}

TEST_CASE("gen_scenes rejects infeasible ranges") {
    RunConfig cfg = quick_config();
    cfg.scene.persons_min = 3;
    cfg.scene.persons_max = 2;
    const BodyModelSpec body = make_toy_model(1, 24, 5, 2);
    CHECK_THROWS_AS(gen_scenes(cfg, 1, body), ConfigError);
}

TEST_CASE("crowding packs ground-truth boxes together") {
    RunConfig loose = quick_config();
    loose.scene.persons_min = loose.scene.persons_max = 3;
    RunConfig tight = loose;
    tight.scene.crowding = 1.0;
    const BodyModelSpec body = make_body_for(loose);
    auto mean_pair_iou = [&](const RunConfig& cfg) {
        const auto scenes = gen_scenes(cfg, 100, body);
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& s : scenes)
            for (std::size_t i = 0; i < s.persons.size(); ++i)
                for (std::size_t j = i + 1; j < s.persons.size(); ++j) {
                    sum += iou(s.persons[i].bbox, s.persons[j].bbox);
                    ++count;
                }
        return sum / static_cast<double>(count);
    };
    CHECK(mean_pair_iou(tight) > mean_pair_iou(loose));
}

TEST_CASE("confidence thresholds 1.0 and 0.0 bracket the prediction count") {
    RunConfig cfg = quick_config();
    const BodyModelSpec body = make_body_for(cfg);
    const auto scenes = gen_scenes(cfg, 1, body);
    const DecoderWeights w = init_weights(cfg.decoder, cfg.seed, body.joint_count,
                                          body.shape_count);
    cfg.conf_threshold = 1.0;
    CHECK(run_forward(scenes[0], w, body, cfg).preds.empty());
    cfg.conf_threshold = 0.0;
    CHECK(run_forward(scenes[0], w, body, cfg).preds.size() == cfg.decoder.n_queries);
}

TEST_CASE("single-person zero-object scenes run the full pipeline") {
    RunConfig cfg = quick_config();
    cfg.scene.persons_min = cfg.scene.persons_max = 1;
    cfg.scene.objects_min = cfg.scene.objects_max = 0;
    cfg.conf_threshold = 0.0;
    const BodyModelSpec body = make_body_for(cfg);
    const auto scenes = gen_scenes(cfg, 2, body);
    CHECK(scenes[0].persons.size() == 1);
    CHECK(scenes[0].objects.empty());
    const DecoderWeights w = init_weights(cfg.decoder, cfg.seed, body.joint_count,
                                          body.shape_count);
    const ForwardOutput out = run_forward(scenes[0], w, body, cfg);
    CHECK(out.preds.size() == cfg.decoder.n_queries);
    const EvalReport rep = evaluate(scenes, {out.preds, run_forward(scenes[1], w, body, cfg).preds},
                                    body, cfg);
    CHECK(rep.scenes.size() == 2);
}

TEST_CASE("forward then eval is byte-identical across runs") {
    RunConfig cfg = quick_config();
    cfg.conf_threshold = 0.0;
    const BodyModelSpec body = make_body_for(cfg);
    const auto scenes = gen_scenes(cfg, 3, body);
    const DecoderWeights w = init_weights(cfg.decoder, cfg.seed, body.joint_count,
                                          body.shape_count);
    auto run_once = [&]() {
        std::vector<PredictionSet> preds;
        for (const auto& s : scenes) preds.push_back(run_forward(s, w, body, cfg).preds);
        return eval_report_to_json(evaluate(scenes, preds, body, cfg)).dump();
    };
    CHECK(run_once() == run_once());
}

TEST_CASE("evaluating the ground truth against itself is perfect") {
    RunConfig cfg = quick_config();
    cfg.scene.persons_min = 2;
    cfg.scene.persons_max = 2;
    const BodyModelSpec body = make_body_for(cfg);
    const auto scenes = gen_scenes(cfg, 2, body);
    std::vector<PredictionSet> preds;
    for (const auto& s : scenes) preds.push_back(truth_as_predictions(s, body, cfg));
    const EvalReport rep = evaluate(scenes, preds, body, cfg);
    REQUIRE(rep.mpjpe_mm.has_value());
    CHECK(*rep.mpjpe_mm <= 1e-9);
    CHECK(*rep.pa_mpjpe_mm <= 1e-6);
    CHECK(*rep.pve_mm <= 1e-9);
    CHECK(rep.pck_all == 1.0);
    CHECK(rep.pck_match == 1.0);
    CHECK(rep.precision == 1.0);
    CHECK(rep.recall == 1.0);
}

TEST_CASE("empty predictions give zero recall and absent match metrics") {
    RunConfig cfg = quick_config();
    const BodyModelSpec body = make_body_for(cfg);
    const auto scenes = gen_scenes(cfg, 2, body);
    const EvalReport rep = evaluate(scenes, {PredictionSet{}, PredictionSet{}}, body, cfg);
    CHECK_FALSE(rep.mpjpe_mm.has_value());
    CHECK(rep.recall == 0.0);
    CHECK(rep.pck_all == 0.0);
}

TEST_CASE("a uniform 30mm joint offset yields MPJPE of exactly 30") {
    RunConfig cfg = quick_config();
    cfg.scene.persons_min = cfg.scene.persons_max = 2;
    const BodyModelSpec body = make_body_for(cfg);
    const auto scenes = gen_scenes(cfg, 1, body);
    std::vector<PredictionSet> preds{truth_as_predictions(scenes[0], body, cfg)};
    for (auto& p : preds[0])
        for (std::size_t k = 0; k < p.joints3d.rows; ++k) p.joints3d.at(k, 0) += 0.03;
    const EvalReport rep = evaluate(scenes, preds, body, cfg);
    REQUIRE(rep.mpjpe_mm.has_value());
    CHECK(std::abs(*rep.mpjpe_mm - 30.0) <= 1e-6);
}

TEST_CASE("aggregate metrics recompute from the per-scene entries") {
    RunConfig cfg = quick_config();
    cfg.conf_threshold = 0.0;
    const BodyModelSpec body = make_body_for(cfg);
    const auto scenes = gen_scenes(cfg, 4, body);
    const DecoderWeights w = init_weights(cfg.decoder, cfg.seed, body.joint_count,
                                          body.shape_count);
    std::vector<PredictionSet> preds;
    for (const auto& s : scenes) preds.push_back(run_forward(s, w, body, cfg).preds);
    const EvalReport rep = evaluate(scenes, preds, body, cfg);

    double m_sum = 0.0, loss_sum = 0.0;
    std::size_t matches = 0;
    for (const auto& s : rep.scenes) {
        if (s.mpjpe_mm) m_sum += *s.mpjpe_mm * static_cast<double>(s.n_matched);
        matches += s.n_matched;
        loss_sum += s.loss.total;
    }
    REQUIRE(rep.mpjpe_mm.has_value());
    CHECK(std::abs(*rep.mpjpe_mm - m_sum / static_cast<double>(matches)) <= 1e-9);
    CHECK(std::abs(rep.mean_loss - loss_sum / 4.0) <= 1e-9);
}

TEST_CASE("RunConfig JSON round trip and validation") {
    RunConfig cfg = quick_config();
    cfg.provider.mode = ProviderMode::labeled;
    cfg.object_noise = 0.02;
    const RunConfig back = run_config_from_json(run_config_to_json(cfg));
    CHECK(run_config_to_json(back).dump() == run_config_to_json(cfg).dump());

    nlohmann::json bad = run_config_to_json(cfg);
    bad["provider"]["feature_dim"] = 999;
    CHECK_THROWS_AS(run_config_from_json(bad), ConfigError);
    nlohmann::json bad2 = run_config_to_json(cfg);
    bad2["loss"]["lambda_map"] = 4.0;
    CHECK_THROWS_AS(run_config_from_json(bad2), ConfigError);
}

TEST_CASE("prediction JSON round trip") {
    RunConfig cfg = quick_config();
    cfg.conf_threshold = 0.0;
    const BodyModelSpec body = make_body_for(cfg);
    const auto scenes = gen_scenes(cfg, 1, body);
    const DecoderWeights w = init_weights(cfg.decoder, cfg.seed, body.joint_count,
                                          body.shape_count);
    const ForwardOutput out = run_forward(scenes[0], w, body, cfg);
    for (const auto& p : out.preds) {
        const PersonPrediction q = prediction_from_json(prediction_to_json(p));
        CHECK(q.conf == p.conf);
        CHECK(q.joints3d.data == p.joints3d.data);
        CHECK(q.vertices.data == p.vertices.data);
        CHECK(q.bbox.cx == p.bbox.cx);
    }
}

TEST_CASE("obj export writes one vertex line per vertex and 1-indexed faces") {
    const BodyModelSpec body = make_toy_model(2, 10, 3, 1);
    const ForwardResultBody fb = forward(body, BodyParams::rest(3, 1));
    std::ostringstream os;
    export_obj(body, fb.vertices, os);
    const std::string text = os.str();
    std::size_t v_lines = 0, f_lines = 0;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind("v ", 0) == 0) ++v_lines;
        if (line.rfind("f ", 0) == 0) {
            ++f_lines;
            std::istringstream fs(line.substr(2));
            std::size_t a, b, c;
            fs >> a >> b >> c;
            CHECK(a >= 1);
            CHECK(b <= body.vertex_count);
            CHECK(c <= body.vertex_count);
        }
    }
    CHECK(v_lines == body.vertex_count);
    CHECK(f_lines == body.faces.size());
}

TEST_CASE("ablation variants all execute and interaction moves the queries") {
    RunConfig cfg = quick_config();
    cfg.scene.persons_min = cfg.scene.persons_max = 2;
    cfg.scene.objects_min = cfg.scene.objects_max = 2;
    const BodyModelSpec body = make_body_for(cfg);
    const auto scenes = gen_scenes(cfg, 1, body);
    const auto rows = ablation_compare(scenes[0], body, cfg, 17);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].name == "none");
    CHECK(rows[0].query_delta_vs_none == 0.0);
    CHECK(rows[1].query_delta_vs_none > 0.0);
    CHECK(rows[2].query_delta_vs_none > 0.0);
}

TEST_CASE("interaction_start_layer sweep executes at every layer index") {
    RunConfig cfg = quick_config();
    cfg.scene.persons_min = cfg.scene.persons_max = 2;
    const BodyModelSpec body = make_body_for(cfg);
    const auto scenes = gen_scenes(cfg, 1, body);
    for (std::size_t start = 0; start <= cfg.decoder.n_layers; ++start) {
        RunConfig c = cfg;
        c.decoder.interaction_start_layer = start;
        const DecoderWeights w = init_weights(c.decoder, 3, body.joint_count, body.shape_count);
        CHECK_NOTHROW(run_forward(scenes[0], w, body, c));
    }
}

TEST_CASE("selftest passes on a fresh build") {
    SelfTestOptions opts;
    opts.instances = 60;
    opts.batches = 10;
    const SelfTestReport rep = selftest(opts);
    for (const auto& s : rep.suites) {
        INFO(s.name);
        CHECK(s.passed);
    }
    CHECK(rep.all_passed);
}

TEST_CASE("injected mask fault makes the isolation suite fail") {
    SelfTestOptions opts;
    opts.inject_mask_fault = true;
    opts.instances = 10;
    opts.batches = 2;
    const SelfTestReport rep = selftest(opts);
    bool isolation_failed = false;
    for (const auto& s : rep.suites)
        if (s.name == "mask_isolation" && !s.passed) isolation_failed = true;
    CHECK(isolation_failed);
    CHECK_FALSE(rep.all_passed);
}
