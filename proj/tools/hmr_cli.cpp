#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hmr/pipeline.hpp"

namespace {

hmr::RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
    hmr::RunConfig cfg;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw hmr::ConfigError("cannot open config file " + path);
        nlohmann::json j;
        in >> j;
        cfg = hmr::run_config_from_json(j);
    }
    if (seed) cfg.seed = *seed;
    return cfg;
}

void emit(const nlohmann::json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump() << "\n";
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw hmr::ConfigError("cannot open output file " + out_path);
    out << j.dump();
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hmr::ConfigError("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-person human mesh recovery decoder toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // --config/--seed/--out may follow the subcommand

    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "RunConfig JSON file")->capture_default_str();
    app.add_option("--seed", seed, "override the config seed");
    app.add_option("--out", out_path, "output file (default: stdout)");

    auto* gen = app.add_subcommand("gen", "generate synthetic scenes");
    std::size_t count = 4;
    gen->add_option("--count", count, "number of scenes");

    auto* init = app.add_subcommand("init-weights", "initialize a decoder checkpoint");

    auto* fwd = app.add_subcommand("forward", "run the decoder on scenes");
    std::string scenes_path, weights_path, preds_path;
    fwd->add_option("--scenes", scenes_path, "scene file from gen")->required();
    fwd->add_option("--weights", weights_path, "checkpoint from init-weights")->required();

    auto* ev = app.add_subcommand("eval", "evaluate predictions against scenes");
    ev->add_option("--scenes", scenes_path, "scene file from gen")->required();
    ev->add_option("--preds", preds_path, "prediction file from forward")->required();

    auto* st = app.add_subcommand("selftest", "run the oracle self-test suites");
    bool inject_fault = false;
    st->add_flag("--inject-fault", inject_fault,
                 "negative control: flip one mask bit so the isolation suite fails");

    auto* obj = app.add_subcommand("export-obj", "write one OBJ mesh per detected person");
    std::string outdir = ".";
    obj->add_option("--preds", preds_path, "prediction file from forward")->required();
    obj->add_option("--outdir", outdir, "directory for OBJ files");

    CLI11_PARSE(app, argc, argv);

    try {
        const hmr::RunConfig cfg = load_config(config_path, seed);
        const hmr::BodyModelSpec body = hmr::make_body_for(cfg);

        if (gen->parsed()) {
            const auto scenes = hmr::gen_scenes(cfg, count, body);
            nlohmann::json j;
            j["scenes"] = nlohmann::json::array();
            for (const auto& s : scenes) j["scenes"].push_back(hmr::scene_to_json(s));
            emit(j, out_path);
        } else if (init->parsed()) {
            const hmr::DecoderWeights w =
                hmr::init_weights(cfg.decoder, cfg.seed, body.joint_count, body.shape_count);
            emit(hmr::checkpoint_to_json(w), out_path);
        } else if (fwd->parsed()) {
            const hmr::DecoderWeights w = hmr::checkpoint_from_json(read_json(weights_path));
            nlohmann::json out;
            out["predictions"] = nlohmann::json::array();
            const nlohmann::json scenes_json = read_json(scenes_path);
            for (const auto& sj : scenes_json.at("scenes")) {
                const hmr::SceneSpec scene = hmr::scene_from_json(sj);
                const hmr::ForwardOutput fo = hmr::run_forward(scene, w, body, cfg);
                nlohmann::json preds = nlohmann::json::array();
                for (const auto& p : fo.preds) preds.push_back(hmr::prediction_to_json(p));
                out["predictions"].push_back(std::move(preds));
            }
            emit(out, out_path);
        } else if (ev->parsed()) {
            const nlohmann::json scenes_json = read_json(scenes_path);
            std::vector<hmr::SceneSpec> scenes;
            for (const auto& sj : scenes_json.at("scenes"))
                scenes.push_back(hmr::scene_from_json(sj));
            const nlohmann::json preds_json = read_json(preds_path);
            std::vector<hmr::PredictionSet> preds;
            for (const auto& ps : preds_json.at("predictions")) {
                hmr::PredictionSet set;
                for (const auto& pj : ps) set.push_back(hmr::prediction_from_json(pj));
                preds.push_back(std::move(set));
            }
            emit(hmr::eval_report_to_json(hmr::evaluate(scenes, preds, body, cfg)), out_path);
        } else if (st->parsed()) {
            hmr::SelfTestOptions opts;
            opts.inject_mask_fault = inject_fault;
            const hmr::SelfTestReport rep = hmr::selftest(opts);
            std::cout << hmr::selftest_table(rep);
            return rep.all_passed ? 0 : 1;
        } else if (obj->parsed()) {
            std::filesystem::create_directories(outdir);
            const nlohmann::json preds_json = read_json(preds_path);
            std::size_t scene_idx = 0;
            for (const auto& ps : preds_json.at("predictions")) {
                std::size_t person_idx = 0;
                for (const auto& pj : ps) {
                    const hmr::PersonPrediction p = hmr::prediction_from_json(pj);
                    const std::string path = outdir + "/scene" + std::to_string(scene_idx) +
                                             "_person" + std::to_string(person_idx) + ".obj";
                    hmr::export_obj(body, p.vertices, path);
                    ++person_idx;
                }
                ++scene_idx;
            }
        }
    } catch (const hmr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const hmr::ModelError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
