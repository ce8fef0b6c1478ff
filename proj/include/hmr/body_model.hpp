#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmr/numerics.hpp"
#include "hmr/rng.hpp"

namespace hmr {

struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

// Rigid/affine transform as a 3x3 rotation block plus translation.
struct Affine {
    std::array<double, 9> rot{1, 0, 0, 0, 1, 0, 0, 0, 1};
    std::array<double, 3> trans{0, 0, 0};

    static Affine compose(const Affine& a, const Affine& b) {
        Affine out;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double v = 0.0;
                for (int k = 0; k < 3; ++k) v += a.rot[i * 3 + k] * b.rot[k * 3 + j];
                out.rot[i * 3 + j] = v;
            }
        for (int i = 0; i < 3; ++i) {
            double v = a.trans[i];
            for (int k = 0; k < 3; ++k) v += a.rot[i * 3 + k] * b.trans[k];
            out.trans[i] = v;
        }
        return out;
    }

    std::array<double, 3> apply(const std::array<double, 3>& p) const {
        std::array<double, 3> out;
        for (int i = 0; i < 3; ++i)
            out[i] = rot[i * 3] * p[0] + rot[i * 3 + 1] * p[1] + rot[i * 3 + 2] * p[2] + trans[i];
        return out;
    }
};

// Parametric body model: template mesh, shape blend directions, joint
// regressor, skinning weights and a kinematic tree rooted at joint 0.
// Real SMPL uses V=6890, K=24, B=10; toy models keep the same layout.
struct BodyModelSpec {
    std::size_t vertex_count = 0;  // V
    std::size_t joint_count = 0;   // K
    std::size_t shape_count = 0;   // B
    Matrix template_verts;         // V x 3
    std::vector<Matrix> shape_basis;   // B entries, each V x 3
    Matrix joint_regressor;        // K x V
    Matrix skin_weights;           // V x K
    std::vector<int> parent;       // per joint, -1 for the root
    std::vector<Matrix> pose_basis;    // optional, (K-1)*9 entries each V x 3
    std::vector<std::array<std::size_t, 3>> faces;  // optional triangle list

    void validate() const;
};

struct BodyParams {
    std::vector<std::array<double, 3>> pose;  // K axis-angle vectors
    std::vector<double> shape;                // B coefficients

    BodyParams() = default;
    BodyParams(std::vector<std::array<double, 3>> p, std::vector<double> b)
        : pose(std::move(p)), shape(std::move(b)) {
        wrap_pose();
    }

    static BodyParams rest(std::size_t joints, std::size_t shapes) {
        BodyParams p;
        p.pose.assign(joints, {0.0, 0.0, 0.0});
        p.shape.assign(shapes, 0.0);
        return p;
    }

    // Wrap each axis-angle so the angle magnitude stays within 2*pi.
    void wrap_pose() {
        constexpr double two_pi = 6.283185307179586477;
        for (auto& aa : pose) {
            double n = std::sqrt(aa[0] * aa[0] + aa[1] * aa[1] + aa[2] * aa[2]);
            if (n > two_pi) {
                double wrapped = std::fmod(n, two_pi);
                double f = wrapped / n;
                aa[0] *= f;
                aa[1] *= f;
                aa[2] *= f;
            }
        }
    }
};

inline std::array<double, 9> rodrigues(const std::array<double, 3>& aa) {
    const double theta = std::sqrt(aa[0] * aa[0] + aa[1] * aa[1] + aa[2] * aa[2]);
    std::array<double, 9> r{1, 0, 0, 0, 1, 0, 0, 0, 1};
    if (theta < 1e-8) {
        // first-order expansion: I + [aa]_x
        r[1] = -aa[2]; r[2] = aa[1];
        r[3] = aa[2];  r[5] = -aa[0];
        r[6] = -aa[1]; r[7] = aa[0];
        return r;
    }
    const double x = aa[0] / theta, y = aa[1] / theta, z = aa[2] / theta;
    const double c = std::cos(theta), s = std::sin(theta), t = 1.0 - c;
    r[0] = t * x * x + c;     r[1] = t * x * y - s * z; r[2] = t * x * z + s * y;
    r[3] = t * x * y + s * z; r[4] = t * y * y + c;     r[5] = t * y * z - s * x;
    r[6] = t * x * z - s * y; r[7] = t * y * z + s * x; r[8] = t * z * z + c;
    return r;
}

inline void BodyModelSpec::validate() const {
    auto fail = [](const std::string& path, const std::string& why) {
        throw ModelError(path + ": " + why);
    };
    const std::size_t V = vertex_count, K = joint_count, B = shape_count;
    if (V < K || K < 1) fail("vertex_count/joint_count", "require V >= K >= 1");
    if (template_verts.rows != V || template_verts.cols != 3)
        fail("template", "expected " + std::to_string(V) + " x 3");
    if (shape_basis.size() != B) fail("shape_basis", "expected " + std::to_string(B) + " directions");
    for (std::size_t b = 0; b < B; ++b)
        if (shape_basis[b].rows != V || shape_basis[b].cols != 3)
            fail("shape_basis[" + std::to_string(b) + "]", "expected V x 3");
    if (joint_regressor.rows != K || joint_regressor.cols != V)
        fail("joint_regressor", "expected K x V");
    for (std::size_t k = 0; k < K; ++k) {
        double sum = 0.0;
        for (std::size_t v = 0; v < V; ++v) {
            const double w = joint_regressor.at(k, v);
            if (w < 0.0) fail("joint_regressor[" + std::to_string(k) + "]", "negative weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-6)
            fail("joint_regressor[" + std::to_string(k) + "]", "row sum " + std::to_string(sum) + " != 1");
    }
    if (skin_weights.rows != V || skin_weights.cols != K)
        fail("skin_weights", "expected V x K");
    for (std::size_t v = 0; v < V; ++v) {
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) sum += skin_weights.at(v, k);
        if (std::abs(sum - 1.0) > 1e-6)
            fail("skin_weights[" + std::to_string(v) + "]", "row sum " + std::to_string(sum) + " != 1");
    }
    if (parent.size() != K) fail("parents", "expected K entries");
    if (parent[0] != -1) fail("parents[0]", "root joint must have parent -1");
    for (std::size_t k = 1; k < K; ++k)
        if (parent[k] < 0 || static_cast<std::size_t>(parent[k]) >= k)
            fail("parents[" + std::to_string(k) + "]",
                 "parent must precede child (topological joint order)");
    if (!pose_basis.empty()) {
        if (K < 2 || pose_basis.size() != (K - 1) * 9)
            fail("pose_basis", "expected (K-1)*9 directions");
        for (std::size_t b = 0; b < pose_basis.size(); ++b)
            if (pose_basis[b].rows != V || pose_basis[b].cols != 3)
                fail("pose_basis[" + std::to_string(b) + "]", "expected V x 3");
    }
    for (std::size_t f = 0; f < faces.size(); ++f)
        for (int c = 0; c < 3; ++c)
            if (faces[f][c] >= V)
                fail("faces[" + std::to_string(f) + "]", "vertex index out of range");
}

struct ForwardResultBody {
    Matrix vertices;  // V x 3
    Matrix joints;    // K x 3
};

// Shape blend, joint regression at rest, kinematic chain composition and
// linear blend skinning relative to the rest pose.
inline ForwardResultBody forward(const BodyModelSpec& spec, const BodyParams& params) {
    const std::size_t V = spec.vertex_count, K = spec.joint_count;
    if (params.pose.size() != K)
        throw ShapeError("forward: pose must have K joint rotations");
    if (params.shape.size() != spec.shape_count)
        throw ShapeError("forward: shape must have B coefficients");

    Matrix shaped = spec.template_verts;
    for (std::size_t b = 0; b < spec.shape_count; ++b) {
        const double beta = params.shape[b];
        if (beta == 0.0) continue;
        for (std::size_t i = 0; i < shaped.data.size(); ++i)
            shaped.data[i] += beta * spec.shape_basis[b].data[i];
    }

    std::vector<std::array<double, 9>> rot(K);
    for (std::size_t k = 0; k < K; ++k) rot[k] = rodrigues(params.pose[k]);

    if (!spec.pose_basis.empty()) {
        // pose correctives driven by flattened (R_k - I), k >= 1
        for (std::size_t k = 1; k < K; ++k) {
            for (int e = 0; e < 9; ++e) {
                const double coeff = rot[k][e] - ((e % 4 == 0) ? 1.0 : 0.0);
                if (coeff == 0.0) continue;
                const Matrix& dir = spec.pose_basis[(k - 1) * 9 + e];
                for (std::size_t i = 0; i < shaped.data.size(); ++i)
                    shaped.data[i] += coeff * dir.data[i];
            }
        }
    }

    Matrix rest_joints = matmul(spec.joint_regressor, shaped);  // K x 3

    std::vector<Affine> world(K);
    for (std::size_t k = 0; k < K; ++k) {
        Affine local;
        local.rot = rot[k];
        const int p = spec.parent[k];
        for (int i = 0; i < 3; ++i) {
            local.trans[i] = rest_joints.at(k, i);
            if (p >= 0) local.trans[i] -= rest_joints.at(static_cast<std::size_t>(p), i);
        }
        world[k] = (p < 0) ? local : Affine::compose(world[static_cast<std::size_t>(p)], local);
    }

    // skinning transform = world transform composed with inverse rest translation
    std::vector<Affine> skin(K);
    for (std::size_t k = 0; k < K; ++k) {
        skin[k] = world[k];
        const std::array<double, 3> jr{rest_joints.at(k, 0), rest_joints.at(k, 1), rest_joints.at(k, 2)};
        for (int i = 0; i < 3; ++i) {
            double v = 0.0;
            for (int c = 0; c < 3; ++c) v += skin[k].rot[i * 3 + c] * jr[c];
            skin[k].trans[i] = world[k].trans[i] - v;
        }
    }

    ForwardResultBody out;
    out.vertices = Matrix(V, 3);
    for (std::size_t v = 0; v < V; ++v) {
        const std::array<double, 3> p{shaped.at(v, 0), shaped.at(v, 1), shaped.at(v, 2)};
        std::array<double, 3> acc{0, 0, 0};
        for (std::size_t k = 0; k < K; ++k) {
            const double w = spec.skin_weights.at(v, k);
            if (w == 0.0) continue;
            const auto q = skin[k].apply(p);
            acc[0] += w * q[0];
            acc[1] += w * q[1];
            acc[2] += w * q[2];
        }
        out.vertices.at(v, 0) = acc[0];
        out.vertices.at(v, 1) = acc[1];
        out.vertices.at(v, 2) = acc[2];
    }

    out.joints = Matrix(K, 3);
    for (std::size_t k = 0; k < K; ++k)
        for (int i = 0; i < 3; ++i) out.joints.at(k, i) = world[k].trans[i];
    return out;
}

inline Matrix regress_joints(const BodyModelSpec& spec, const Matrix& vertices) {
    if (vertices.rows != spec.vertex_count || vertices.cols != 3)
        throw ShapeError("regress_joints: expected V x 3 vertices");
    return matmul(spec.joint_regressor, vertices);
}

// Deterministic synthetic model: chain kinematic tree along +y, vertices
// scattered around their owning joint, regressor and skin weights normalized.
inline BodyModelSpec make_toy_model(std::uint64_t seed, std::size_t V, std::size_t K, std::size_t B) {
    if (V < K || K < 1 || B < 1)
        throw DomainError("make_toy_model: require V >= K >= 1 and B >= 1");
    Rng rng(seed ^ 0xb0d7u);
    BodyModelSpec spec;
    spec.vertex_count = V;
    spec.joint_count = K;
    spec.shape_count = B;
    spec.parent.resize(K);
    spec.parent[0] = -1;
    for (std::size_t k = 1; k < K; ++k) spec.parent[k] = static_cast<int>(k - 1);

    const double seg = 0.12;  // joint spacing in meters
    std::vector<std::array<double, 3>> anchors(K);
    for (std::size_t k = 0; k < K; ++k) anchors[k] = {0.0, seg * static_cast<double>(k), 0.0};

    spec.template_verts = Matrix(V, 3);
    std::vector<std::size_t> owner(V);
    for (std::size_t v = 0; v < V; ++v) {
        const std::size_t k = v % K;
        owner[v] = k;
        spec.template_verts.at(v, 0) = anchors[k][0] + rng.uniform(-0.05, 0.05);
        spec.template_verts.at(v, 1) = anchors[k][1] + rng.uniform(-0.04, 0.04);
        spec.template_verts.at(v, 2) = anchors[k][2] + rng.uniform(-0.05, 0.05);
    }

    spec.joint_regressor = Matrix(K, V);
    for (std::size_t k = 0; k < K; ++k) {
        double sum = 0.0;
        for (std::size_t v = 0; v < V; ++v) {
            if (owner[v] == k) {
                const double w = 0.5 + rng.uniform();
                spec.joint_regressor.at(k, v) = w;
                sum += w;
            }
        }
        for (std::size_t v = 0; v < V; ++v) spec.joint_regressor.at(k, v) /= sum;
    }

    spec.skin_weights = Matrix(V, K);
    for (std::size_t v = 0; v < V; ++v) {
        const std::size_t k = owner[v];
        double wk = 0.75 + 0.2 * rng.uniform();
        if (K == 1) {
            spec.skin_weights.at(v, 0) = 1.0;
            continue;
        }
        const std::size_t other = (k + 1 < K) ? k + 1 : k - 1;
        spec.skin_weights.at(v, k) = wk;
        spec.skin_weights.at(v, other) = 1.0 - wk;
    }

    spec.shape_basis.resize(B);
    for (std::size_t b = 0; b < B; ++b) {
        spec.shape_basis[b] = Matrix(V, 3);
        for (double& d : spec.shape_basis[b].data) d = rng.uniform(-0.01, 0.01);
    }

    // crude strip triangulation, enough for OBJ export of toy meshes
    for (std::size_t v = 0; v + 2 < V; ++v)
        spec.faces.push_back({v, v + 1, v + 2});

    spec.validate();
    return spec;
}

// --- JSON model file -------------------------------------------------------

inline nlohmann::json matrix_to_json(const Matrix& m) {
    return nlohmann::json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw ModelError(path + ": expected {rows, cols, data}");
    Matrix m;
    m.rows = j.at("rows").get<std::size_t>();
    m.cols = j.at("cols").get<std::size_t>();
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols)
        throw ModelError(path + ".data: length does not match rows*cols");
    for (double v : m.data)
        if (!std::isfinite(v)) throw ModelError(path + ".data: non-finite entry");
    return m;
}

inline nlohmann::json body_model_to_json(const BodyModelSpec& spec) {
    nlohmann::json j;
    j["vertex_count"] = spec.vertex_count;
    j["joint_count"] = spec.joint_count;
    j["shape_count"] = spec.shape_count;
    j["template"] = matrix_to_json(spec.template_verts);
    j["shape_basis"] = nlohmann::json::array();
    for (const auto& m : spec.shape_basis) j["shape_basis"].push_back(matrix_to_json(m));
    j["joint_regressor"] = matrix_to_json(spec.joint_regressor);
    j["skin_weights"] = matrix_to_json(spec.skin_weights);
    j["parents"] = spec.parent;
    if (!spec.pose_basis.empty()) {
        j["pose_basis"] = nlohmann::json::array();
        for (const auto& m : spec.pose_basis) j["pose_basis"].push_back(matrix_to_json(m));
    }
    if (!spec.faces.empty()) {
        nlohmann::json f = nlohmann::json::array();
        for (const auto& tri : spec.faces) f.push_back({tri[0], tri[1], tri[2]});
        j["faces"] = std::move(f);
    }
    return j;
}

inline BodyModelSpec body_model_from_json(const nlohmann::json& j) {
    BodyModelSpec spec;
    for (const char* key : {"vertex_count", "joint_count", "shape_count", "template",
                            "joint_regressor", "skin_weights", "parents"})
        if (!j.contains(key)) throw ModelError(std::string(key) + ": missing field");
    spec.vertex_count = j.at("vertex_count").get<std::size_t>();
    spec.joint_count = j.at("joint_count").get<std::size_t>();
    spec.shape_count = j.at("shape_count").get<std::size_t>();
    spec.template_verts = matrix_from_json(j.at("template"), "template");
    if (j.contains("shape_basis")) {
        std::size_t i = 0;
        for (const auto& m : j.at("shape_basis"))
            spec.shape_basis.push_back(matrix_from_json(m, "shape_basis[" + std::to_string(i++) + "]"));
    }
    spec.joint_regressor = matrix_from_json(j.at("joint_regressor"), "joint_regressor");
    spec.skin_weights = matrix_from_json(j.at("skin_weights"), "skin_weights");
    spec.parent = j.at("parents").get<std::vector<int>>();
    if (j.contains("pose_basis")) {
        std::size_t i = 0;
        for (const auto& m : j.at("pose_basis"))
            spec.pose_basis.push_back(matrix_from_json(m, "pose_basis[" + std::to_string(i++) + "]"));
    }
    if (j.contains("faces"))
        for (const auto& f : j.at("faces"))
            spec.faces.push_back({f.at(0).get<std::size_t>(), f.at(1).get<std::size_t>(),
                                  f.at(2).get<std::size_t>()});
    spec.validate();
    return spec;
}

inline void save_body_model(const BodyModelSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ModelError("cannot open " + path + " for writing");
    out << body_model_to_json(spec).dump();
}

inline BodyModelSpec load_body_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return body_model_from_json(j);
}

} // namespace hmr
