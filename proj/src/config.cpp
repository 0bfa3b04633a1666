// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include "motionloss/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace motionloss {

namespace {

int line_of(const YAML::Node &node) { return node.Mark().is_null() ? 0 : node.Mark().line + 1; }

std::string join(const std::string &prefix, const std::string &key) { return prefix.empty() ? key : prefix + "." + key; }

/// Typed access to one mapping, tracking the dotted field path for diagnostics.
class Section {
  public:
    Section(YAML::Node node, std::string path, std::initializer_list<const char *> keys)
        : node_(std::move(node)), path_(std::move(path)) {
        if (!node_.IsMap()) throw ConfigError("expected a mapping", line_of(node_), path_);
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto &kv : node_) {
            const std::string key = kv.first.as<std::string>();
            if (!allowed.count(key)) throw ConfigError("unknown key", line_of(kv.first), join(path_, key));
        }
    }

    bool has(const char *key) const { return bool(node_[key]); }
    YAML::Node node(const char *key) const { return node_[key]; }
    std::string field(const char *key) const { return join(path_, key); }
    int line(const char *key) const { return line_of(node_[key]); }

    template <typename T>
    void read(const char *key, T &out) const {
        const YAML::Node n = node_[key];
        if (!n) return;
        try {
            out = n.as<T>();
        } catch (const YAML::Exception &) {
            throw ConfigError("wrong value type", line_of(n), field(key));
        }
    }

    void read_positive(const char *key, double &out) const {
        read(key, out);
        if (has(key) && !(out > 0)) throw ConfigError("must be positive", line(key), field(key));
    }

    Eigen::Vector3d vector3(const char *key, const Eigen::Vector3d &fallback) const {
        const YAML::Node n = node_[key];
        if (!n) return fallback;
        if (!n.IsSequence() || n.size() != 3) throw ConfigError("expected a list of 3 numbers", line_of(n), field(key));
        Eigen::Vector3d v;
        for (int i = 0; i < 3; ++i) {
            try {
                v[i] = n[i].as<double>();
            } catch (const YAML::Exception &) {
                throw ConfigError("expected a number", line_of(n[i]), field(key));
            }
        }
        return v;
    }

  private:
    YAML::Node node_;
    std::string path_;
};

YAML::Node parse_document(const std::string &text) {
    try {
        YAML::Node root = YAML::Load(text);
        if (!root || root.IsNull()) return YAML::Node(YAML::NodeType::Map);
        return root;
    } catch (const YAML::ParserException &e) {
        throw ConfigError(e.msg, e.mark.line + 1);
    }
}

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

SceneConfig scene_from_node(const YAML::Node &root, const std::string &prefix) {
    SceneConfig cfg;
    const Section top(root, prefix, {"seed", "intrinsics", "background", "objects", "ego_motion", "frame_interval"});
    top.read("seed", cfg.seed);
    top.read_positive("frame_interval", cfg.frame_interval);
    if (top.has("intrinsics")) {
        const Section k(top.node("intrinsics"), top.field("intrinsics"), {"fx", "fy", "cx", "cy", "width", "height"});
        auto &in = cfg.intrinsics;
        k.read_positive("fx", in.fx);
        k.read_positive("fy", in.fy);
        k.read("cx", in.cx);
        k.read("cy", in.cy);
        k.read("width", in.width);
        k.read("height", in.height);
        if (in.width < 4 || in.height < 4) throw ConfigError("image must be at least 4x4", line_of(top.node("intrinsics")), k.field("width"));
    }
    if (top.has("background")) {
        const Section b(top.node("background"), top.field("background"), {"kind", "depth", "slope", "texture"});
        std::string kind = cfg.background.kind == BackgroundKind::kPlane ? "plane" : "ramp";
        b.read("kind", kind);
        if (kind == "plane") {
            cfg.background.kind = BackgroundKind::kPlane;
        } else if (kind == "ramp") {
            cfg.background.kind = BackgroundKind::kRamp;
        } else {
            throw ConfigError("expected plane or ramp", b.line("kind"), b.field("kind"));
        }
        b.read_positive("depth", cfg.background.depth);
        b.read("slope", cfg.background.slope);
        b.read("texture", cfg.background.texture);
        if (cfg.background.kind == BackgroundKind::kPlane && cfg.background.slope != 0)
            throw ConfigError("a plane background has no slope", b.line("slope"), b.field("slope"));
    }
    if (top.has("ego_motion")) {
        const Section e(top.node("ego_motion"), top.field("ego_motion"), {"rotation", "translation"});
        cfg.ego_motion = Pose<double>::from_euler(e.vector3("rotation", Eigen::Vector3d::Zero()),
                                                  e.vector3("translation", Eigen::Vector3d::Zero()));
    }
    if (top.has("objects")) {
        const YAML::Node list = top.node("objects");
        if (!list.IsSequence()) throw ConfigError("expected a list", line_of(list), top.field("objects"));
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string path = top.field("objects") + "[" + std::to_string(i) + "]";
            const Section o(list[i], path, {"class_id", "center", "width", "height", "velocity", "texture"});
            Billboard b;
            b.texture = int(i) + 1;
            o.read("class_id", b.class_id);
            b.center = o.vector3("center", b.center);
            o.read_positive("width", b.width);
            o.read_positive("height", b.height);
            b.velocity = o.vector3("velocity", b.velocity);
            o.read("texture", b.texture);
            if (b.class_id < 0 || b.class_id > 255) throw ConfigError("must be in 0..255", o.line("class_id"), o.field("class_id"));
            cfg.objects.push_back(b);
        }
    }
    try {
        cfg.validate();
    } catch (const ContractViolation &e) {
        throw ConfigError(e.what(), line_of(root), prefix);
    }
    return cfg;
}

void read_optim(const Section &parent, const char *key, OptimConfig &cfg) {
    if (!parent.has(key)) return;
    const Section s(parent.node(key), parent.field(key),
                    {"step_size", "iterations", "d_min", "d_max", "init_depth", "method", "mlra_window",
                     "divergence_patience", "gradient", "fd_step", "adam_epsilon"});
    s.read_positive("step_size", cfg.step_size);
    s.read("iterations", cfg.max_iterations);
    s.read_positive("d_min", cfg.d_min);
    s.read_positive("d_max", cfg.d_max);
    s.read_positive("init_depth", cfg.teacher_init_depth);
    s.read("mlra_window", cfg.mlra_window);
    s.read("divergence_patience", cfg.divergence_patience);
    s.read_positive("fd_step", cfg.fd_step);
    s.read_positive("adam_epsilon", cfg.adam_epsilon);
    if (s.has("method")) {
        std::string m;
        s.read("method", m);
        if (m == "adam") {
            cfg.method = StepMethod::kAdam;
        } else if (m == "gd") {
            cfg.method = StepMethod::kGradientDescent;
        } else {
            throw ConfigError("expected adam or gd", s.line("method"), s.field("method"));
        }
    }
    if (s.has("gradient")) {
        std::string g;
        s.read("gradient", g);
        if (g == "analytic") {
            cfg.gradient = GradientMode::kAnalytic;
        } else if (g == "finite_difference") {
            cfg.gradient = GradientMode::kFiniteDifference;
        } else {
            throw ConfigError("expected analytic or finite_difference", s.line("gradient"), s.field("gradient"));
        }
    }
    try {
        cfg.validate();
    } catch (const ContractViolation &e) {
        throw ConfigError(e.what(), line_of(parent.node(key)), parent.field(key));
    }
}

const char *method_name(StepMethod m) { return m == StepMethod::kAdam ? "adam" : "gd"; }
const char *gradient_name(GradientMode g) { return g == GradientMode::kAnalytic ? "analytic" : "finite_difference"; }

void emit_vector(YAML::Emitter &out, const char *key, const Eigen::Vector3d &v) {
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq << v.x() << v.y() << v.z() << YAML::EndSeq;
}

void emit_scene(YAML::Emitter &out, const SceneConfig &cfg) {
    out << YAML::BeginMap;
    out << YAML::Key << "seed" << YAML::Value << cfg.seed;
    out << YAML::Key << "frame_interval" << YAML::Value << cfg.frame_interval;
    const auto &k = cfg.intrinsics;
    out << YAML::Key << "intrinsics" << YAML::Value << YAML::BeginMap << YAML::Key << "fx" << YAML::Value << k.fx
        << YAML::Key << "fy" << YAML::Value << k.fy << YAML::Key << "cx" << YAML::Value << k.cx << YAML::Key << "cy"
        << YAML::Value << k.cy << YAML::Key << "width" << YAML::Value << k.width << YAML::Key << "height"
        << YAML::Value << k.height << YAML::EndMap;
    const auto &b = cfg.background;
    out << YAML::Key << "background" << YAML::Value << YAML::BeginMap << YAML::Key << "kind" << YAML::Value
        << (b.kind == BackgroundKind::kPlane ? "plane" : "ramp") << YAML::Key << "depth" << YAML::Value << b.depth
        << YAML::Key << "slope" << YAML::Value << b.slope << YAML::Key << "texture" << YAML::Value << b.texture
        << YAML::EndMap;
    out << YAML::Key << "ego_motion" << YAML::Value << YAML::BeginMap;
    emit_vector(out, "rotation", cfg.ego_motion.euler());
    emit_vector(out, "translation", cfg.ego_motion.translation());
    out << YAML::EndMap;
    out << YAML::Key << "objects" << YAML::Value << YAML::BeginSeq;
    for (const auto &o : cfg.objects) {
        out << YAML::BeginMap << YAML::Key << "class_id" << YAML::Value << o.class_id;
        emit_vector(out, "center", o.center);
        out << YAML::Key << "width" << YAML::Value << o.width << YAML::Key << "height" << YAML::Value << o.height;
        emit_vector(out, "velocity", o.velocity);
        out << YAML::Key << "texture" << YAML::Value << o.texture << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
}

void emit_optim(YAML::Emitter &out, const char *key, const OptimConfig &c) {
    out << YAML::Key << key << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "step_size" << YAML::Value << c.step_size << YAML::Key << "iterations" << YAML::Value
        << c.max_iterations << YAML::Key << "d_min" << YAML::Value << c.d_min << YAML::Key << "d_max" << YAML::Value
        << c.d_max << YAML::Key << "init_depth" << YAML::Value << c.teacher_init_depth << YAML::Key << "method"
        << YAML::Value << method_name(c.method) << YAML::Key << "mlra_window" << YAML::Value << c.mlra_window
        << YAML::Key << "divergence_patience" << YAML::Value << c.divergence_patience << YAML::Key << "gradient"
        << YAML::Value << gradient_name(c.gradient) << YAML::Key << "fd_step" << YAML::Value << c.fd_step
        << YAML::Key << "adam_epsilon" << YAML::Value << c.adam_epsilon;
    out << YAML::EndMap;
}

} // namespace

SceneConfig parse_scene_config(const std::string &text) { return scene_from_node(parse_document(text), ""); }

SceneConfig load_scene_config(const std::filesystem::path &path) { return parse_scene_config(read_file(path)); }

std::string scene_config_yaml(const SceneConfig &cfg) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    emit_scene(out, cfg);
    return std::string(out.c_str()) + "\n";
}

RunConfig parse_run_config(const std::string &text, const std::filesystem::path &base_dir) {
    const YAML::Node root = parse_document(text);
    const Section top(root, "",
                      {"scene", "family", "seed", "scenes", "loss_mode", "weight_mode", "output", "dump_images",
                       "cost_volume", "teacher", "student"});
    RunConfig cfg;
    if (top.has("scene")) {
        const YAML::Node n = top.node("scene");
        if (n.IsScalar()) {
            std::filesystem::path p = n.as<std::string>();
            if (p.is_relative()) p = base_dir / p;
            try {
                cfg.scene = load_scene_config(p);
            } catch (const ConfigError &e) {
                throw ConfigError(std::string("in ") + p.string() + ": " + e.what(), line_of(n), "scene");
            }
        } else {
            cfg.scene = scene_from_node(n, "scene");
        }
    }
    if (top.has("family")) {
        std::string f;
        top.read("family", f);
        if (f == "static") {
            cfg.family = SceneFamily::kStatic;
        } else if (f == "dynamic") {
            cfg.family = SceneFamily::kDynamic;
        } else {
            throw ConfigError("expected static or dynamic", top.line("family"), "family");
        }
    }
    top.read("seed", cfg.seed);
    top.read("scenes", cfg.scenes);
    if (cfg.scenes < 1) throw ConfigError("must be at least 1", top.line("scenes"), "scenes");
    const auto mode = [&](const char *key, auto parse, auto &out) {
        if (!top.has(key)) return;
        std::string text;
        top.read(key, text);
        try {
            out = parse(text);
        } catch (const ConfigError &e) {
            throw ConfigError(e.what(), top.line(key), key);
        }
    };
    mode("loss_mode", parse_loss_mode, cfg.loss);
    mode("weight_mode", parse_weight_mode, cfg.weights);
    if (top.has("output")) {
        std::string out;
        top.read("output", out);
        cfg.output = out;
    }
    top.read("dump_images", cfg.dump_images);
    if (top.has("cost_volume")) {
        const Section c(top.node("cost_volume"), "cost_volume", {"planes", "d_min", "d_max"});
        c.read("planes", cfg.pipeline.planes.count);
        c.read_positive("d_min", cfg.pipeline.planes.d_min);
        c.read_positive("d_max", cfg.pipeline.planes.d_max);
        try {
            cfg.pipeline.planes.validate();
        } catch (const ContractViolation &e) {
            throw ConfigError(e.what(), top.line("cost_volume"), "cost_volume");
        }
    }
    read_optim(top, "teacher", cfg.pipeline.teacher);
    read_optim(top, "student", cfg.pipeline.student);
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path &path) {
    return parse_run_config(read_file(path), path.parent_path());
}

std::string run_config_yaml(const RunConfig &cfg) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    if (cfg.scene) {
        out << YAML::Key << "scene" << YAML::Value;
        emit_scene(out, *cfg.scene);
    }
    out << YAML::Key << "family" << YAML::Value << (cfg.family == SceneFamily::kStatic ? "static" : "dynamic");
    out << YAML::Key << "seed" << YAML::Value << cfg.seed << YAML::Key << "scenes" << YAML::Value << cfg.scenes;
    out << YAML::Key << "loss_mode" << YAML::Value << std::string(to_string(cfg.loss));
    out << YAML::Key << "weight_mode" << YAML::Value << std::string(to_string(cfg.weights));
    out << YAML::Key << "output" << YAML::Value << cfg.output.string();
    out << YAML::Key << "dump_images" << YAML::Value << cfg.dump_images;
    const auto &p = cfg.pipeline.planes;
    out << YAML::Key << "cost_volume" << YAML::Value << YAML::BeginMap << YAML::Key << "planes" << YAML::Value
        << p.count << YAML::Key << "d_min" << YAML::Value << p.d_min << YAML::Key << "d_max" << YAML::Value << p.d_max
        << YAML::EndMap;
    emit_optim(out, "teacher", cfg.pipeline.teacher);
    emit_optim(out, "student", cfg.pipeline.student);
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

} // namespace motionloss
