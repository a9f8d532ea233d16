// SPDX-License-Identifier: Apache-2.0
#include "raydn/run_config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "raydn/error.hpp"

namespace raydn {
namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

void reject_unknown(const json& j, const std::vector<std::string>& known,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void get_to(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

json ray_to_json(const RaySpec& r) {
  return {{"lambda", r.params.lambda},
          {"mu", r.params.mu},
          {"radius_k", r.radius_k},
          {"n_per_ray", r.n_per_ray}};
}

RaySpec ray_from_json(const json& j) {
  reject_unknown(j, {"lambda", "mu", "radius_k", "n_per_ray"}, "ray");
  RaySpec r;
  get_to(j, "lambda", r.params.lambda);
  get_to(j, "mu", r.params.mu);
  get_to(j, "radius_k", r.radius_k);
  get_to(j, "n_per_ray", r.n_per_ray);
  return r;
}

json decoder_to_json(const DecoderConfig& d) {
  return {{"embed_dim", d.embed_dim},
          {"n_heads", d.n_heads},
          {"n_layers", d.n_layers},
          {"n_obj_queries", d.n_obj_queries},
          {"hidden_dim", d.hidden_dim},
          {"n_classes", d.n_classes},
          {"perception_range", d.perception_range}};
}

DecoderConfig decoder_from_json(const json& j) {
  reject_unknown(j,
                 {"embed_dim", "n_heads", "n_layers", "n_obj_queries",
                  "hidden_dim", "n_classes", "perception_range"},
                 "decoder");
  DecoderConfig d;
  get_to(j, "embed_dim", d.embed_dim);
  get_to(j, "n_heads", d.n_heads);
  get_to(j, "n_layers", d.n_layers);
  get_to(j, "n_obj_queries", d.n_obj_queries);
  get_to(j, "hidden_dim", d.hidden_dim);
  get_to(j, "n_classes", d.n_classes);
  get_to(j, "perception_range", d.perception_range);
  return d;
}

json scenegen_to_json(const SceneGenParams& s) {
  return {{"n_cameras", s.n_cameras},
          {"camera_radius", s.camera_radius},
          {"image_width", s.image_width},
          {"image_height", s.image_height},
          {"focal", s.focal},
          {"grid_w", s.grid_w},
          {"grid_h", s.grid_h},
          {"n_boxes_min", s.n_boxes_min},
          {"n_boxes_max", s.n_boxes_max},
          {"class_count", s.class_count},
          {"min_separation", s.min_separation},
          {"min_radius", s.min_radius},
          {"size_min", s.size_min},
          {"size_max", s.size_max},
          {"pair_prob", s.pair_prob},
          {"pair_scale_min", s.pair_scale_min},
          {"pair_scale_max", s.pair_scale_max}};
}

SceneGenParams scenegen_from_json(const json& j) {
  reject_unknown(j,
                 {"n_cameras", "camera_radius", "image_width", "image_height",
                  "focal", "grid_w", "grid_h", "n_boxes_min", "n_boxes_max",
                  "class_count", "min_separation", "min_radius", "size_min",
                  "size_max", "pair_prob", "pair_scale_min", "pair_scale_max"},
                 "scenegen");
  SceneGenParams s;
  get_to(j, "n_cameras", s.n_cameras);
  get_to(j, "camera_radius", s.camera_radius);
  get_to(j, "image_width", s.image_width);
  get_to(j, "image_height", s.image_height);
  get_to(j, "focal", s.focal);
  get_to(j, "grid_w", s.grid_w);
  get_to(j, "grid_h", s.grid_h);
  get_to(j, "n_boxes_min", s.n_boxes_min);
  get_to(j, "n_boxes_max", s.n_boxes_max);
  get_to(j, "class_count", s.class_count);
  get_to(j, "min_separation", s.min_separation);
  get_to(j, "min_radius", s.min_radius);
  get_to(j, "size_min", s.size_min);
  get_to(j, "size_max", s.size_max);
  get_to(j, "pair_prob", s.pair_prob);
  get_to(j, "pair_scale_min", s.pair_scale_min);
  get_to(j, "pair_scale_max", s.pair_scale_max);
  return s;
}

json train_to_json(const TrainParams& t) {
  return {{"steps", t.steps},
          {"batch_size", t.batch_size},
          {"lr", t.lr},
          {"weight_decay", t.weight_decay},
          {"focal_gamma", t.focal_gamma},
          {"focal_alpha", t.focal_alpha},
          {"w_cls", t.w_cls},
          {"w_box", t.w_box},
          {"w_denoise", t.w_denoise},
          {"match_box_cost", t.match_box_cost}};
}

TrainParams train_from_json(const json& j) {
  reject_unknown(j,
                 {"steps", "batch_size", "lr", "weight_decay", "focal_gamma",
                  "focal_alpha", "w_cls", "w_box", "w_denoise", "match_box_cost"},
                 "train");
  TrainParams t;
  get_to(j, "steps", t.steps);
  get_to(j, "batch_size", t.batch_size);
  get_to(j, "lr", t.lr);
  get_to(j, "weight_decay", t.weight_decay);
  get_to(j, "focal_gamma", t.focal_gamma);
  get_to(j, "focal_alpha", t.focal_alpha);
  get_to(j, "w_cls", t.w_cls);
  get_to(j, "w_box", t.w_box);
  get_to(j, "w_denoise", t.w_denoise);
  get_to(j, "match_box_cost", t.match_box_cost);
  return t;
}

json eval_to_json(const EvalConfig& e) {
  return {{"distance_thresholds", e.distance_thresholds},
          {"ray_angle_eps", e.ray_angle_eps},
          {"recall_points", e.recall_points},
          {"score_floor", e.score_floor},
          {"duplicate_threshold", e.duplicate_threshold}};
}

EvalConfig eval_from_json(const json& j) {
  reject_unknown(j,
                 {"distance_thresholds", "ray_angle_eps", "recall_points",
                  "score_floor", "duplicate_threshold"},
                 "eval");
  EvalConfig e;
  get_to(j, "distance_thresholds", e.distance_thresholds);
  get_to(j, "ray_angle_eps", e.ray_angle_eps);
  get_to(j, "recall_points", e.recall_points);
  get_to(j, "score_floor", e.score_floor);
  get_to(j, "duplicate_threshold", e.duplicate_threshold);
  return e;
}

json parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j;
}

void check_schema(const json& j, const std::string& where) {
  if (!j.contains("schema_version"))
    throw ConfigError(where + ": missing schema_version");
  if (j.at("schema_version").get<int>() != kSchemaVersion)
    throw VersionError(where + ": unsupported schema_version");
}

void write_json(const json& j, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  f << j.dump(2) << "\n";
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace

void validate(const RunConfig& cfg) {
  validate(cfg.ray);
  validate(cfg.decoder);
  validate(cfg.scenegen);
  validate(cfg.train);
  validate(cfg.eval);
  if (cfg.scenegen.class_count != cfg.decoder.n_classes)
    throw ConfigError("scenegen.class_count must equal decoder.n_classes");
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j{{"schema_version", kSchemaVersion},
         {"seed", cfg.seed},
         {"ray", ray_to_json(cfg.ray)},
         {"decoder", decoder_to_json(cfg.decoder)},
         {"scenegen", scenegen_to_json(cfg.scenegen)},
         {"train", train_to_json(cfg.train)},
         {"eval", eval_to_json(cfg.eval)}};
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  reject_unknown(
      j, {"schema_version", "seed", "ray", "decoder", "scenegen", "train", "eval"},
      "config");
  check_schema(j, "config");
  RunConfig cfg;
  get_to(j, "seed", cfg.seed);
  if (j.contains("ray")) cfg.ray = ray_from_json(j.at("ray"));
  if (j.contains("decoder")) cfg.decoder = decoder_from_json(j.at("decoder"));
  if (j.contains("scenegen")) cfg.scenegen = scenegen_from_json(j.at("scenegen"));
  if (j.contains("train")) cfg.train = train_from_json(j.at("train"));
  if (j.contains("eval")) cfg.eval = eval_from_json(j.at("eval"));
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return run_config_from_json(text);
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  f << run_config_to_json(cfg);
  if (!f) throw IoError("write failed: " + path);
}

void save_scene(const Scene& scene, const std::string& path) {
  json cams = json::array();
  for (const auto& cam : scene.rig) {
    cams.push_back({{"matrix", cam.world_to_frustum().m},
                    {"width", cam.image_width()},
                    {"height", cam.image_height()}});
  }
  json boxes = json::array();
  for (const auto& b : scene.boxes) {
    boxes.push_back({{"center", std::array<double, 3>{b.center.x, b.center.y,
                                                      b.center.z}},
                     {"size", std::array<double, 3>{b.w, b.h, b.l}},
                     {"yaw", b.yaw},
                     {"class_id", b.class_id}});
  }
  json j{{"schema_version", kSchemaVersion},
         {"scene_id", scene.scene_id},
         {"cameras", cams},
         {"boxes", boxes},
         {"colinear_pairs", scene.colinear_pairs}};
  write_json(j, path);
}

Scene load_scene(const std::string& path) {
  const json j = parse_file(path);
  reject_unknown(
      j, {"schema_version", "scene_id", "cameras", "boxes", "colinear_pairs"},
      path);
  check_schema(j, path);
  Scene scene;
  j.at("scene_id").get_to(scene.scene_id);
  get_to(j, "colinear_pairs", scene.colinear_pairs);
  for (const auto& cj : j.at("cameras")) {
    reject_unknown(cj, {"matrix", "width", "height"}, path + ": camera");
    Mat4 m;
    cj.at("matrix").get_to(m.m);
    scene.rig.emplace_back(m, cj.at("width").get<int>(),
                           cj.at("height").get<int>());
  }
  for (const auto& bj : j.at("boxes")) {
    reject_unknown(bj, {"center", "size", "yaw", "class_id"}, path + ": box");
    GroundTruthBox b;
    std::array<double, 3> c{}, s{};
    bj.at("center").get_to(c);
    bj.at("size").get_to(s);
    b.center = {c[0], c[1], c[2]};
    b.w = s[0];
    b.h = s[1];
    b.l = s[2];
    bj.at("yaw").get_to(b.yaw);
    bj.at("class_id").get_to(b.class_id);
    validate(b);
    scene.boxes.push_back(b);
  }
  return scene;
}

std::vector<Scene> load_scene_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("scene_", 0) == 0 && entry.path().extension() == ".json")
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no scene_*.json files in: " + dir);
  std::vector<Scene> scenes;
  scenes.reserve(files.size());
  for (const auto& f : files) scenes.push_back(load_scene(f));
  return scenes;
}

void save_detections(const std::vector<Detection>& dets, const std::string& path) {
  json list = json::array();
  for (const auto& d : dets) {
    list.push_back({{"scene_id", d.scene_id},
                    {"class_id", d.class_id},
                    {"center", std::array<double, 3>{d.center.x, d.center.y,
                                                     d.center.z}},
                    {"size", std::array<double, 3>{d.w, d.h, d.l}},
                    {"yaw", d.yaw},
                    {"score", d.score}});
  }
  write_json({{"schema_version", kSchemaVersion}, {"detections", list}}, path);
}

std::vector<Detection> load_detections(const std::string& path) {
  const json j = parse_file(path);
  reject_unknown(j, {"schema_version", "detections"}, path);
  check_schema(j, path);
  std::vector<Detection> dets;
  for (const auto& dj : j.at("detections")) {
    reject_unknown(dj, {"scene_id", "class_id", "center", "size", "yaw", "score"},
                   path + ": detection");
    Detection d;
    dj.at("scene_id").get_to(d.scene_id);
    dj.at("class_id").get_to(d.class_id);
    std::array<double, 3> c{}, s{};
    dj.at("center").get_to(c);
    dj.at("size").get_to(s);
    d.center = {c[0], c[1], c[2]};
    d.w = s[0];
    d.h = s[1];
    d.l = s[2];
    dj.at("yaw").get_to(d.yaw);
    dj.at("score").get_to(d.score);
    dets.push_back(std::move(d));
  }
  return dets;
}

}  // namespace raydn
