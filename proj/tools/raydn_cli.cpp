// SPDX-License-Identifier: Apache-2.0
// Operator surface for the ray-denoising laboratory: scene generation, query
// inspection, training, evaluation, sampling diagnostics, and plots.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "raydn/beta_sampler.hpp"
#include "raydn/error.hpp"
#include "raydn/eval.hpp"
#include "raydn/run_config.hpp"
#include "raydn/run_pipeline.hpp"
#include "raydn/special_functions.hpp"

namespace fs = std::filesystem;
using namespace raydn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitVersion = 4;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

RunConfig load_config(const Common& c) {
  RunConfig cfg;
  if (!c.config_path.empty()) cfg = load_run_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  validate(cfg);
  return cfg;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  f << content;
  if (!f) throw IoError("write failed: " + path);
}

int cmd_gen_scenes(const Common& common, std::size_t count,
                   std::uint64_t stream_offset, const std::string& out_dir,
                   bool force) {
  const RunConfig cfg = load_config(common);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory: " + out_dir);

  const auto scenes = generate_scenes(cfg, count, stream_offset);
  for (const auto& scene : scenes) {
    const std::string path = out_dir + "/" + scene.scene_id + ".json";
    if (!force && fs::exists(path))
      throw IoError("refusing to overwrite without --force: " + path);
    save_scene(scene, path);
  }
  std::printf("wrote %zu scenes to %s\n", scenes.size(), out_dir.c_str());
  return kExitOk;
}

int cmd_build_queries(const Common& common, const std::string& scene_path,
                      const std::string& out_path) {
  const RunConfig cfg = load_config(common);
  const Scene scene = load_scene(scene_path);
  const SeededRng root = SeededRng::substream(cfg.seed, 3);
  const BuildAllResult built = build_all(scene.rig, scene.boxes, cfg.ray, root);

  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "# ray query groups: scene=%s lambda=%.17g mu=%.17g k=%.17g "
                "n=%zu seed=%llu\n",
                scene.scene_id.c_str(), cfg.ray.params.lambda, cfg.ray.params.mu,
                cfg.ray.radius_k, cfg.ray.n_per_ray,
                static_cast<unsigned long long>(cfg.seed));
  os << buf << "# groups=" << built.groups.size()
     << " skipped_boxes=" << built.skipped_boxes << "\n";
  for (std::size_t i = 0; i < built.groups.size(); ++i) {
    const auto& g = built.groups[i];
    std::snprintf(buf, sizeof buf, "group %zu: gt=%zu cam=%zu class=%d\n", i,
                  g.gt_index, g.camera_index, g.target.class_id);
    os << buf;
    for (std::size_t p = 0; p < g.ref_points.size(); ++p) {
      std::snprintf(buf, sizeof buf,
                    "  point %zu: x=%.17g y=%.17g z=%.17g depth=%.17g label=%s\n",
                    p, g.ref_points[p].x, g.ref_points[p].y, g.ref_points[p].z,
                    g.depths[p], g.positive[p] ? "pos" : "neg");
      os << buf;
    }
  }
  if (out_path.empty()) {
    std::fputs(os.str().c_str(), stdout);
  } else {
    write_text(out_path, os.str());
  }
  return kExitOk;
}

int cmd_train(const Common& common, const std::string& scenes_dir, bool with_beam,
              const std::string& out_model, const std::string& loss_log) {
  const RunConfig cfg = load_config(common);
  const auto scenes = load_scene_dir(scenes_dir);
  const std::string diag_dir = fs::path(out_model).parent_path().string();
  const TrainOutcome outcome =
      train_model(cfg, scenes, with_beam, diag_dir.empty() ? "." : diag_dir);
  outcome.model.save(out_model);
  if (!loss_log.empty()) write_text(loss_log, loss_log_csv(outcome.log));
  std::printf("trained %zu steps (beam=%d), final loss %.6f, model %s\n",
              cfg.train.steps, with_beam ? 1 : 0,
              outcome.log.empty() ? 0.0 : outcome.log.back().total,
              out_model.c_str());
  return kExitOk;
}

int cmd_eval(const Common& common, const std::string& model_path,
             const std::string& scenes_dir, const std::string& out_dir,
             std::optional<double> score_floor) {
  RunConfig cfg = load_config(common);
  if (score_floor) cfg.eval.score_floor = *score_floor;
  validate(cfg);
  const ToyModel model = ToyModel::load(model_path, cfg.decoder);
  const auto scenes = load_scene_dir(scenes_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory: " + out_dir);

  const auto dets = run_inference(model, scenes, cfg);
  const EvalReport report = evaluate_detections(dets, scenes, cfg.eval);
  save_detections(dets, out_dir + "/detections.json");
  emit_report(report, out_dir);
  std::printf("mAP %.6f, ray_duplicate_rate %.6f, %zu detections, report in %s\n",
              report.map, report.ray_duplicate_rate, dets.size(), out_dir.c_str());
  return kExitOk;
}

int cmd_beta_sample(double lambda, double mu, std::size_t n, std::uint64_t seed,
                    const std::string& out_csv, const std::string& out_svg) {
  const BetaParams params{lambda, mu};
  validate(params);
  if (n == 0) throw DomainError("--n must be >= 1");
  SeededRng rng = SeededRng::substream(seed, 7);
  const auto draws = sample_beta(rng, params, n);

  std::string csv = "index,beta,offset\n";
  char buf[96];
  for (std::size_t i = 0; i < draws.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, draws[i],
                  2.0 * draws[i] - 1.0);
    csv += buf;
  }
  write_text(out_csv, csv);

  if (!out_svg.empty()) {
    // Histogram of shifted offsets in [-1, 1] with the analytic density
    // overlay: pdf_y(y) = beta_pdf((y+1)/2) / 2.
    constexpr int kBins = 40;
    std::vector<double> hist(kBins, 0.0);
    for (double x : draws) {
      int b = static_cast<int>((x * 2.0 - 1.0 + 1.0) / 2.0 * kBins);
      b = std::min(std::max(b, 0), kBins - 1);
      hist[static_cast<std::size_t>(b)] += 1.0;
    }
    const double binw = 2.0 / kBins;
    for (double& h : hist) h /= static_cast<double>(n) * binw;  // density

    const double W = 480, H = 320, L = 45, B = 35, T = 15, R = 15;
    const double pw = W - L - R, ph = H - T - B;
    double ymax = 1e-9;
    for (double h : hist) ymax = std::max(ymax, h);
    std::vector<std::pair<double, double>> pdf;
    for (int i = 0; i <= 200; ++i) {
      const double y = -1.0 + 2.0 * i / 200.0;
      const double x = (y + 1.0) / 2.0;
      double d = 0.0;
      if (x > 0.0 && x < 1.0) d = beta_pdf(x, params) / 2.0;
      if (std::isfinite(d)) {
        ymax = std::max(ymax, d);
        pdf.emplace_back(y, d);
      }
    }
    auto px = [&](double y) { return L + (y + 1.0) / 2.0 * pw; };
    auto py = [&](double d) { return H - B - d / ymax * ph; };
    std::string s =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"320\" "
        "viewBox=\"0 0 480 320\">\n<rect width=\"480\" height=\"320\" "
        "fill=\"white\"/>\n";
    for (int b = 0; b < kBins; ++b) {
      const double y0 = -1.0 + b * binw;
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%.3f\" y=\"%.3f\" width=\"%.3f\" height=\"%.3f\" "
                    "fill=\"#a6cee3\"/>\n",
                    px(y0), py(hist[static_cast<std::size_t>(b)]),
                    pw / kBins - 0.5,
                    H - B - py(hist[static_cast<std::size_t>(b)]));
      s += buf;
    }
    s += "<polyline fill=\"none\" stroke=\"#e31a1c\" stroke-width=\"1.5\" points=\"";
    for (const auto& [y, d] : pdf) {
      std::snprintf(buf, sizeof buf, "%.3f,%.3f ", px(y), py(d));
      s += buf;
    }
    s += "\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.0f\" y=\"%.0f\" font-size=\"11\">offset in "
                  "[-1,1], Beta(%.3g, %.3g)</text>\n",
                  L, H - 8.0, lambda, mu);
    s += buf;
    s += "<line x1=\"45\" y1=\"285\" x2=\"465\" y2=\"285\" stroke=\"black\"/>\n";
    s += "</svg>\n";
    write_text(out_svg, s);
  }
  std::printf("wrote %zu draws to %s\n", n, out_csv.c_str());
  return kExitOk;
}

int cmd_plot(const std::string& curves_csv, const std::string& out_svg) {
  std::ifstream f(curves_csv);
  if (!f) throw IoError("cannot open: " + curves_csv);
  std::string line;
  if (!std::getline(f, line) || line != "class_id,threshold,recall,precision")
    throw ConfigError("unexpected pr_curves.csv header in " + curves_csv);
  std::vector<PrCurve> curves;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    PrCurve row;
    double rec = 0.0, prec = 0.0;
    std::getline(ls, cell, ',');
    row.class_id = std::stoi(cell);
    std::getline(ls, cell, ',');
    row.threshold = std::stod(cell);
    std::getline(ls, cell, ',');
    rec = std::stod(cell);
    std::getline(ls, cell, ',');
    prec = std::stod(cell);
    if (!curves.empty() && curves.back().class_id == row.class_id &&
        curves.back().threshold == row.threshold) {
      curves.back().recall.push_back(rec);
      curves.back().precision.push_back(prec);
    } else {
      row.recall.push_back(rec);
      row.precision.push_back(prec);
      curves.push_back(std::move(row));
    }
  }
  write_text(out_svg, pr_curves_svg(curves));
  std::printf("wrote %s\n", out_svg.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beta-distribution ray denoising laboratory"};
  app.require_subcommand(1);

  Common common;
  std::uint64_t seed_flag = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Run configuration JSON");
    sub->add_option("--seed", seed_flag, "Override the config seed")
        ->each([&](const std::string&) { common.seed = seed_flag; });
  };

  // gen-scenes
  auto* gen = app.add_subcommand("gen-scenes", "Generate synthetic scene files");
  std::size_t gen_count = 16;
  std::uint64_t gen_offset = 0;
  std::string gen_out = "scenes";
  bool gen_force = false;
  add_common(gen);
  gen->add_option("--count", gen_count, "Number of scenes");
  gen->add_option("--stream-offset", gen_offset,
                  "Scene stream offset (disjoint splits from one seed)");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_flag("--force", gen_force, "Overwrite existing scene files");

  // build-queries
  auto* bq = app.add_subcommand("build-queries",
                                "Dump ray-denoising query groups for a scene");
  std::string bq_scene, bq_out;
  add_common(bq);
  bq->add_option("--scene", bq_scene, "Scene JSON file")->required();
  bq->add_option("--out", bq_out, "Output text file (stdout when omitted)");

  // train
  auto* tr = app.add_subcommand("train", "Train the toy detector");
  std::string tr_scenes, tr_model = "model.bin", tr_log;
  bool tr_beam = false;
  add_common(tr);
  tr->add_option("--scenes-dir", tr_scenes, "Directory of scene_*.json")->required();
  tr->add_option("--out-model", tr_model, "Output model file");
  tr->add_option("--loss-log", tr_log, "Per-step loss CSV");
  tr->add_flag("--with-beam", tr_beam, "Enable beta-distribution ray denoising");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a trained model");
  std::string ev_model, ev_scenes, ev_out = "report";
  double ev_floor = -1.0;
  bool ev_floor_set = false;
  add_common(ev);
  ev->add_option("--model", ev_model, "Model file")->required();
  ev->add_option("--scenes-dir", ev_scenes, "Directory of scene_*.json")->required();
  ev->add_option("--out", ev_out, "Report directory");
  ev->add_option("--score-floor", ev_floor, "Inference score threshold")
      ->each([&](const std::string&) { ev_floor_set = true; });

  // beta-sample
  auto* bs = app.add_subcommand("beta-sample", "Draw Beta samples to CSV");
  double bs_lambda = 8.0, bs_mu = 2.0;
  std::size_t bs_n = 1000;
  std::uint64_t bs_seed = 1;
  std::string bs_out = "beta_samples.csv", bs_svg;
  bs->add_option("--lambda", bs_lambda, "Beta lambda (alpha) parameter");
  bs->add_option("--mu", bs_mu, "Beta mu (beta) parameter");
  bs->add_option("--n", bs_n, "Number of draws");
  bs->add_option("--seed", bs_seed, "RNG seed");
  bs->add_option("--out", bs_out, "Output CSV path");
  bs->add_option("--svg", bs_svg, "Optional histogram + density SVG");

  // plot
  auto* pl = app.add_subcommand("plot", "Re-render PR curves SVG from CSV");
  std::string pl_csv, pl_out = "pr_curves.svg";
  pl->add_option("--curves", pl_csv, "pr_curves.csv produced by eval")->required();
  pl->add_option("--out", pl_out, "Output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (gen->parsed())
      return cmd_gen_scenes(common, gen_count, gen_offset, gen_out, gen_force);
    if (bq->parsed()) return cmd_build_queries(common, bq_scene, bq_out);
    if (tr->parsed()) return cmd_train(common, tr_scenes, tr_beam, tr_model, tr_log);
    if (ev->parsed())
      return cmd_eval(common, ev_model, ev_scenes, ev_out,
                      ev_floor_set ? std::optional<double>(ev_floor)
                                   : std::nullopt);
    if (bs->parsed())
      return cmd_beta_sample(bs_lambda, bs_mu, bs_n, bs_seed, bs_out, bs_svg);
    if (pl->parsed()) return cmd_plot(pl_csv, pl_out);
  } catch (const VersionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitVersion;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
  return kExitOk;
}
