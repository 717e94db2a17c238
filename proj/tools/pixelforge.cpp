#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "pixelforge/commands.hpp"
#include "pixelforge/dataset.hpp"
#include "pixelforge/errors.hpp"
#include "pixelforge/grid_io.hpp"

using namespace pixelforge;
using nlohmann::ordered_json;

namespace {

struct Globals {
  std::uint64_t seed = kDefaultSeed;
  bool seed_given = false;
  std::optional<std::string> config;
  unsigned threads = 1;
  std::string log_level = "info";
};

std::pair<std::uint64_t, std::uint64_t> parse_schedule_step(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) throw ArgumentError("--schedule-step expects t/T");
  try {
    return {std::stoull(s.substr(0, slash)), std::stoull(s.substr(slash + 1))};
  } catch (const std::exception&) {
    throw ArgumentError("--schedule-step expects t/T, got '" + s + "'");
  }
}

Split cli_split(const std::string& s) {
  if (s != "train" && s != "val" && s != "test") throw ArgumentError("--split must be train, val or test");
  return parse_split(s);
}

void print(const ordered_json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pixelforge: tag-composition rasters, toy region-text alignment and control rasters"};
  app.require_subcommand(1);
  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "random seed (default 42)");
  app.add_option("--config", g.config, "key = value training config file");
  app.add_option("--threads", g.threads, "worker threads for tile-parallel stages")->check(CLI::PositiveNumber);
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off");

  // ingest
  IngestOptions ingest;
  auto* c_ingest = app.add_subcommand("ingest", "GeoJSON polygons to per-tile features and a manifest");
  c_ingest->add_option("geojson_dir", ingest.geojson_dir)->required();
  c_ingest->add_option("--out", ingest.out_manifest, "output manifest path")->required();
  c_ingest->add_option("--zoom", ingest.zoom);
  c_ingest->add_option("--rare-threshold", ingest.rare_threshold);

  // rasterize
  RasterizeOptions raster;
  std::string images_dir;
  auto* c_raster = app.add_subcommand("rasterize", "composite ingested tiles into .pxfg grids");
  c_raster->add_option("manifest", raster.manifest)->required();
  c_raster->add_option("--out", raster.out_dir)->required();
  c_raster->add_option("--min-coverage", raster.min_coverage);
  c_raster->add_option("--tile-px", raster.tile_px);
  c_raster->add_option("--images", images_dir, "directory of z_x_y.png tiles");

  // train-align
  TrainOptions train;
  std::optional<std::uint64_t> max_steps;
  auto* c_train = app.add_subcommand("train-align", "train the toy region-text encoders");
  c_train->add_option("manifest", train.manifest)->required();
  c_train->add_option("--out", train.out_dir)->required();
  c_train->add_option("--max-steps", max_steps);

  // control
  ControlOptions control;
  std::optional<std::string> schedule, control_split;
  auto* c_control = app.add_subcommand("control", "write control rasters");
  c_control->add_option("manifest", control.manifest)->required();
  c_control->add_option("--checkpoint", control.checkpoint)->required();
  c_control->add_option("--out", control.out_dir)->required();
  auto* retained_opt = c_control->add_option("--mask-retained", control.mask_retained);
  c_control->add_option("--schedule-step", schedule, "t/T")->excludes(retained_opt);
  c_control->add_option("--split", control_split);
  c_control->add_flag("--previews", control.previews, "also write 8-bit PNG previews");

  // eval
  EvalOptions ev;
  std::vector<std::string> suites;
  std::string eval_split = "test";
  std::optional<std::string> ev_checkpoint, generated, feat_a, feat_b;
  auto* c_eval = app.add_subcommand("eval", "retrieval, tag and image metrics as JSON");
  c_eval->add_option("manifest", ev.manifest)->required();
  c_eval->add_option("--checkpoint", ev_checkpoint);
  c_eval->add_option("--suite", suites, "retrieval|tags|image (repeatable)")->take_all();
  c_eval->add_option("--split", eval_split);
  c_eval->add_option("--generated", generated, "directory of generated z_x_y.png tiles");
  c_eval->add_option("--features-a", feat_a);
  c_eval->add_option("--features-b", feat_b);

  // plan-batch
  fs::path plan_manifest;
  std::size_t plan_k = kDefaultPairCount;
  double plan_conf = 0.95;
  auto* c_plan = app.add_subcommand("plan-batch", "smallest batch reaching K pairs with the given confidence");
  c_plan->add_option("manifest", plan_manifest)->required();
  c_plan->add_option("-k,--pairs", plan_k);
  c_plan->add_option("--confidence", plan_conf);

  // grid-info
  fs::path info_path;
  auto* c_info = app.add_subcommand("grid-info", "dump a .pxfg header and intern statistics");
  c_info->add_option("grid", info_path)->required();

  // synth-planted
  PlantedOptions planted;
  fs::path planted_out;
  auto* c_planted = app.add_subcommand("synth-planted", "generate a planted-separable toy dataset");
  c_planted->add_option("--out", planted_out)->required();
  c_planted->add_option("--compositions", planted.compositions);
  c_planted->add_option("--tiles", planted.tiles);
  c_planted->add_option("--tile-px", planted.tile_px);
  c_planted->add_option("--noise", planted.noise);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : static_cast<int>(ExitCode::Usage);
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    const auto level = spdlog::level::from_str(g.log_level);
    if (level == spdlog::level::off && g.log_level != "off") throw ArgumentError("unknown log level " + g.log_level);
    spdlog::set_level(level);

    if (*c_ingest) {
      const IngestReport r = cmd_ingest(ingest);
      print({{"files", r.files}, {"polygons", r.polygons}, {"skipped_non_polygon", r.skipped_non_polygon},
             {"skipped_invalid", r.skipped_invalid}, {"retained_tags", r.retained_tags}, {"tiles", r.tiles},
             {"file_errors", r.file_errors}});
    } else if (*c_raster) {
      raster.threads = g.threads;
      if (!images_dir.empty()) raster.images_dir = images_dir;
      const RasterizeReport r = cmd_rasterize(raster);
      print({{"kept", r.kept}, {"dropped", r.dropped}, {"tile_errors", r.tile_errors}, {"manifest", r.manifest.string()}});
    } else if (*c_train) {
      if (g.config) train.config = load_train_config(*g.config);
      if (g.seed_given) train.config.seed = g.seed;
      if (max_steps) train.config.max_steps = *max_steps;
      const TrainReport r = cmd_train_align(train);
      print({{"steps", r.steps},
             {"final_loss", r.losses.empty() ? ordered_json(nullptr) : ordered_json(r.losses.back())},
             {"final_logit_scale", r.final_logit_scale},
             {"checkpoint", r.checkpoint.string()},
             {"loss_csv", r.loss_csv.string()}});
    } else if (*c_control) {
      control.seed = g.seed;
      if (schedule) control.schedule_step = parse_schedule_step(*schedule);
      if (control_split) control.split = cli_split(*control_split);
      const ControlReport r = cmd_control(control);
      print({{"tiles", r.tiles}, {"retained", r.retained}});
    } else if (*c_eval) {
      for (const auto& s : suites) {
        if (s == "retrieval") ev.suites.insert(EvalSuite::Retrieval);
        else if (s == "tags") ev.suites.insert(EvalSuite::Tags);
        else if (s == "image") ev.suites.insert(EvalSuite::Image);
        else throw ArgumentError("unknown suite '" + s + "'");
      }
      ev.split = cli_split(eval_split);
      ev.seed = g.seed;
      if (ev_checkpoint) ev.checkpoint = *ev_checkpoint;
      if (generated) ev.generated_dir = *generated;
      if (feat_a) ev.features_a = *feat_a;
      if (feat_b) ev.features_b = *feat_b;
      std::cout << cmd_eval(ev).to_json() << "\n";
    } else if (*c_plan) {
      const BatchPlan p = cmd_plan_batch(plan_manifest, plan_k, plan_conf, g.seed);
      print({{"feasible", p.feasible}, {"batch_size", p.batch_size}, {"probability", p.probability}});
    } else if (*c_info) {
      std::cout << cmd_grid_info(info_path) << "\n";
    } else if (*c_planted) {
      planted.seed = g.seed;
      const fs::path m = make_planted_dataset(planted_out, planted);
      print({{"manifest", m.string()}});
    }
  } catch (const NumericError& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(ExitCode::NumericFailure);
  } catch (const ArgumentError& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(ExitCode::Usage);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(ExitCode::DataError);
  }
  return static_cast<int>(ExitCode::Ok);
}
