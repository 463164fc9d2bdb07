// polsar: command line front end for the PolSAR coding / PCN toolkit.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pcn/checkpoint.hpp"
#include "pcn/coding.hpp"
#include "pcn/config.hpp"
#include "pcn/decomposition.hpp"
#include "pcn/error.hpp"
#include "pcn/gradcheck.hpp"
#include "pcn/metrics.hpp"
#include "pcn/network.hpp"
#include "pcn/sampling.hpp"
#include "pcn/scene_io.hpp"
#include "pcn/synth.hpp"
#include "pcn/train.hpp"

namespace {

using nlohmann::json;

struct Options {
  std::string scene, coded, out, labels, spec, config, model, log, mask, map, pred, truth, report;
  std::vector<std::string> overrides;
  std::optional<int> epochs, per_class, window, classes;
  std::optional<std::uint64_t> seed;
  std::string pathways;
  std::string absent = "error";
  std::string test = "paired";
  std::uint64_t gradcheck_seed = 7;
};

pcn::LabelGrid as_grid(int h, int w, std::vector<std::uint8_t> labels) {
  return {h, w, std::move(labels)};
}

pcn::PcnConfig load_config(const Options& o) {
  pcn::KeyValues kv;
  if (!o.config.empty()) kv = pcn::read_key_value_file(o.config);
  for (const auto& item : o.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) pcn::fail(pcn::ErrorCode::ConfigError, "--set expects key=value, got '" + item + "'");
    kv.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  if (o.epochs) kv.emplace_back("max_epochs", std::to_string(*o.epochs));
  if (o.seed) kv.emplace_back("seed", std::to_string(*o.seed));
  if (o.per_class) kv.emplace_back("per_class", std::to_string(*o.per_class));
  if (o.window) kv.emplace_back("window", std::to_string(*o.window));
  if (o.classes) kv.emplace_back("num_classes", std::to_string(*o.classes));
  if (!o.pathways.empty()) kv.emplace_back("pathways", o.pathways);
  return pcn::config_from_key_values(kv);
}

void write_lines(const std::string& path, const std::vector<json>& lines) {
  std::ofstream out(path);
  if (!out) pcn::fail(pcn::ErrorCode::IoError, "cannot write " + path);
  for (const auto& l : lines) out << l.dump() << '\n';
}

int cmd_encode(const Options& o) {
  const auto coded = pcn::encode_scene(pcn::load_scene(o.scene));
  pcn::save_coded(coded, o.out);
  std::cout << "coded " << coded.rows << "x" << coded.cols << " -> " << o.out << '\n';
  return 0;
}

int cmd_decode(const Options& o) {
  const auto scene = pcn::decode_scene(pcn::load_coded(o.coded));
  pcn::save_scene(scene, o.out);
  std::cout << "scene " << scene.height << "x" << scene.width << " -> " << o.out << '\n';
  return 0;
}

int cmd_features(const Options& o) {
  const auto scene = pcn::load_scene(o.scene);
  const int window = o.window.value_or(3);
  const auto planes = pcn::pf22_scene(scene, window);
  pcn::save_planes(o.out, scene.height, scene.width, static_cast<int>(pcn::kPf22Size), planes);
  std::cout << "features " << scene.height << "x" << scene.width << "x" << pcn::kPf22Size << " -> " << o.out << '\n';
  return 0;
}

int cmd_synth(const Options& o) {
  auto kv = pcn::read_key_value_file(o.spec);
  if (o.seed) kv.emplace_back("seed", std::to_string(*o.seed));
  const auto spec = pcn::synth_spec_from_key_values(kv);
  const auto synth = pcn::generate_synthetic_scene(spec);
  pcn::save_scene(synth.scene, o.scene);
  pcn::save_label_pgm(as_grid(spec.height, spec.width, synth.labels), o.labels);
  std::cout << "synthetic scene " << spec.height << "x" << spec.width << ", " << spec.num_classes << " classes -> "
            << o.scene << ", " << o.labels << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  const auto config = load_config(o);
  const auto scene = pcn::load_scene(o.scene);
  const auto truth = pcn::load_label_pgm(o.labels);
  if (truth.height != scene.height || truth.width != scene.width) {
    pcn::fail(pcn::ErrorCode::ShapeError, "label grid does not match the scene dimensions");
  }
  const auto selection = pcn::select_training_samples(truth.labels, config.num_classes, config.per_class, config.seed);
  for (const auto& w : selection.warnings) std::cerr << "warning: " << w << '\n';

  std::vector<json> log;
  const auto result = pcn::train(scene, truth.labels, selection.mask, config, [&](const pcn::EpochRecord& r) {
    log.push_back({{"epoch", r.epoch}, {"loss", r.loss}, {"train_accuracy", r.train_accuracy}});
  });
  pcn::save_model(result.model, o.model);
  if (!o.log.empty()) write_lines(o.log, log);
  if (!o.mask.empty()) pcn::save_label_pgm(as_grid(scene.height, scene.width, selection.mask), o.mask);
  const auto& last = result.log.back();
  std::cout << "trained " << result.log.size() << " epochs" << (result.stopped_on_plateau ? " (loss plateau)" : "")
            << ", final loss " << last.loss << ", training accuracy " << last.train_accuracy << " -> " << o.model
            << '\n';
  return 0;
}

int cmd_predict(const Options& o) {
  const auto model = pcn::load_model(o.model);
  const auto scene = pcn::load_scene(o.scene);
  const auto grid = as_grid(scene.height, scene.width, pcn::predict_map(scene, model));
  pcn::save_label_pgm(grid, o.out);
  if (!o.map.empty()) pcn::save_map(grid, o.map);
  std::cout << "prediction " << scene.height << "x" << scene.width << " -> " << o.out << '\n';
  return 0;
}

int cmd_evaluate(const Options& o) {
  const auto pred = pcn::load_label_pgm(o.pred);
  const auto truth = pcn::load_label_pgm(o.truth);
  if (pred.height != truth.height || pred.width != truth.width) {
    pcn::fail(pcn::ErrorCode::ShapeError, "prediction and truth grids differ in size");
  }
  std::vector<std::uint8_t> exclude;
  if (!o.mask.empty()) {
    const auto m = pcn::load_label_pgm(o.mask);
    if (m.height != truth.height || m.width != truth.width) {
      pcn::fail(pcn::ErrorCode::ShapeError, "mask grid differs from the truth grid");
    }
    exclude = m.labels;
  }
  int classes = o.classes.value_or(0);
  if (classes == 0) {
    for (auto l : truth.labels)
      if (l != pcn::kIgnoreLabel) classes = std::max(classes, l + 1);
    for (auto l : pred.labels)
      if (l != pcn::kIgnoreLabel) classes = std::max(classes, l + 1);
  }
  const auto z = pcn::confusion(pred.labels, truth.labels, classes, exclude);
  const auto policy = o.absent == "skip" ? pcn::AbsentClassPolicy::Skip : pcn::AbsentClassPolicy::Error;
  const auto s = pcn::score(z, policy);

  std::printf("pixels   %lld\n", static_cast<long long>(z.total()));
  std::printf("OA       %.4f\nAA       %.4f\nKappa    %.4f\n", s.oa, s.aa, s.kappa);
  for (int c = 0; c < classes; ++c) std::printf("recall[%d] %.4f\n", c, s.per_class_recall[static_cast<std::size_t>(c)]);
  std::printf("confusion (rows truth, columns predicted)\n");
  for (int r = 0; r < classes; ++r) {
    for (int c = 0; c < classes; ++c) std::printf("%s%lld", c ? " " : "  ", static_cast<long long>(z(r, c)));
    std::printf("\n");
  }

  if (!o.report.empty()) {
    std::vector<json> lines;
    lines.push_back({{"type", "summary"}, {"pixels", z.total()}, {"oa", s.oa}, {"aa", s.aa}, {"kappa", s.kappa}});
    for (int c = 0; c < classes; ++c) {
      const double r = s.per_class_recall[static_cast<std::size_t>(c)];
      lines.push_back({{"type", "class"}, {"id", c}, {"support", z.row_sum(c)},
                       {"recall", std::isnan(r) ? json(nullptr) : json(r)}});
    }
    for (int r = 0; r < classes; ++r) {
      std::vector<std::int64_t> row;
      for (int c = 0; c < classes; ++c) row.push_back(z(r, c));
      lines.push_back({{"type", "confusion"}, {"truth", r}, {"counts", row}});
    }
    write_lines(o.report, lines);
  }
  return 0;
}

int cmd_gradcheck(const Options& o) {
  const auto report = pcn::run_gradcheck(o.gradcheck_seed);
  for (const auto& e : report.entries) {
    std::printf("%-24s max_rel_error=%.3e threshold=%.0e %s\n", e.name.c_str(), e.max_relative_error, e.threshold,
                e.passed() ? "ok" : "FAIL");
  }
  return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PolSAR scattering coding and polarimetric convolutional network toolkit", "polsar"};
  app.require_subcommand(1);
  Options o;

  auto* encode = app.add_subcommand("encode", "Scattering-code a scene into a 4H x 4W matrix");
  encode->add_option("--scene", o.scene, "Input PSC1 scene")->required();
  encode->add_option("--out", o.out, "Output PCD1 coded matrix")->required();

  auto* decode = app.add_subcommand("decode", "Recover a scene from its coded matrix");
  decode->add_option("--coded", o.coded, "Input PCD1 coded matrix")->required();
  decode->add_option("--out", o.out, "Output PSC1 scene")->required();

  auto* features = app.add_subcommand("features", "Write the 22 polarimetric feature planes");
  features->add_option("--scene", o.scene, "Input PSC1 scene")->required();
  features->add_option("--out", o.out, "Output PSC1 plane file")->required();
  features->add_option("--window", o.window, "Averaging window (odd)");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene and its labels");
  synth->add_option("--spec", o.spec, "Synthetic scene spec (key=value)")->required();
  synth->add_option("--scene", o.scene, "Output PSC1 scene")->required();
  synth->add_option("--labels", o.labels, "Output P5 label grid")->required();
  synth->add_option("--seed", o.seed, "Override the spec seed");

  auto* train = app.add_subcommand("train", "Train a network on a labelled scene");
  train->add_option("--scene", o.scene, "Input PSC1 scene")->required();
  train->add_option("--labels", o.labels, "P5 label grid (255 = ignore)")->required();
  train->add_option("--model", o.model, "Output checkpoint")->required();
  train->add_option("--config", o.config, "key=value configuration file");
  train->add_option("--set", o.overrides, "Override one configuration key (key=value)");
  train->add_option("--log", o.log, "Training log, one JSON record per epoch");
  train->add_option("--mask", o.mask, "Write the training-pixel mask (P5, 0/1)");
  train->add_option("--epochs", o.epochs, "Maximum epochs");
  train->add_option("--seed", o.seed, "Initialization and sampling seed");
  train->add_option("--per-class", o.per_class, "Training pixels per class");
  train->add_option("--classes", o.classes, "Number of classes");
  train->add_option("--pathways", o.pathways, "dual, coded or raw")->check(CLI::IsMember({"dual", "coded", "raw"}));

  auto* predict = app.add_subcommand("predict", "Classify every pixel of a scene");
  predict->add_option("--scene", o.scene, "Input PSC1 scene")->required();
  predict->add_option("--model", o.model, "Checkpoint")->required();
  predict->add_option("--out", o.out, "Output P5 label grid")->required();
  predict->add_option("--map", o.map, "Also render a P6 colour map");

  auto* evaluate = app.add_subcommand("evaluate", "Score a prediction against truth labels");
  evaluate->add_option("--pred", o.pred, "Predicted P5 label grid")->required();
  evaluate->add_option("--truth", o.truth, "Truth P5 label grid")->required();
  evaluate->add_option("--mask", o.mask, "Exclude pixels where this P5 mask is nonzero (training pixels)");
  evaluate->add_option("--classes", o.classes, "Number of classes (default: largest id + 1)");
  evaluate->add_option("--absent", o.absent, "Classes without truth pixels: error or skip")
      ->check(CLI::IsMember({"error", "skip"}));
  evaluate->add_option("--report", o.report, "Line-delimited JSON report");

  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic and numeric gradients");
  gradcheck->add_option("--seed", o.gradcheck_seed, "Seed for the random test tensors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    std::cerr << failing->help();
    return 2;
  }

  try {
    if (*encode) return cmd_encode(o);
    if (*decode) return cmd_decode(o);
    if (*features) return cmd_features(o);
    if (*synth) return cmd_synth(o);
    if (*train) return cmd_train(o);
    if (*predict) return cmd_predict(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*gradcheck) return cmd_gradcheck(o);
  } catch (const pcn::Error& e) {
    json msg = std::string(e.what());
    std::cerr << "error kind=" << pcn::to_string(e.code()) << " message=" << msg.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    json msg = std::string(e.what());
    std::cerr << "error kind=Internal message=" << msg.dump() << '\n';
    return 1;
  }
  return 2;
}
