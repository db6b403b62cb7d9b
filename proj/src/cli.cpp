#include "strata/cli.hpp"

#include "strata/baselines.hpp"
#include "strata/elevation.hpp"
#include "strata/error.hpp"
#include "strata/infer.hpp"
#include "strata/io.hpp"
#include "strata/raster.hpp"
#include "strata/synthgen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace strata {

namespace {

void require(const std::string& value, const char* key, const char* command) {
  if (value.empty()) throw ConfigError(std::string(command) + " needs --" + key);
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
}

std::string layer_stem(const std::string& id, Layer layer) { return id + "_" + std::string(layer_name(layer)); }

class Manifest {
 public:
  explicit Manifest(std::string command) { lines_.push_back("command " + std::move(command)); }
  void input(const fs::path& p) { lines_.push_back("input " + p.string() + " " + file_digest(p)); }
  void write(const RunConfig& cfg, const fs::path& dir) const { save_config(cfg, dir / "run_manifest.txt", lines_); }

 private:
  std::vector<std::string> lines_;
};

fs::path find_plot_file(const fs::path& dir, const std::string& id) {
  for (const auto& p : list_point_files(dir))
    if (p.stem() == id) return p;
  throw ConfigError("no point file for plot '" + id + "' in " + dir.string());
}

std::vector<ClassId> require_labeled(const std::vector<Label>& labels, const std::string& what) {
  std::vector<ClassId> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    if (!l) throw ConfigError(what + " contains unlabeled points");
    out.push_back(*l);
  }
  return out;
}

LayerTruth read_truth(const std::string& id, const fs::path& dir) {
  LayerTruth t;
  for (Layer layer : kLayers) t[layer] = read_tri_raster(dir / (layer_stem(id, layer) + "_truth.asc"));
  return t;
}

/// Occupancy rasters as written by write_product_rasters (nonzero = occupied).
std::array<Grid<std::uint8_t>, 3> read_occupancy(const std::string& id, const fs::path& dir) {
  std::array<Grid<std::uint8_t>, 3> out;
  for (Layer layer : kLayers) {
    const auto g = from_ascii(read_ascii_grid(dir / (layer_stem(id, layer) + "_occ.asc")));
    Grid<std::uint8_t> occ(g.geometry(), 0);
    for (std::size_t i = 0; i < g.cells().size(); ++i) occ.cells()[i] = g.cells()[i].value_or(0.0) != 0.0;
    out[static_cast<std::size_t>(layer_index(layer))] = std::move(occ);
  }
  return out;
}

/// Truth occupancy of a plot: the tri-state rasters when present, otherwise a
/// product directory's occupancy taken as complete.
LayerTruth read_eval_truth(const std::string& id, const fs::path& dir) {
  if (fs::exists(dir / (layer_stem(id, Layer::GroundVegetation) + "_truth.asc"))) return read_truth(id, dir);
  LayerTruth t;
  for (Layer layer : kLayers) {
    const auto g = from_ascii(read_ascii_grid(dir / (layer_stem(id, layer) + "_occ.asc")));
    TriStateRaster r(g.geometry(), Cell::NoData);
    for (std::size_t i = 0; i < g.cells().size(); ++i)
      if (g.cells()[i]) r.cells()[i] = *g.cells()[i] != 0.0 ? Cell::Full : Cell::Empty;
    t[layer] = std::move(r);
  }
  return t;
}

bool has_heights(const std::string& id, const fs::path& dir) {
  for (Layer layer : kLayers)
    for (const char* s : {"_occ.asc", "_hmin.asc", "_hmax.asc"})
      if (!fs::exists(dir / (layer_stem(id, layer) + s))) return false;
  return true;
}

std::vector<std::string> eval_plot_ids(const fs::path& truth_dir) {
  std::set<std::string> ids;
  const std::string gv = "_" + std::string(layer_name(Layer::GroundVegetation));
  for (const auto& e : fs::directory_iterator(truth_dir)) {
    const std::string name = e.path().filename().string();
    for (const std::string& suffix : {gv + "_truth.asc", gv + "_occ.asc"})
      if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
        ids.insert(name.substr(0, name.size() - suffix.size()));
  }
  if (ids.empty()) throw ConfigError("no truth rasters in " + truth_dir.string());
  return {ids.begin(), ids.end()};
}

EvalResult evaluate_dirs(const fs::path& pred_dir, const fs::path& truth_dir, Manifest* manifest) {
  EvalResult res;
  ConfusionMatrix<kNumClasses> c3;
  bool have3d = true;
  std::array<ConfusionMatrix<2>, 3> c2;
  for (const auto& id : eval_plot_ids(truth_dir)) {
    const fs::path pl = pred_dir / (id + "_labels.txt"), tl = truth_dir / (id + "_labels.txt");
    if (fs::exists(pl) && fs::exists(tl)) {
      const auto pred = require_labeled(read_labels(pl), pl.string());
      const auto truth = read_labels(tl);
      if (pred.size() != truth.size())
        throw ConfigError("label count mismatch for plot '" + id + "': " + std::to_string(pred.size()) + " vs " +
                          std::to_string(truth.size()));
      c3 += confusion_3d(pred, truth);
      if (manifest) manifest->input(pl);
    } else {
      have3d = false;
    }
    const auto pocc = read_occupancy(id, pred_dir);
    const auto truth = read_eval_truth(id, truth_dir);
    if (!(pocc[0].geometry() == truth.geometry()))
      throw ConfigError("raster geometry differs between prediction and truth for plot '" + id + "'");
    const auto c = confusion_2d(pocc, truth);
    for (int l = 0; l < 3; ++l) c2[l] += c[l];
    if (has_heights(id, pred_dir) && has_heights(id, truth_dir)) {
      const auto h = eval_heights(read_products(id, pred_dir), read_products(id, truth_dir));
      for (int t = 0; t < 4; ++t) res.heights.acc[t] += h.acc[t];
    }
    ++res.plots;
  }
  if (have3d) res.r3 = report_3d(c3);
  res.r2 = report_2d(c2);
  return res;
}

void print_eval(std::ostream& out, const EvalResult& r) {
  print_report(out, r.r3 ? *r.r3 : Report3d{}, r.r2, r.heights);
  if (!r.r3) out << "(no per-point labels: 3D scores skipped)\n";
}

std::string opt_str(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << *v;
  return ss.str();
}

std::vector<std::string> split_values(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

std::string ablation_key(const std::string& param) {
  static const std::map<std::string, std::string> aliases = {{"S", "subsample"}, {"R", "radius"}, {"r", "pixel_size"}};
  if (auto it = aliases.find(param); it != aliases.end()) return it->second;
  const std::string k = canonical_key(param);
  if (k == "subsample" || k == "radius" || k == "pixel_size" || k == "lambda" || k == "mu") return k;
  throw ConfigError("ablate: unsupported parameter '" + param + "' (subsample, radius, pixel_size, lambda, mu)");
}

}  // namespace

std::vector<fs::path> list_point_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".txt" || ext == ".xyz" || ext == ".pts" || ext == ".las") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_labels(const std::vector<Label>& labels, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& l : labels) out << label_to_id(l) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<Label> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  std::vector<Label> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(n);
    const long long id = parse_int(line, where);
    try {
      out.push_back(label_from_id(static_cast<int>(id)));
    } catch (const ConfigError&) {
      throw FormatError(where + ": invalid label " + line);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void run_synth(const RunConfig& cfg) {
  require(cfg.out, "out", "synth");
  cfg.validate();
  const fs::path out(cfg.out);
  for (const char* d : {"train", "test", "reference", "scenes"}) make_dir(out / d);
  const int total = cfg.train_plots + cfg.test_plots_count;
  for (int i = 0; i < total; ++i) {
    const bool train = i < cfg.train_plots;
    char id[32];
    std::snprintf(id, sizeof id, "%s_%02d", train ? "train" : "test", train ? i : i - cfg.train_plots);
    SceneConfig sc;
    sc.plot_id = id;
    sc.extent = {cfg.plot_size, cfg.plot_size};
    sc.pulse_density = cfg.pulse_density;
    sc.seed = derive_seed(cfg.train.seed, 11, static_cast<std::uint64_t>(i));
    const Scene scene = generate_plot(sc);
    AnnotationConfig ac;
    ac.ground_unlabeled_fraction = cfg.ground_unlabeled_fraction;
    ac.seed = derive_seed(cfg.train.seed, 12, static_cast<std::uint64_t>(i));
    write_points(simulate_annotation(scene.cloud, ac), out / (train ? "train" : "test") / (std::string(id) + ".txt"));
    write_points(scene.cloud, out / "reference" / (std::string(id) + ".txt"));
    write_scene_manifest(sc, scene, out / "scenes" / (std::string(id) + ".json"));
  }
  Manifest("synth").write(cfg, out);
}

void run_prepare(const RunConfig& cfg) {
  require(cfg.plots, "plots", "prepare");
  require(cfg.out, "out", "prepare");
  cfg.validate();
  const fs::path out(cfg.out);
  make_dir(out);
  Manifest manifest("prepare");
  const auto files = list_point_files(cfg.plots);
  if (files.empty()) throw ConfigError("no point files in " + cfg.plots);
  for (const auto& f : files) {
    manifest.input(f);
    const PlotCloud cloud = read_points(f);
    const std::string& id = cloud.plot_id();
    const LayerTruth truth = build_layer_truth(cloud, cfg.layers, cfg.train.pixel_size);
    for (Layer layer : kLayers) write_tri_raster(truth[layer], out / (layer_stem(id, layer) + "_truth.asc"));

    std::vector<double> z;
    z.reserve(cloud.size());
    for (const auto& p : cloud.points()) z.push_back(p.z);
    write_mixture(ecm_fit(z, default_init(z)), out / (id + ".mixture"));

    if (!cfg.reference.empty()) {
      const fs::path rf = find_plot_file(cfg.reference, id);
      manifest.input(rf);
      const PlotCloud ref = read_points(rf);
      if (ref.size() != cloud.size())
        throw ConfigError("reference plot '" + id + "' has a different point count");
      const auto labels = ref.labels();
      const auto hard = require_labeled(labels, rf.string());
      write_labels(labels, out / (id + "_labels.txt"));
      write_product_rasters(id, layer_products(ref, hard, cfg.layers, cfg.train.pixel_size), out);
    }
  }
  manifest.write(cfg, out);
}

FitResult run_train(const RunConfig& cfg) {
  require(cfg.plots, "plots", "train");
  require(cfg.prepared, "prepared", "train");
  require(cfg.out, "out", "train");
  cfg.validate();
  Manifest manifest("train");
  std::vector<TrainingPlot> plots;
  for (const auto& f : list_point_files(cfg.plots)) {
    manifest.input(f);
    TrainingPlot tp;
    tp.cloud = read_points(f);
    const std::string& id = tp.cloud.plot_id();
    tp.truth = read_truth(id, cfg.prepared);
    tp.mixture = read_mixture(fs::path(cfg.prepared) / (id + ".mixture"));
    plots.push_back(std::move(tp));
  }
  if (plots.empty()) throw ConfigError("no point files in " + cfg.plots);
  make_dir(cfg.out);
  FitOptions opts;
  opts.out_dir = cfg.out;
  opts.on_epoch = [](const EpochLog& e) {
    std::ostringstream ss;
    ss << "epoch " << e.epoch << " loss " << e.total << " (3d " << e.l3d << ", 2d " << e.l2d << ", elev " << e.lelev
       << ") lr " << e.lr << " " << std::fixed << std::setprecision(1) << e.seconds << "s\n";
    std::cerr << ss.str();
  };
  FitResult res = fit(plots, cfg.train, opts);
  manifest.write(cfg, cfg.out);
  return res;
}

void run_infer(const RunConfig& cfg) {
  require(cfg.plots, "plots", "infer");
  require(cfg.checkpoint, "checkpoint", "infer");
  require(cfg.out, "out", "infer");
  cfg.validate();
  Manifest manifest("infer");
  manifest.input(cfg.checkpoint);
  const NetParams params = load_params(cfg.checkpoint);
  InferConfig ic;
  ic.S = cfg.train.S;
  ic.radius = cfg.train.radius;
  ic.pixel_size = cfg.train.pixel_size;
  ic.layers = cfg.layers;
  ic.mesh_mode = cfg.flat_mesh ? MeshMode::Flat : MeshMode::Averaged;
  ic.seed = cfg.train.seed;
  const fs::path out(cfg.out);
  make_dir(out);
  for (const auto& f : list_point_files(cfg.plots)) {
    manifest.input(f);
    const PlotCloud cloud = read_points(f);
    const auto labels = hard_labels(predict_plot(params, cloud, ic));
    write_labels(std::vector<Label>(labels.begin(), labels.end()), out / (cloud.plot_id() + "_labels.txt"));
    const LayerProduct product = layer_products(cloud, labels, cfg.layers, cfg.train.pixel_size);
    write_products(cloud.plot_id(), product, build_meshes(product, ic.mesh_mode), out);
  }
  manifest.write(cfg, out);
}

EvalResult run_eval(const RunConfig& cfg, std::ostream& out) {
  require(cfg.pred, "pred", "eval");
  require(cfg.truth, "truth", "eval");
  Manifest manifest("eval");
  const EvalResult res = evaluate_dirs(cfg.pred, cfg.truth, &manifest);
  print_eval(out, res);
  if (!cfg.out.empty()) {
    make_dir(cfg.out);
    std::ofstream js(fs::path(cfg.out) / "metrics.jsonl");
    write_report_jsonl(js, res.r3 ? *res.r3 : Report3d{}, res.r2, res.heights);
    manifest.write(cfg, cfg.out);
  }
  return res;
}

void run_baseline(const RunConfig& cfg, std::ostream& out) {
  require(cfg.plots, "plots", "baseline");
  require(cfg.prepared, "prepared", "baseline");
  require(cfg.test_plots, "test_plots", "baseline");
  require(cfg.out, "out", "baseline");
  cfg.validate();
  Manifest manifest("baseline");
  std::vector<BaselinePlot> plots;
  for (const auto& f : list_point_files(cfg.plots)) {
    manifest.input(f);
    BaselinePlot bp;
    bp.cloud = read_points(f);
    const std::string& id = bp.cloud.plot_id();
    bp.truth = read_truth(id, cfg.prepared);
    if (!has_heights(id, cfg.prepared))
      throw ConfigError("baseline needs reference rasters for '" + id + "' (run prepare with --reference)");
    bp.reference = read_products(id, cfg.prepared);
    plots.push_back(std::move(bp));
  }
  const double px = cfg.train.pixel_size;
  const BaselineModels models = train_baselines(plots, px, cfg.train.seed);
  const fs::path dir(cfg.out);
  write_models(models, dir / "models");

  std::vector<std::pair<std::string, std::pair<OccupancyModelKind, HeightModelKind>>> variants;
  if (cfg.baseline_logistic) variants.push_back({"logistic", {OccupancyModelKind::Logistic, HeightModelKind::Linear}});
  if (cfg.baseline_forest) variants.push_back({"forest", {OccupancyModelKind::Forest, HeightModelKind::Forest}});
  for (const auto& f : list_point_files(cfg.test_plots)) {
    manifest.input(f);
    const PlotCloud cloud = read_points(f);
    const PixelFeatureGrid features = pixel_features(cloud, px);
    for (const auto& [name, kinds] : variants) {
      make_dir(dir / name);
      write_product_rasters(cloud.plot_id(), predict_baseline_product(models, kinds.first, kinds.second, features),
                            dir / name);
    }
  }
  if (!cfg.truth.empty()) {
    for (const auto& [name, kinds] : variants) {
      out << "== " << name << " ==\n";
      print_eval(out, evaluate_dirs(dir / name, cfg.truth, nullptr));
    }
  }
  manifest.write(cfg, dir);
}

std::vector<EvalResult> run_ablate(const RunConfig& cfg, std::ostream& out) {
  require(cfg.param, "param", "ablate");
  require(cfg.values, "values", "ablate");
  require(cfg.plots, "plots", "ablate");
  require(cfg.reference, "reference", "ablate");
  require(cfg.test_plots, "test_plots", "ablate");
  require(cfg.out, "out", "ablate");
  const std::string key = ablation_key(cfg.param);
  const auto values = split_values(cfg.values);
  if (values.empty()) throw ConfigError("ablate: --values is empty");
  const fs::path root(cfg.out);
  make_dir(root);

  std::vector<EvalResult> results;
  std::ofstream js(root / "ablation.jsonl");
  for (const auto& v : values) {
    RunConfig c = cfg;
    set_config_value(c, key, v);
    c.validate();
    const fs::path base = root / (key + "_" + v);
    c.out = (base / "prepared_train").string();
    run_prepare(c);
    c.plots = cfg.test_plots;
    c.out = (base / "prepared_test").string();
    run_prepare(c);
    c.plots = cfg.plots;
    c.prepared = (base / "prepared_train").string();
    c.out = (base / "train").string();
    run_train(c);
    c.plots = cfg.test_plots;
    c.checkpoint = (base / "train" / "checkpoint.bin").string();
    c.out = (base / "pred").string();
    run_infer(c);
    results.push_back(evaluate_dirs(base / "pred", base / "prepared_test", nullptr));

    std::ostringstream line;
    write_report_jsonl(line, results.back().r3 ? *results.back().r3 : Report3d{}, results.back().r2,
                       results.back().heights);
    std::istringstream lines(line.str());
    for (std::string l; std::getline(lines, l);) {
      nlohmann::json j = nlohmann::json::parse(l);
      j["param"] = key;
      j["value"] = v;
      js << j.dump() << '\n';
    }
  }

  out << std::left << std::setw(14) << key << std::right << std::setw(10) << "mIoU3d" << std::setw(10) << "OA3d"
      << std::setw(10) << "mIoU2d";
  for (auto t : kHeightTargets) out << std::setw(18) << ("MAE " + std::string(height_target_name(t)));
  out << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& r = results[i];
    out << std::left << std::setw(14) << values[i] << std::right << std::setw(10)
        << opt_str(r.r3 ? r.r3->miou : std::nullopt) << std::setw(10) << opt_str(r.r3 ? r.r3->oa : std::nullopt)
        << std::setw(10) << opt_str(r.r2.miou);
    for (auto t : kHeightTargets) out << std::setw(18) << opt_str(r.heights.mae(t));
    out << '\n';
  }
  Manifest("ablate").write(cfg, root);
  return results;
}

// ---------------------------------------------------------------------------

int cli_dispatch(int argc, char** argv) {
  CLI::App app{"Layered vegetation occupancy from point clouds", "strata"};
  app.require_subcommand(1, 1);

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"synth", "generate synthetic annotated plots"},
      {"prepare", "build truth rasters and elevation mixtures"},
      {"train", "train the point network"},
      {"infer", "predict labels, layer rasters and meshes"},
      {"baseline", "train and apply the pixel-feature baselines"},
      {"eval", "score predictions against truth"},
      {"ablate", "rerun the pipeline over values of one parameter"},
  };

  const auto keys = config_keys();
  std::map<std::string, std::map<std::string, std::string>> values;  // subcommand -> key -> value
  std::map<std::string, std::string> config_files;
  std::vector<std::pair<CLI::App*, std::map<std::string, CLI::Option*>>> handles;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config_files[s.name], "key = value configuration file");
    std::map<std::string, CLI::Option*> opts;
    for (const auto& k : keys) {
      std::string names = "--" + k;
      if (k.find('_') != std::string::npos) {
        std::string dashed = k;
        std::replace(dashed.begin(), dashed.end(), '_', '-');
        names += ",--" + dashed;
      }
      opts[k] = sub->add_option(names, values[s.name][k]);
    }
    handles.emplace_back(sub, std::move(opts));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  for (const auto& [sub, opts] : handles) {
    if (!sub->parsed()) continue;
    const std::string name = sub->get_name();
    try {
      RunConfig cfg;
      if (!config_files[name].empty()) cfg = load_config(config_files[name]);
      for (const auto& [k, opt] : opts)
        if (opt->count() > 0) set_config_value(cfg, k, values[name][k]);

      if (name == "synth") run_synth(cfg);
      else if (name == "prepare") run_prepare(cfg);
      else if (name == "train") run_train(cfg);
      else if (name == "infer") run_infer(cfg);
      else if (name == "eval") run_eval(cfg, std::cout);
      else if (name == "baseline") run_baseline(cfg, std::cout);
      else run_ablate(cfg, std::cout);
      return 0;
    } catch (const ConfigError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 2;
}

int cli_dispatch(const std::vector<std::string>& args) {
  std::vector<std::string> copy = args;
  std::vector<char*> argv;
  for (auto& a : copy) argv.push_back(a.data());
  argv.push_back(nullptr);
  return cli_dispatch(static_cast<int>(copy.size()), argv.data());
}

}  // namespace strata
