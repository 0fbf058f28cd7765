// turblucky: simulate, fuse, train, eval, analyze and params subcommands.
//
// Exit codes: 0 ok, 1 usage, 2 I/O, 3 validation, 4 numeric or state.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "turblucky/correlation.hpp"
#include "turblucky/error.hpp"
#include "turblucky/model_io.hpp"
#include "turblucky/parallel.hpp"
#include "turblucky/pipeline.hpp"
#include "turblucky/scene.hpp"
#include "turblucky/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace turblucky;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Key {
  std::string name;  // config key; the flag is --name with '_' -> '-'
  json fallback;     // also fixes the value type
  std::string help;
};

// Options of one subcommand. Values resolve as defaults < --config file < flags.
class Command {
 public:
  Command(CLI::App& app, std::string name, std::string help, std::vector<Key> keys)
      : keys_(std::move(keys)) {
    sub_ = app.add_subcommand(std::move(name), std::move(help));
    sub_->add_option("--config", config_path_, "JSON file with any of the keys below");
    for (const Key& k : keys_) {
      std::string flag = "--" + k.name;
      std::replace(flag.begin(), flag.end(), '_', '-');
      if (k.fallback.is_boolean())
        sub_->add_flag(flag, k.help);
      else
        sub_->add_option(flag, raw_[k.name], k.help + " (default " + k.fallback.dump() + ")");
    }
  }

  CLI::App* app() { return sub_; }
  bool used() const { return sub_->parsed(); }

  json resolve() const {
    json cfg = json::object();
    for (const Key& k : keys_) cfg[k.name] = k.fallback;
    if (!config_path_.empty()) {
      std::ifstream in(config_path_);
      if (!in) throw IoError("cannot read config " + config_path_);
      json file;
      try {
        file = json::parse(in);
      } catch (const json::exception& e) {
        throw ValidationError("config " + config_path_ + ": " + e.what());
      }
      require(file.is_object(), "config " + config_path_ + " must hold a JSON object");
      for (auto& [key, value] : file.items()) {
        require(cfg.contains(key), "config " + config_path_ + ": unknown key '" + key + "'");
        cfg[key] = coerce(key, value, cfg[key]);
      }
    }
    for (const Key& k : keys_) {
      std::string flag = "--" + k.name;
      std::replace(flag.begin(), flag.end(), '_', '-');
      if (sub_->count(flag) == 0) continue;
      if (k.fallback.is_boolean())
        cfg[k.name] = true;
      else
        cfg[k.name] = from_text(k.name, raw_.at(k.name), k.fallback);
    }
    return cfg;
  }

 private:
  static json coerce(const std::string& key, const json& v, const json& like) {
    if (like.is_boolean() && v.is_boolean()) return v;
    if (like.is_string() && v.is_string()) return v;
    if (like.is_number_float() && v.is_number()) return v.get<double>();
    if (like.is_number_integer() && v.is_number_integer()) return v;
    if (like.is_number_integer() && v.is_number_float() && std::floor(v.get<double>()) == v.get<double>())
      return std::int64_t(v.get<double>());
    throw ValidationError("config key '" + key + "' has the wrong type");
  }

  static json from_text(const std::string& key, const std::string& text, const json& like) {
    if (like.is_string()) return text;
    std::size_t used = 0;
    try {
      if (like.is_number_integer()) {
        const long long v = std::stoll(text, &used);
        if (used == text.size()) return v;
      } else {
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
      }
    } catch (const std::exception&) {
    }
    throw UsageError("--" + key + ": expected a number, got '" + text + "'");
  }

  CLI::App* sub_ = nullptr;
  std::vector<Key> keys_;
  std::string config_path_;
  std::map<std::string, std::string> raw_;
};

std::pair<int, int> parse_size(const std::string& s) {
  const auto x = s.find('x');
  try {
    std::size_t a = 0, b = 0;
    if (x != std::string::npos) {
      const int w = std::stoi(s.substr(0, x), &a), h = std::stoi(s.substr(x + 1), &b);
      if (a == x && b == s.size() - x - 1 && w > 0 && h > 0) return {w, h};
    }
  } catch (const std::exception&) {
  }
  throw UsageError("size must look like WxH, got '" + s + "'");
}

// Creates dir, refusing to reuse a non-empty one unless forced.
void prepare_out(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_directory(dir)) throw IoError(dir.string() + " exists and is not a directory");
  if (fs::exists(dir) && !fs::is_empty(dir) && !force)
    throw UsageError("output directory " + dir.string() + " is not empty (use --force)");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void echo_config(const std::string& command, json cfg, const fs::path& out_dir) {
  cfg["command"] = command;
  const std::string text = cfg.dump(2) + "\n";
  std::cout << text;
  if (out_dir.empty()) return;
  std::ofstream f(out_dir / "run_config.json", std::ios::trunc);
  if (!f) throw IoError("cannot write " + (out_dir / "run_config.json").string());
  f << text;
}

std::string fmt(double v, const char* spec = "%.6f") {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::vector<Sample> load_data(const json& cfg) {
  const auto ds = load_dataset(cfg["data"].get<std::string>());
  require(!ds.empty(), "no sample_* directories in " + cfg["data"].get<std::string>());
  return ds;
}

RestoreOptions restore_options(const json& cfg) {
  RestoreOptions o;
  o.inverse_voxel.smooth = cfg["smooth"].get<int>();
  o.inverse_voxel.eps = cfg["eps"].get<double>();
  o.bins_per_frame = cfg["bins_per_frame"].get<int>();
  require(o.inverse_voxel.smooth >= 1 && o.inverse_voxel.eps > 0 && o.bins_per_frame >= 1,
          "smooth and bins-per-frame must be >= 1, eps > 0");
  return o;
}

std::vector<Image> clean_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("clean-image directory " + dir.string() + " not found");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  require(!files.empty(), "no .png files in " + dir.string());
  std::vector<Image> out;
  for (const auto& f : files) out.push_back(read_png(f));
  return out;
}

int cmd_simulate(const json& cfg) {
  const auto [w, h] = parse_size(cfg["size"].get<std::string>());
  SimulationConfig sim;
  sim.width = w;
  sim.height = h;
  sim.channels = cfg["channels"].get<int>();
  sim.n_frames = cfg["frames"].get<int>();
  sim.frame_interval_us = cfg["frame_interval_us"].get<std::int64_t>();
  auto& t = sim.turbulence;
  t.tilt_sigma = cfg["tilt"].get<double>();
  t.corr_length = cfg["corr_length"].get<double>();
  t.rho = cfg["rho"].get<double>();
  t.supersample = cfg["supersample"].get<int>();
  t.intermittency = cfg["intermittency"].get<double>();
  t.intermittency_rho = cfg["intermittency_rho"].get<double>();
  t.blur_sigma = cfg["blur"].get<double>();
  sim.events.contrast_threshold = cfg["contrast_threshold"].get<double>();
  sim.events.noise_rate = cfg["noise_rate"].get<double>();
  require(sim.channels == 1 || sim.channels == 3, "channels must be 1 or 3");
  require(sim.n_frames >= 2, "frames must be >= 2");
  require(sim.frame_interval_us >= 1, "frame interval must be >= 1 us");
  validate_turbulence_config(t);
  validate_event_sim_config(sim.events);

  const int count = cfg["samples"].get<int>();
  require(count >= 1, "samples must be >= 1");
  const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();
  const fs::path out = cfg["out"].get<std::string>();
  prepare_out(out, cfg["force"].get<bool>());
  echo_config("simulate", cfg, out);

  std::vector<Sample> ds;
  const std::string clean_dir = cfg["clean_dir"].get<std::string>();
  if (clean_dir.empty()) {
    ds = simulate_dataset(sim, count, seed);
  } else {
    const auto images = clean_images(clean_dir);
    ds.resize(std::size_t(count));
    parallel_for(ds.size(), [&](std::size_t k) {
      const Image gt = fit_image(images[k % images.size()], w, h, sim.channels);
      ds[k] = simulate_sample(gt, sim, mix_seed(seed, k), sample_id(int(k)));
    });
  }
  for (const auto& s : ds) save_sample(s, out / ("sample_" + s.id));
  std::size_t events = 0;
  for (const auto& s : ds) events += s.events.events.size();
  std::cerr << "simulated " << ds.size() << " samples (" << events << " events) into " << out.string() << "\n";
  return 0;
}

int cmd_fuse(const json& cfg) {
  FusionMethod method = parse_method(cfg["method"].get<std::string>());
  RestoreOptions opts = restore_options(cfg);
  ModelParams model;
  const std::string model_path = cfg["model"].get<std::string>();
  if (method == FusionMethod::egtm) {
    if (model_path.empty()) throw UsageError("--method egtm needs --model");
    model = load_model(model_path);
    opts.model = &model;
  }
  const auto ds = load_data(cfg);
  const fs::path out = cfg["out"].get<std::string>();
  prepare_out(out, cfg["force"].get<bool>());
  echo_config("fuse", cfg, out);

  std::vector<Image> restored;
  const MethodScore score = evaluate(method, ds, opts, &restored);
  std::ofstream csv(out / "metrics.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write " + (out / "metrics.csv").string());
  csv << "sample_id,psnr,ssim\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    write_png(out / ("restored_" + ds[i].id + ".png"), restored[i]);
    csv << score.samples[i].id << "," << fmt(score.samples[i].psnr) << "," << fmt(score.samples[i].ssim) << "\n";
  }
  csv << "mean," << fmt(score.mean_psnr) << "," << fmt(score.mean_ssim) << "\n";
  std::cerr << method_name(method) << ": PSNR " << fmt(score.mean_psnr, "%.3f") << " dB, SSIM "
            << fmt(score.mean_ssim, "%.4f") << " over " << ds.size() << " samples\n";
  return 0;
}

int cmd_train(const json& cfg) {
  const auto ds = load_data(cfg);
  TrainConfig tc;
  tc.lr0 = cfg["lr"].get<double>();
  tc.epochs = cfg["epochs"].get<int>();
  tc.batch_size = cfg["batch_size"].get<int>();
  tc.val_fraction = cfg["val_fraction"].get<double>();
  tc.seed = cfg["seed"].get<std::uint64_t>();
  validate_train_config(tc);
  LossConfig lc;
  lc.lambda = cfg["lambda"].get<double>();
  const std::string perc = cfg["perceptual"].get<std::string>();
  if (perc == "gradient")
    lc.perceptual = PerceptualMode::gradient_surrogate;
  else if (perc == "off")
    lc.perceptual = PerceptualMode::off;
  else
    throw UsageError("--perceptual must be gradient or off");

  NetShape shape;
  shape.frames = ds.front().turbulent.size();
  shape.channels = ds.front().gt.channels();
  shape.bins = cfg["bins"].get<int>() > 0 ? cfg["bins"].get<int>() : 4 * shape.frames;
  std::optional<ModelParams> initial;
  if (!cfg["init"].get<std::string>().empty()) {
    initial = load_model(cfg["init"].get<std::string>());
    shape = infer_shape(*initial);
  }

  const fs::path out = cfg["out"].get<std::string>();
  prepare_out(out, cfg["force"].get<bool>());
  echo_config("train", cfg, out);

  std::vector<Sample> val;
  if (!cfg["val_data"].get<std::string>().empty()) {
    val = load_dataset(cfg["val_data"].get<std::string>());
    require(!val.empty(), "no sample_* directories in " + cfg["val_data"].get<std::string>());
  }
  const TrainResult res = train(ds, tc, lc, shape, initial, val.empty() ? nullptr : &val);
  for (const auto& m : res.log)
    std::cerr << "epoch " << m.epoch << " loss " << fmt(m.loss, "%.5f") << " val PSNR " << fmt(m.val_psnr, "%.3f")
              << " SSIM " << fmt(m.val_ssim, "%.4f") << " lr " << fmt(m.lr, "%.3g") << "\n";
  save_model(out / "model.egtm", res.model);
  write_metrics_csv(out / "metrics.csv", res.log);
  json split{{"train", res.train_ids}, {"val", res.val_ids}};
  std::ofstream(out / "split.json", std::ios::trunc) << split.dump(2) << "\n";
  return 0;
}

int cmd_eval(const json& cfg) {
  const auto ds = load_data(cfg);
  RestoreOptions opts = restore_options(cfg);
  std::vector<FusionMethod> methods{FusionMethod::mean, FusionMethod::inverse_voxel};
  ModelParams model;
  if (!cfg["model"].get<std::string>().empty()) {
    model = load_model(cfg["model"].get<std::string>());
    opts.model = &model;
    methods.push_back(FusionMethod::egtm);
  }
  const fs::path out = cfg["out"].get<std::string>();
  prepare_out(out, cfg["force"].get<bool>());
  echo_config("eval", cfg, out);

  std::ofstream csv(out / "eval.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write " + (out / "eval.csv").string());
  csv << "method,sample_id,psnr,ssim\n";
  for (FusionMethod m : methods) {
    const MethodScore score = evaluate(m, ds, opts);
    for (const auto& s : score.samples)
      csv << method_name(m) << "," << s.id << "," << fmt(s.psnr) << "," << fmt(s.ssim) << "\n";
    csv << method_name(m) << ",mean," << fmt(score.mean_psnr) << "," << fmt(score.mean_ssim) << "\n";
    std::cerr << method_name(m) << ": PSNR " << fmt(score.mean_psnr, "%.3f") << " dB, SSIM "
              << fmt(score.mean_ssim, "%.4f") << "\n";
  }
  return 0;
}

int cmd_analyze(const json& cfg) {
  const auto ds = load_data(cfg);
  CorrelationConfig cc;
  cc.n_samples = cfg["analysis_samples"].get<int>();
  cc.pixels_per_sample = cfg["pixels"].get<int>();
  cc.spatial_window_ms = cfg["spatial_window_ms"].get<int>();
  cc.seed = cfg["seed"].get<std::uint64_t>();
  const fs::path out = cfg["out"].get<std::string>();
  prepare_out(out, cfg["force"].get<bool>());
  echo_config("analyze", cfg, out);

  const auto report = correlation_study(ds, cc);
  write_correlation_csv(out / "correlation.csv", report);
  for (const auto& row : report.rows)
    std::cerr << row.kind << " " << row.window << ": r " << fmt(row.stats.r, "%.3f") << " p "
              << fmt(row.stats.p, "%.3g") << " n " << row.stats.n << "\n";
  return 0;
}

int cmd_params(const json& cfg) {
  NetShape s;
  s.frames = cfg["frames"].get<int>();
  s.channels = cfg["channels"].get<int>();
  s.bins = cfg["bins"].get<int>() > 0 ? cfg["bins"].get<int>() : 4 * s.frames;
  const auto [w, h] = parse_size(cfg["size"].get<std::string>());
  validate_net_shape(s);
  echo_config("params", cfg, {});
  const Complexity c = count_params_flops(s, h, w);
  json result{{"params", c.params},
              {"params_millions", double(c.params) / 1e6},
              {"flops", c.flops},
              {"gflops", double(c.flops) / 1e9},
              {"size", cfg["size"]}};
  std::cout << result.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-guided turbulence mitigation: simulation, fusion, training and analysis"};
  app.require_subcommand(1);
  const Key force{"force", false, "overwrite a non-empty output directory"};
  const Key deterministic{"deterministic", false, "single worker, fixed reduction order"};
  const Key smooth{"smooth", 5, "inverse-voxel box window"};
  const Key eps{"eps", 1.0, "inverse-voxel density offset"};
  const Key bpf{"bins_per_frame", 4, "voxel bins per frame for inverse-voxel fusion"};

  std::vector<std::pair<std::unique_ptr<Command>, int (*)(const json&)>> commands;
  commands.emplace_back(std::unique_ptr<Command>(new Command(app, "simulate", "render a simulated dataset",
                                {{"out", "data", "output dataset directory"},
                                 {"samples", 10, "number of samples"},
                                 {"size", "64x64", "image size WxH"},
                                 {"channels", 3, "1 or 3"},
                                 {"frames", 11, "frames per sample"},
                                 {"frame_interval_us", std::int64_t(50000), "frame spacing"},
                                 {"seed", std::int64_t(0), "dataset seed"},
                                 {"tilt", 1.5, "RMS tilt displacement, pixels"},
                                 {"corr_length", 8.0, "tilt correlation length, pixels"},
                                 {"rho", 0.7, "temporal AR(1) coefficient"},
                                 {"supersample", 4, "sub-steps per frame"},
                                 {"intermittency", 1.5, "log-amplitude std of tilt strength"},
                                 {"intermittency_rho", 0.7, "AR(1) coefficient of tilt strength"},
                                 {"blur", -1.0, "blur sigma in pixels; negative means 0.8, or 0 when tilt is 0"},
                                 {"contrast_threshold", 0.2, "event threshold, log units"},
                                 {"noise_rate", 0.5, "background events per pixel per second"},
                                 {"clean_dir", "", "directory of clean PNGs instead of procedural scenes"},
                                 force, deterministic})),
                        cmd_simulate);
  commands.emplace_back(std::unique_ptr<Command>(new Command(app, "fuse", "restore every sample with one method",
                                {{"data", "data", "dataset directory"},
                                 {"out", "fused", "output directory"},
                                 {"method", "mean", "mean, inverse-voxel or egtm"},
                                 {"model", "", "EGTM model file"},
                                 smooth, eps, bpf, force, deterministic})),
                        cmd_fuse);
  commands.emplace_back(std::unique_ptr<Command>(new Command(app, "train", "train the guidance network",
                                {{"data", "data", "dataset directory"},
                                 {"out", "run", "output directory"},
                                 {"epochs", 20, "epochs"},
                                 {"batch_size", 8, "mini-batch size"},
                                 {"lr", 5e-3, "initial learning rate"},
                                 {"lambda", 0.3, "weight of the gradient term"},
                                 {"perceptual", "gradient", "gradient or off"},
                                 {"val_fraction", 0.2, "held-out share, ignored with --val-data"},
                                 {"val_data", "", "score this dataset each epoch instead of holding out"},
                                 {"bins", 0, "voxel bins; 0 means 4 x frames"},
                                 {"init", "", "start from this model"},
                                 {"seed", std::int64_t(0), "training seed"},
                                 force, deterministic})),
                        cmd_train);
  commands.emplace_back(std::unique_ptr<Command>(new Command(app, "eval", "score mean, inverse-voxel and (with --model) egtm fusion",
                                {{"data", "data", "dataset directory"},
                                 {"out", "eval", "output directory"},
                                 {"model", "", "EGTM model file"},
                                 smooth, eps, bpf, force, deterministic})),
                        cmd_eval);
  commands.emplace_back(std::unique_ptr<Command>(new Command(app, "analyze", "event density vs degradation correlation",
                                {{"data", "data", "dataset directory"},
                                 {"out", "analysis", "output directory"},
                                 {"analysis_samples", 100, "samples drawn"},
                                 {"pixels", 500, "pixels per sample"},
                                 {"spatial_window_ms", 100, "time window of the spatial study"},
                                 {"seed", std::int64_t(0), "sampling seed"},
                                 force, deterministic})),
                        cmd_analyze);
  commands.emplace_back(std::unique_ptr<Command>(new Command(app, "params", "parameter and FLOP count",
                                {{"frames", 11, "frames"},
                                 {"channels", 3, "colour channels"},
                                 {"bins", 0, "voxel bins; 0 means 4 x frames"},
                                 {"size", "256x256", "FLOP image size WxH"},
                                 deterministic})),
                        cmd_params);
  for (auto& [cmd, fn] : commands)
    if (auto* opt = cmd->app()->get_option_no_throw("--method"))
      opt->check(CLI::IsMember({"mean", "inverse-voxel", "egtm"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  for (auto& [cmd, fn] : commands) {
    if (!cmd->used()) continue;
    try {
      json cfg = cmd->resolve();
      if (cfg.contains("blur") && cfg["blur"].get<double>() < 0)
        cfg["blur"] = cfg["tilt"].get<double>() > 0 ? 0.8 : 0.0;
      if (cfg["deterministic"].get<bool>()) set_deterministic(true);
      return fn(cfg);
    } catch (const UsageError& e) {
      std::cerr << "usage error: " << e.what() << "\n";
      return 1;
    } catch (const IoError& e) {
      std::cerr << "I/O error: " << e.what() << "\n";
      return 2;
    } catch (const ValidationError& e) {
      std::cerr << "validation error: " << e.what() << "\n";
      return 3;
    } catch (const json::exception& e) {
      std::cerr << "validation error: " << e.what() << "\n";
      return 3;
    } catch (const NumericError& e) {
      std::cerr << "numeric error: " << e.what() << "\n";
      return 4;
    } catch (const StateError& e) {
      std::cerr << "state error: " << e.what() << "\n";
      return 4;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "I/O error: " << e.what() << "\n";
      return 2;
    }
  }
  return 1;
}
