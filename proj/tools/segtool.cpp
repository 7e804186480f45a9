// Command-line front end: synthetic fixture generation, ICTM / DRLSE
// segmentation runs driven by key=value configs, mask evaluation, and
// head-to-head solver comparison.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seg/drlse.hpp"
#include "seg/evalkit.hpp"
#include "seg/ictm.hpp"
#include "seg/mask_io.hpp"
#include "seg/run_config.hpp"

namespace fs = std::filesystem;
using namespace seg;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitNoConvergence = 5;
constexpr int kExitShapeMismatch = 6;

// "WxH" or "WxHxD" -> grid dims in (rows, cols) / (slices, rows, cols) order
std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> parts;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = text.find('x', pos);
    const std::string tok = text.substr(pos, next == std::string::npos ? next : next - pos);
    try {
      parts.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw config_error("cannot parse --dims \"" + text + "\"");
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (parts.size() < 2 || parts.size() > 3)
    throw config_error("--dims must be WxH or WxHxD, got \"" + text + "\"");
  std::vector<int> dims(parts.rbegin(), parts.rend());
  for (int d : dims)
    if (d < 1) throw config_error("--dims extents must be positive");
  return dims;
}

EdgeParams edge_params_from(const RunConfig& cfg) {
  EdgeParams p;
  p.sigma = cfg.get_double("edge.sigma", 15.0);
  p.normalize_input = cfg.get_bool("edge.normalize_input", true);
  return p;
}

IctmParams ictm_params_from(const RunConfig& cfg) {
  IctmParams p;
  p.tau = cfg.get_double("ictm.tau", 2.0);
  p.lambda = cfg.get_double("ictm.lambda");
  p.tol = cfg.get_double("ictm.tol", 1e-5);
  p.max_iter = cfg.get_int("ictm.max_iter", 5000);
  p.record_energy = cfg.get_bool("ictm.record_energy", true);
  p.validate();
  return p;
}

DrlseParams drlse_params_from(const RunConfig& cfg) {
  DrlseParams p;
  p.alpha = cfg.get_double("drlse.alpha", 5.0);
  p.lambda = cfg.get_double("drlse.lambda", -3.0);
  p.mu = cfg.get_double("drlse.mu", 0.2);
  p.dt = cfg.get_double("drlse.dt", 1.0);
  p.epsilon = cfg.get_double("drlse.epsilon", 1.5);
  p.c0 = cfg.get_double("drlse.c0", 2.0);
  const std::string well = cfg.get("drlse.potential", "double_well");
  if (well == "double_well")
    p.potential = WellPotential::double_well;
  else if (well == "single_well")
    p.potential = WellPotential::single_well;
  else
    throw config_error("drlse.potential must be single_well or double_well, got \"" + well + "\"");
  p.tol = cfg.get_double("drlse.tol", 1e-5);
  p.max_iter = cfg.get_int("drlse.max_iter", 5000);
  p.validate();
  return p;
}

// One or more ';'-separated inclusive boxes "lo...,hi..." in index order,
// e.g. rect:20,30,60,90 in 2D or rect:4,20,30,10,60,90 in 3D.
BinaryMask rect_mask(const std::string& coords, const GridShape& shape) {
  BinaryMask mask(shape);
  const int n = shape.ndim();
  std::size_t pos = 0;
  while (pos < coords.size()) {
    std::size_t semi = coords.find(';', pos);
    if (semi == std::string::npos) semi = coords.size();
    const std::string box = coords.substr(pos, semi - pos);
    std::vector<int> v;
    std::size_t p2 = 0;
    while (p2 <= box.size()) {
      const std::size_t comma = box.find(',', p2);
      const std::string tok = box.substr(p2, comma == std::string::npos ? comma : comma - p2);
      try {
        v.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw config_error("cannot parse rect coordinates \"" + box + "\"");
      }
      if (comma == std::string::npos) break;
      p2 = comma + 1;
    }
    if (static_cast<int>(v.size()) != 2 * n)
      throw config_error("rect init needs " + std::to_string(2 * n) +
                         " coordinates per box for a " + std::to_string(n) + "D grid");
    for (int a = 0; a < n; ++a) {
      const int lo = v[a], hi = v[n + a];
      if (lo < 0 || hi >= shape.dims[a] || lo > hi)
        throw config_error("rect box \"" + box + "\" out of bounds for grid " + shape.to_string());
    }
    if (n == 2) {
      for (int y = v[0]; y <= v[2]; ++y)
        for (int x = v[1]; x <= v[3]; ++x) mask.at(y, x) = 1;
    } else {
      for (int z = v[0]; z <= v[3]; ++z)
        for (int y = v[1]; y <= v[4]; ++y)
          for (int x = v[2]; x <= v[5]; ++x) mask.at(z, y, x) = 1;
    }
    pos = semi + 1;
  }
  return mask;
}

BinaryMask resolve_init(const RunConfig& cfg, const GridShape& shape) {
  const bool has_path = cfg.has("init");
  const bool has_rule = cfg.has("init_rule");
  if (has_path == has_rule)
    throw config_error("exactly one of \"init\" and \"init_rule\" must be given");

  if (has_path) {
    BinaryMask init = load_mask(cfg.get("init"));
    require_same_shape(init.shape, shape, "init mask");
    return init;
  }

  const std::string rule = cfg.get("init_rule");
  auto truth_mask = [&]() {
    BinaryMask truth = load_mask(cfg.get("truth"));
    require_same_shape(truth.shape, shape, "truth mask");
    return truth;
  };
  if (rule == "bbox_half") return bbox_init(truth_mask());
  if (rule.rfind("erode:", 0) == 0) {
    int radius = 0;
    try {
      radius = std::stoi(rule.substr(6));
    } catch (const std::exception&) {
      throw config_error("cannot parse erosion radius in init_rule \"" + rule + "\"");
    }
    return erode_init(truth_mask(), radius);
  }
  if (rule.rfind("rect:", 0) == 0) return rect_mask(rule.substr(5), shape);
  throw config_error("unknown init_rule \"" + rule +
                     "\" (expected bbox_half, erode:<radius>, or rect:<coords>)");
}

std::string snapshot_extension(const GridShape& shape) {
  return shape.ndim() == 2 ? ".pgm" : ".mha";
}

SnapshotCallback make_snapshot_callback(const RunConfig& cfg, const GridShape& shape) {
  const int every = cfg.get_int("snapshot_every", 0);
  if (every < 0) throw config_error("snapshot_every must be >= 0");
  if (every == 0) return {};
  const fs::path dir = cfg.get("snapshot_dir");
  fs::create_directories(dir);
  const std::string ext = snapshot_extension(shape);
  return [every, dir, ext](int iteration, const BinaryMask& mask) {
    if (iteration % every != 0) return;
    char name[32];
    std::snprintf(name, sizeof(name), "iter_%06d", iteration);
    save_mask(mask, dir / (std::string(name) + ext));
  };
}

// By default the elapsed_s column is zeroed so rerunning a config produces a
// byte-identical CSV; set trace_elapsed = wall to keep measured times.
void write_trace(const RunConfig& cfg, const IterationTrace& trace, const fs::path& path) {
  const std::string mode = cfg.get("trace_elapsed", "zero");
  if (mode != "zero" && mode != "wall")
    throw config_error("trace_elapsed must be zero or wall, got \"" + mode + "\"");
  if (mode == "wall") {
    export_trace_csv(trace, path);
    return;
  }
  IterationTrace scrubbed = trace;
  for (auto& rec : scrubbed) rec.elapsed_s = 0.0;
  export_trace_csv(scrubbed, path);
}

std::string fmt(double v) { return seg::detail::format_double(v); }

void print_summary(const std::string& method, const SegmentationResult& res) {
  const double time_s = res.trace.empty() ? 0.0 : res.trace.back().elapsed_s;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", time_s);
  std::cout << "method=" << method << " iters=" << res.iterations
            << " converged=" << (res.converged ? "true" : "false")
            << " energy=" << fmt(res.trace.empty() ? 0.0 : res.trace.back().energy)
            << " time_s=" << buf << "\n";
}

struct SolverOutcome {
  SegmentationResult result;
  bool blowup = false;
  std::string error;
};

SolverOutcome run_solver(const std::string& method, const RunConfig& cfg, const ScalarField& g,
                         const BinaryMask& init, const SnapshotCallback& cb) {
  SolverOutcome out;
  try {
    if (method == "ictm")
      out.result = ictm_run(g, init, ictm_params_from(cfg), cb);
    else
      out.result = drlse_run(g, init, drlse_params_from(cfg), cb);
  } catch (const numerical_error& e) {
    out.blowup = true;
    out.error = e.what();
  }
  return out;
}

int cmd_segment(const std::string& config_path, const std::vector<std::string>& overrides) {
  RunConfig cfg = parse_run_config(config_path);
  for (const auto& o : overrides) apply_override(cfg, o);

  const std::string method = cfg.get("method");
  if (method != "ictm" && method != "drlse")
    throw config_error("method must be ictm or drlse, got \"" + method + "\"");
  const fs::path output = cfg.get("output");

  const ScalarField image = load_image(cfg.get("input"));
  const ScalarField g = edge_indicator(image, edge_params_from(cfg));
  const BinaryMask init = resolve_init(cfg, image.shape);
  const SnapshotCallback cb = make_snapshot_callback(cfg, image.shape);

  const SolverOutcome out = run_solver(method, cfg, g, init, cb);
  if (out.blowup) {
    std::cerr << "error: " << out.error << "\n";
    return kExitNumerical;
  }

  save_mask(out.result.mask, output);
  if (cfg.has("trace_csv")) write_trace(cfg, out.result.trace, cfg.get("trace_csv"));
  print_summary(method, out.result);
  return out.result.converged ? 0 : kExitNoConvergence;
}

int cmd_eval(const std::string& pred_path, const std::string& truth_path) {
  const BinaryMask pred = load_mask(pred_path);
  const BinaryMask truth = load_mask(truth_path);
  if (!(pred.shape == truth.shape)) {
    std::cerr << "error: shape mismatch: " << pred.shape.to_string() << " vs "
              << truth.shape.to_string() << "\n";
    return kExitShapeMismatch;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", dice(pred, truth));
  std::cout << "dice=" << buf << " components_pred=" << connected_components(pred)
            << " components_truth=" << connected_components(truth) << "\n";
  return 0;
}

int cmd_compare(const std::string& config_path, const std::vector<std::string>& overrides) {
  RunConfig cfg = parse_run_config(config_path);
  for (const auto& o : overrides) apply_override(cfg, o);

  // both parameter blocks are mandatory here
  for (const char* key : {"ictm.lambda", "ictm.output", "drlse.lambda", "drlse.output"})
    (void)cfg.get(key);

  const ScalarField image = load_image(cfg.get("input"));
  const ScalarField g = edge_indicator(image, edge_params_from(cfg));
  const BinaryMask init = resolve_init(cfg, image.shape);

  std::optional<BinaryMask> truth;
  if (cfg.has("truth")) {
    truth = load_mask(cfg.get("truth"));
    require_same_shape(truth->shape, image.shape, "truth mask");
  }

  bool any_blowup = false, any_unconverged = false;
  std::vector<std::pair<std::string, SolverOutcome>> rows;
  for (const std::string method : {"ictm", "drlse"}) {
    SolverOutcome out = run_solver(method, cfg, g, init, {});
    if (out.blowup) {
      any_blowup = true;
    } else {
      save_mask(out.result.mask, cfg.get(method + ".output"));
      if (cfg.has(method + ".trace_csv"))
        write_trace(cfg, out.result.trace, cfg.get(method + ".trace_csv"));
      if (!out.result.converged) any_unconverged = true;
    }
    rows.emplace_back(method, std::move(out));
  }

  for (const auto& [method, out] : rows) {
    if (out.blowup) {
      std::cout << "method=" << method << " status=blowup error=\"" << out.error << "\"\n";
      continue;
    }
    const double time_s = out.result.trace.empty() ? 0.0 : out.result.trace.back().elapsed_s;
    char tbuf[64];
    std::snprintf(tbuf, sizeof(tbuf), "%.3f", time_s);
    std::cout << "method=" << method << " iters=" << out.result.iterations << " time_s=" << tbuf;
    if (truth) {
      char dbuf[32];
      std::snprintf(dbuf, sizeof(dbuf), "%.4f", dice(out.result.mask, *truth));
      std::cout << " dice=" << dbuf;
    }
    std::cout << " components=" << connected_components(out.result.mask)
              << " converged=" << (out.result.converged ? "true" : "false") << "\n";
  }

  if (!rows[0].second.blowup && !rows[1].second.blowup && rows[0].second.result.iterations > 0) {
    const double ratio = static_cast<double>(rows[1].second.result.iterations) /
                         static_cast<double>(rows[0].second.result.iterations);
    char rbuf[32];
    std::snprintf(rbuf, sizeof(rbuf), "%.2f", ratio);
    std::cout << "speedup_iters=" << rbuf << "\n";
  }

  if (any_blowup) return kExitNumerical;
  if (any_unconverged) return kExitNoConvergence;
  return 0;
}

struct SynthFlags {
  std::string kind;
  std::string dims = "128x128";
  std::uint64_t seed = 0;
  double noise = 0.0;
  double fg = 200.0, bg = 40.0;
  double r1 = 0.0, r2 = 0.0, radius = 0.0;
  double neck_width = 0.0;
  int extent = 0;
  double inner_radius = 0.0, outer_radius = 0.0;
  std::string out_image, out_truth;
};

int cmd_synth(const SynthFlags& flags) {
  SyntheticKind kind;
  if (flags.kind == "two-discs")
    kind = SyntheticKind::two_discs;
  else if (flags.kind == "dumbbell")
    kind = SyntheticKind::dumbbell;
  else if (flags.kind == "bright-square")
    kind = SyntheticKind::bright_square;
  else if (flags.kind == "ring")
    kind = SyntheticKind::ring;
  else
    throw config_error("unknown fixture kind \"" + flags.kind +
                       "\" (expected two-discs, dumbbell, bright-square, or ring)");

  SyntheticSpec spec = default_spec(kind, parse_dims(flags.dims));
  spec.rng_seed = flags.seed;
  spec.noise_sigma = flags.noise;
  spec.foreground = flags.fg;
  spec.background = flags.bg;
  if (flags.radius > 0) spec.radius_a = spec.radius_b = flags.radius;
  if (flags.r1 > 0) spec.radius_a = flags.r1;
  if (flags.r2 > 0) spec.radius_b = flags.r2;
  if (flags.neck_width > 0) spec.neck_width = flags.neck_width;
  if (flags.extent > 0) spec.extent = flags.extent;
  if (flags.inner_radius > 0) spec.inner_radius = flags.inner_radius;
  if (flags.outer_radius > 0) spec.outer_radius = flags.outer_radius;

  SynthResult synth = synth_image(spec);

  const fs::path image_path = flags.out_image;
  if (synth.image.shape.ndim() == 2) {
    ScalarField clamped = synth.image;
    for (double& v : clamped.values) v = std::clamp(v, 0.0, 255.0);
    write_pgm(clamped, 255, image_path);
  } else {
    write_metaimage(synth.image, MetaElementType::met_float, image_path);
  }
  save_mask(synth.truth, flags.out_truth);

  std::cout << "image=" << flags.out_image << "\n";
  std::cout << "truth=" << flags.out_truth << "\n";
  return 0;
}

template <typename Fn>
int guarded(bool eval_command, Fn&& fn) {
  try {
    return fn();
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const shape_mismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return eval_command ? kExitShapeMismatch : kExitConfig;
  } catch (const numerical_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  // SEG_THREADS caps internal parallelism; the current build is
  // single-threaded, so any positive value is accepted as-is.
  if (const char* threads = std::getenv("SEG_THREADS")) {
    const int v = std::atoi(threads);
    if (v < 1) std::cerr << "warning: ignoring SEG_THREADS=\"" << threads << "\"\n";
  }

  CLI::App app{
      "Geodesic active contour segmentation via iterative convolution-thresholding,\n"
      "with a distance-regularized level set baseline.\n"
      "Precedence: --set overrides beat config file values, which beat built-in defaults."};
  app.require_subcommand(1);

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic image and its ground truth");
  synth_cmd->add_option("kind", synth.kind, "two-discs | dumbbell | bright-square | ring")
      ->required();
  synth_cmd->add_option("--dims", synth.dims, "grid size WxH or WxHxD (default 128x128)");
  synth_cmd->add_option("--seed", synth.seed, "noise RNG seed");
  synth_cmd->add_option("--noise", synth.noise, "additive Gaussian noise sigma");
  synth_cmd->add_option("--fg", synth.fg, "foreground intensity (default 200)");
  synth_cmd->add_option("--bg", synth.bg, "background intensity (default 40)");
  synth_cmd->add_option("--radius", synth.radius, "disc/lobe radius for both shapes");
  synth_cmd->add_option("--r1", synth.r1, "first disc radius");
  synth_cmd->add_option("--r2", synth.r2, "second disc radius");
  synth_cmd->add_option("--neck-width", synth.neck_width, "dumbbell neck width");
  synth_cmd->add_option("--extent", synth.extent, "bright-square side length");
  synth_cmd->add_option("--inner-radius", synth.inner_radius, "ring inner radius");
  synth_cmd->add_option("--outer-radius", synth.outer_radius, "ring outer radius");
  synth_cmd->add_option("--out-image", synth.out_image, "output image path")->required();
  synth_cmd->add_option("--out-truth", synth.out_truth, "output ground-truth mask path")
      ->required();

  std::string segment_config;
  std::vector<std::string> segment_sets;
  auto* segment_cmd = app.add_subcommand("segment", "Run one solver from a config file");
  segment_cmd->add_option("config", segment_config, "key = value run configuration")->required();
  segment_cmd->add_option("--set", segment_sets, "override, e.g. --set ictm.lambda=0.3")
      ->take_all();

  std::string eval_pred, eval_truth;
  auto* eval_cmd = app.add_subcommand("eval", "Dice and component counts for two masks");
  eval_cmd->add_option("--pred", eval_pred, "predicted mask")->required();
  eval_cmd->add_option("--truth", eval_truth, "ground-truth mask")->required();

  std::string compare_config;
  std::vector<std::string> compare_sets;
  auto* compare_cmd =
      app.add_subcommand("compare", "Run ICTM then DRLSE from the identical initialization");
  compare_cmd->add_option("config", compare_config, "key = value run configuration")->required();
  compare_cmd->add_option("--set", compare_sets, "override, e.g. --set drlse.lambda=3")
      ->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return kExitConfig;
  }

  if (synth_cmd->parsed()) return guarded(false, [&] { return cmd_synth(synth); });
  if (segment_cmd->parsed())
    return guarded(false, [&] { return cmd_segment(segment_config, segment_sets); });
  if (eval_cmd->parsed()) return guarded(true, [&] { return cmd_eval(eval_pred, eval_truth); });
  if (compare_cmd->parsed())
    return guarded(false, [&] { return cmd_compare(compare_config, compare_sets); });
  return kExitConfig;
}
