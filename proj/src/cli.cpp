#include "hyperqubit/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hyperqubit/config.hpp"
#include "hyperqubit/entanglement.hpp"
#include "hyperqubit/exciton.hpp"
#include "hyperqubit/source_metrics.hpp"
#include "hyperqubit/tomography.hpp"
#include "hyperqubit/trace_io.hpp"

namespace hyperqubit {
namespace fs = std::filesystem;
using nlohmann::json;

void configure_logging() {
  static bool done = false;
  if (!done) {
    auto logger = spdlog::stderr_color_mt("hyperqubit");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    done = true;
  }
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("HYPERQUBIT_LOG")) {
    const auto parsed = spdlog::level::from_str(env);
    if (parsed != spdlog::level::off || std::string(env) == "off") level = parsed;
  }
  spdlog::set_level(level);
}

namespace {

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string profile = "paper-defaults";
};

struct SimulateFlags {
  std::string source;
  std::string rho_path;
  std::string mode;
  std::optional<double> counts;
  std::optional<double> jitter;
};

struct TomoFlags {
  std::string traces;
  std::optional<int> seeds;
  std::optional<double> m_omega;
  std::optional<int> bootstrap;
};

struct MetricsFlags {
  std::string rho_path;
};

struct HomscanFlags {
  std::optional<int> points;
  bool calibrated = false;
};

struct BrightnessFlags {
  std::optional<double> r_det, r_laser, t_setup, t_tom, eta_det;
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RunConfig resolve_config(const GlobalFlags& g) {
  RunConfig c = profile(g.profile);
  if (!g.config_path.empty()) c = apply_config_json(c, read_config_file(g.config_path));
  if (g.seed) c.noise.seed = *g.seed;
  if (g.out) c.output_dir = *g.out;
  c.validate();
  return c;
}

json with_hash(json j, const RunConfig& c) {
  j["config_hash"] = config_hash(c);
  j["config"] = config_to_json(c);
  j["config"].erase("output_dir");
  return j;
}

std::string source_description(const RunConfig& c) {
  if (c.source.kind == SourceKind::Rho) return "rho";
  std::ostringstream os;
  os << "pump theta_rad=" << fmt_double(c.pump.theta) << " phi_rad=" << fmt_double(c.pump.phi)
     << " p_qd=" << fmt_double(c.pump.p_qd) << " lambda=" << fmt_double(c.pump.lambda);
  return os.str();
}

int cmd_simulate(RunConfig c, const SimulateFlags& f) {
  if (!f.rho_path.empty()) {
    c.source.kind = SourceKind::Rho;
    try {
      c.source.rho = load_density_matrix(f.rho_path).matrix();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--rho: ") + e.what());
    }
  }
  if (!f.source.empty()) {
    if (f.source == "pump") {
      c.source.kind = SourceKind::Pump;
    } else if (f.source == "rho") {
      c.source.kind = SourceKind::Rho;
    } else if (f.source == "phi-plus") {
      c.source.kind = SourceKind::Rho;
      c.source.rho = DensityMatrix4::from_pure(phi_plus()).matrix();
    } else {
      throw ConfigError("--source: expected pump, rho or phi-plus");
    }
  }
  if (!f.mode.empty()) {
    const auto m = parse_mode(f.mode);
    if (!m) throw ConfigError("--mode: expected sampled-counts or expected-intensity");
    c.noise.mode = *m;
  }
  if (f.counts) c.noise.counts_per_basis = *f.counts;
  if (f.jitter) c.noise.jitter_fwhm_ps = *f.jitter;
  c.validate();

  SynthesisOptions opt;
  opt.jitter_fwhm_ps = c.noise.jitter_fwhm_ps;
  opt.counts_per_basis = c.noise.counts_per_basis;
  opt.seed = c.noise.seed;
  opt.mode = c.noise.mode;
  opt.background_per_bin = c.noise.background_per_bin;
  const TraceSource src = c.source.kind == SourceKind::Pump ? TraceSource(c.pump) : TraceSource(DensityMatrix4(*c.source.rho));
  TraceSet ts = synthesize_traces(src, c.physics, c.grid, opt);
  ts.meta.source = source_description(c);
  ts.meta.config_hash = config_hash(c);
  for (const auto& w : ts.meta.warnings) spdlog::warn("{}", w);

  const fs::path csv = fs::path(c.output_dir) / "traces.csv";
  save_traces(ts, csv);
  spdlog::info("wrote {} ({} bins, {})", csv.string(), ts.grid.n_bins, mode_name(ts.mode));
  std::cout << csv.string() << "\n";
  return kExitOk;
}

Vector4c fidelity_target(const RunConfig& c) {
  if (c.tomo.target == FidelityTarget::Pump) return pure_photon_state(c.pump.theta, c.pump.phi);
  return phi_plus();
}

std::string matrix_text(const Matrix4c& m) {
  std::string out;
  char buf[64];
  for (int i = 0; i < 4; ++i) {
    out += "  ";
    for (int j = 0; j < 4; ++j) {
      std::snprintf(buf, sizeof buf, "%8.4f%+8.4fi  ", m(i, j).real(), m(i, j).imag());
      out += buf;
    }
    out += "\n";
  }
  return out;
}

int cmd_tomo(RunConfig c, const TomoFlags& f) {
  if (f.seeds) c.tomo.n_seeds = *f.seeds;
  if (f.m_omega) c.tomo.m_omega = *f.m_omega;
  if (f.bootstrap) c.tomo.n_bootstrap = *f.bootstrap;
  c.validate();

  const TraceSet traces = load_traces(f.traces);
  traces.require_all_bases();

  FitOptions opt;
  opt.n_seeds = c.tomo.n_seeds;
  opt.seed = c.noise.seed;
  opt.nuisance.enabled = c.tomo.nuisance;
  opt.n_bootstrap = c.tomo.n_bootstrap;
  std::optional<Vector4c> target;
  if (c.tomo.target != FidelityTarget::None) target = fidelity_target(c);

  TomoResult r = fit_mle(traces, c.physics, opt, target);
  if (c.tomo.frame_rotation_rad != 0.0) {
    r.rho_hat = rotate_frame(r.rho_hat, c.tomo.frame_rotation_rad);
    if (target) r.fidelity_to_target = fidelity(r.rho_hat, *target);
  }
  const OverlapSpec overlap = c.tomo.m_omega ? OverlapSpec::from_m_omega(*c.tomo.m_omega) : OverlapSpec::from_params(c.physics);
  const OrthogonalizedState orth = orthogonalize(r.rho_hat, overlap);
  EntanglementReport ent;
  ent.overlap_m_omega = std::norm(overlap.c1);
  ent.c1 = overlap.c1;
  ent.bound = overlap.c2();
  ent.concurrence = concurrence(orth.rho);
  const auto residuals = per_basis_residuals(traces, c.physics, r.rho_hat.matrix());

  json j = to_json(r);
  j["target"] = c.tomo.target == FidelityTarget::None ? "none" : (c.tomo.target == FidelityTarget::Pump ? "pump" : "phi_plus");
  j["entanglement"] = to_json(ent);
  j["entanglement"]["c1_source"] = overlap.source == OverlapSpec::Source::Measured ? "measured" : "model";
  j["entanglement"]["rho_orthogonalized"] = matrix_to_json(orth.rho);
  j["entanglement"]["orthogonalized_trace"] = orth.trace;
  json res;
  for (PolBasis b : kAllBases) res[std::string(basis_name(b))] = residuals[static_cast<size_t>(basis_index(b))];
  j["residual_rms"] = res;
  j["traces"] = {{"path", f.traces}, {"config_hash", traces.meta.config_hash}, {"mode", std::string(mode_name(traces.mode))}};
  j = with_hash(j, c);

  const fs::path out_dir = c.output_dir;
  write_file_atomic(out_dir / "tomo_result.json", j.dump(2) + "\n");

  std::ostringstream rep;
  char buf[160];
  rep << "tomography of " << f.traces << "\n";
  rep << "config hash   " << config_hash(c) << "\n";
  std::snprintf(buf, sizeof buf, "best seed     %d (%s), nll %.6f, %ld evaluations, %s\n", r.seed_id,
                r.seeds.empty() ? "-" : seed_kind_name(r.seeds[static_cast<size_t>(r.seed_id)].kind), r.nll,
                r.n_evaluations, r.converged ? "converged" : "NOT converged");
  rep << buf;
  if (r.fidelity_to_target) {
    std::snprintf(buf, sizeof buf, "fidelity      %.4f\n", *r.fidelity_to_target);
    rep << buf;
  }
  if (r.fidelity_seed_spread) {
    std::snprintf(buf, sizeof buf, "seed spread   %.4f\n", *r.fidelity_seed_spread);
    rep << buf;
  }
  if (r.fidelity_bootstrap_std) {
    std::snprintf(buf, sizeof buf, "bootstrap sd  %.4f\n", *r.fidelity_bootstrap_std);
    rep << buf;
  }
  std::snprintf(buf, sizeof buf, "concurrence   %.4f (|c1|^2 = %.4f, bound %.4f)\n", ent.concurrence, ent.overlap_m_omega,
                ent.bound);
  rep << buf;
  rep << "rho_hat\n" << matrix_text(r.rho_hat.matrix());
  rep << "residual rms per basis\n";
  for (PolBasis b : kAllBases) {
    std::snprintf(buf, sizeof buf, "  %s  %.4f\n", std::string(basis_name(b)).c_str(),
                  residuals[static_cast<size_t>(basis_index(b))]);
    rep << buf;
  }
  write_file_atomic(out_dir / "tomo_report.txt", rep.str());
  std::cout << rep.str();
  if (!r.converged) spdlog::warn("best seed did not meet the convergence criterion");
  return kExitOk;
}

json homscan_rows(const std::vector<HomPoint>& pts) {
  json a = json::array();
  for (const auto& p : pts)
    a.push_back({{"theta_rad", p.theta}, {"M_unfiltered", p.m_unfiltered}, {"M_HH", p.m_hh}, {"M_HV", p.m_hv}, {"M_VV", p.m_vv}});
  return a;
}

json transmission_json(const std::vector<TransmissionElement>& elems) {
  const auto t = transmission_chain(elems);
  json items = json::array();
  for (const auto& e : elems)
    items.push_back({{"label", e.label}, {"transmission", e.transmission},
                     {"uncertainty", e.uncertainty ? json(*e.uncertainty) : json(nullptr)}});
  return {{"elements", items}, {"total", t.total}, {"uncertainty", t.uncertainty ? json(*t.uncertainty) : json(nullptr)}};
}

json brightness_json(const BrightnessInputs& in) {
  const auto b = first_lens_brightness(in);
  return {{"inputs",
           {{"r_det_mhz", in.r_det_mhz}, {"r_laser_mhz", in.r_laser_mhz}, {"t_setup", in.t_setup}, {"t_tom", in.t_tom},
            {"eta_det", in.eta_det}}},
          {"b_fl", b.b_fl},
          {"b_fib", b.b_fib}};
}

int cmd_metrics(const RunConfig& c, const MetricsFlags& f) {
  json j;
  const Complex c1 = pulse_mode_overlap(c.physics);
  j["c1"] = {c1.real(), c1.imag()};
  j["M_omega"] = std::norm(c1);
  j["bound"] = concurrence_upper_bound(c.physics);
  const auto q = emission_probabilities(c.pump, c.physics);
  if (q.p_h * q.p_v > 0.0) {
    const auto so = spectral_mode_overlap(c.pump, c.physics);
    j["spectral_overlap"] = {{"amplitude", {so.amplitude.real(), so.amplitude.imag()}},
                             {"m_omega", so.m_omega},
                             {"squared_magnitude", so.squared_magnitude}};
  } else {
    j["spectral_overlap"] = nullptr;
  }
  const auto m = mean_overlap_components(c.pump, c.physics);
  j["mean_overlap"] = {{"M_HH", m.m_hh}, {"M_HV", m.m_hv}, {"M_VV", m.m_vv},
                       {"M_unfiltered", mean_overlap_unfiltered(c.pump, c.physics)}};
  j["homscan"] = homscan_rows(homscan(theta_grid(c.metrics.homscan_points), c.pump, c.physics));
  j["brightness"] = brightness_json(c.brightness);
  j["transmission"] = {{"setup", transmission_json(setup_transmission_table())},
                       {"tomography", transmission_json(tomography_transmission_table())}};
  if (!f.rho_path.empty()) {
    DensityMatrix4 rho = DensityMatrix4::maximally_mixed();
    try {
      rho = load_density_matrix(f.rho_path);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--rho: ") + e.what());
    }
    const OverlapSpec overlap =
        c.tomo.m_omega ? OverlapSpec::from_m_omega(*c.tomo.m_omega) : OverlapSpec::from_params(c.physics);
    const auto orth = orthogonalize(rho, overlap);
    j["state"] = {{"path", f.rho_path},
                  {"fidelity_phi_plus", fidelity(rho, phi_plus())},
                  {"purity", rho.purity()},
                  {"c1", {overlap.c1.real(), overlap.c1.imag()}},
                  {"concurrence", concurrence(orth.rho)},
                  {"rho_orthogonalized", matrix_to_json(orth.rho)},
                  {"orthogonalized_trace", orth.trace}};
  }
  j = with_hash(j, c);
  const fs::path path = fs::path(c.output_dir) / "metrics.json";
  write_file_atomic(path, j.dump(2) + "\n");
  std::printf("M_omega %.4f\nbound   %.4f\nB_FL    %.4f\n", j["M_omega"].get<double>(), j["bound"].get<double>(),
              j["brightness"]["b_fl"].get<double>());
  if (j.contains("state")) std::printf("concurrence %.4f\n", j["state"]["concurrence"].get<double>());
  return kExitOk;
}

int cmd_homscan(RunConfig c, const HomscanFlags& f) {
  if (f.points) c.metrics.homscan_points = *f.points;
  c.validate();
  PhysParams params = c.physics;
  PumpConfig base = c.pump;
  if (f.calibrated) {
    const auto cal = hom_calibration(c.metrics.mixing);
    params = cal.params;
    base = cal.pump;
    spdlog::info("calibrated gamma_star = {} 1/ps", params.gamma_star);
  }
  const auto pts = homscan(theta_grid(c.metrics.homscan_points), base, params);
  std::string csv = "theta_rad,M_unfiltered,M_HH,M_HV,M_VV\n";
  for (const auto& p : pts)
    csv += fmt_double(p.theta) + "," + fmt_double(p.m_unfiltered) + "," + fmt_double(p.m_hh) + "," + fmt_double(p.m_hv) +
           "," + fmt_double(p.m_vv) + "\n";
  const fs::path out = fs::path(c.output_dir) / "homscan.csv";
  write_file_atomic(out, csv);
  json side = {{"calibrated", f.calibrated}, {"physics", params}, {"pump", base}};
  write_file_atomic(sidecar_path(out), with_hash(side, c).dump(2) + "\n");
  std::cout << out.string() << "\n";
  return kExitOk;
}

int cmd_brightness(RunConfig c, const BrightnessFlags& f) {
  if (f.r_det) c.brightness.r_det_mhz = *f.r_det;
  if (f.r_laser) c.brightness.r_laser_mhz = *f.r_laser;
  if (f.t_setup) c.brightness.t_setup = *f.t_setup;
  if (f.t_tom) c.brightness.t_tom = *f.t_tom;
  if (f.eta_det) c.brightness.eta_det = *f.eta_det;
  c.validate();
  json j = brightness_json(c.brightness);
  j["transmission"] = {{"setup", transmission_json(setup_transmission_table())},
                       {"tomography", transmission_json(tomography_transmission_table())}};
  j = with_hash(j, c);
  write_file_atomic(fs::path(c.output_dir) / "brightness.json", j.dump(2) + "\n");
  std::printf("B_FL  %.4f\nB_Fib %.4f\n", j["b_fl"].get<double>(), j["b_fib"].get<double>());
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  configure_logging();
  CLI::App app{"Frequency-polarization hyper-encoded photon toolkit", "hyperqubit"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "RNG seed (u64)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--profile", g.profile, "Built-in defaults profile")->check(CLI::IsMember({"paper-defaults"}));

  SimulateFlags sf;
  auto* sim = app.add_subcommand("simulate", "Synthesize six-basis tomography traces");
  sim->add_option("--source", sf.source, "pump, rho or phi-plus");
  sim->add_option("--rho", sf.rho_path, "JSON file with a \"rho\" matrix");
  sim->add_option("--mode", sf.mode, "sampled-counts or expected-intensity");
  sim->add_option("--counts", sf.counts, "Counts per basis");
  sim->add_option("--jitter", sf.jitter, "Detector jitter FWHM (ps)");

  TomoFlags tf;
  auto* tomo = app.add_subcommand("tomo", "Maximum-likelihood state reconstruction from traces");
  tomo->add_option("--traces", tf.traces, "Trace CSV (sidecar JSON alongside)")->required();
  tomo->add_option("--seeds", tf.seeds, "Number of optimizer seeds");
  tomo->add_option("--m-omega", tf.m_omega, "Measured M_omega for the orthogonalization");
  tomo->add_option("--bootstrap", tf.bootstrap, "Poisson bootstrap replicates");

  MetricsFlags mf;
  auto* metrics = app.add_subcommand("metrics", "Overlaps, concurrence bound, brightness");
  metrics->add_option("--rho", mf.rho_path, "JSON file with a \"rho\" matrix");

  HomscanFlags hf;
  auto* hom = app.add_subcommand("homscan", "Mean wavepacket overlap versus theta");
  hom->add_option("--points", hf.points, "Number of theta points");
  hom->add_flag("--calibrated", hf.calibrated, "Use the calibrated HOM parameter set");

  BrightnessFlags bf;
  auto* bright = app.add_subcommand("brightness", "First-lens brightness from detected rate and losses");
  bright->add_option("--r-det", bf.r_det, "Detected rate (MHz)");
  bright->add_option("--r-laser", bf.r_laser, "Laser repetition rate (MHz)");
  bright->add_option("--t-setup", bf.t_setup, "Setup transmission");
  bright->add_option("--t-tom", bf.t_tom, "Tomography transmission");
  bright->add_option("--eta-det", bf.eta_det, "Detector efficiency");

  for (auto* s : {sim, tomo, metrics, hom, bright}) s->fallthrough();

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const RunConfig c = resolve_config(g);
    if (*sim) return cmd_simulate(c, sf);
    if (*tomo) return cmd_tomo(c, tf);
    if (*metrics) return cmd_metrics(c, mf);
    if (*hom) return cmd_homscan(c, hf);
    if (*bright) return cmd_brightness(c, bf);
  } catch (const NumericalError& e) {
    spdlog::error("{}", e.what());
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace hyperqubit
