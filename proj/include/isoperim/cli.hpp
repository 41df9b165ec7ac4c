#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "isoperim/analysis.hpp"

namespace isoperim::cli {

namespace fs = std::filesystem;

/// Exit codes shared by the subcommands.
enum Exit : int {
  ok = 0,
  usage_or_spec = 1,
  no_result = 2,  // thresholds: no onset; close: no candidate at the volume
  audit_fails = 3,
  audit_inconclusive = 4,
};

struct RunConfig {
  std::string surface;
  std::string out_dir = ".";
  double rtol = 1e-10;
  double atol = 1e-10;
  double event_tol = 1e-12;
  bool rtol_set = false, atol_set = false;

  // shoot
  double r_start = 0.0;
  std::optional<double> kappa, alpha_prime0;
  // close
  double volume = 0.0;
  int scan_count = 8;
  std::optional<double> scan_min, scan_max;
  std::string classes = "both";
  // audit
  std::optional<int> n;
  // circle
  double radius = 0.0;

  IntegrateOptions integrate_options() const {
    IntegrateOptions o;
    o.rtol = rtol;
    o.atol = atol;
    o.event_tol = event_tol;
    return o;
  }
};

inline Surface load_surface(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && arg[first] == '{') return make_surface(arg);
  std::ifstream in(arg);
  if (!in) throw std::runtime_error("cannot read surface spec \"" + arg + "\"");
  std::stringstream ss;
  ss << in.rdbuf();
  return make_surface(ss.str());
}

namespace detail {

inline void write_file(const RunConfig& cfg, const std::string& name, const std::string& body) {
  fs::create_directories(cfg.out_dir);
  const auto path = fs::path(cfg.out_dir) / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << body;
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

inline std::string opt_num(const std::optional<double>& x) { return x ? format_g17(*x) : "null"; }

}  // namespace detail

inline int cmd_thresholds(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Surface s = load_surface(cfg.surface);
  ThresholdReport rep;
  try {
    rep = thresholds(s);
  } catch (const ThresholdError& e) {
    err << "error: " << e.what() << "\n";
    return no_result;
  }
  std::ostringstream js;
  write_thresholds_json(js, rep);
  detail::write_file(cfg, "thresholds.json", js.str());
  out << "r0 = " << format_g17(rep.r0) << "\n"
      << "M = " << format_g17(rep.M) << "\n"
      << "minimizer_r = " << format_g17(rep.minimizer_r) << "\n"
      << "r_star = " << format_g17(rep.r_star) << "\n"
      << "V0 = " << format_g17(rep.V0) << " (weighted: 2*pi*int_0^r_star f h)\n"
      << "V0_area = " << format_g17(rep.V0_area) << " (unweighted: 2*pi*int_0^r_star h)\n";
  return ok;
}

inline int cmd_shoot(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const Surface s = load_surface(cfg.surface);
  if (!(cfg.r_start > kOriginGuard)) throw SpecError("--r-start must exceed the origin guard 1e-8");
  const double L = logderiv_fh(s, cfg.r_start);
  const double kappa = cfg.kappa ? *cfg.kappa : *cfg.alpha_prime0 + L;
  ShootOptions so;
  so.integ = cfg.integrate_options();
  const auto shot = shoot(s, cfg.r_start, kappa, so);
  const auto& tr = *shot.trajectory;
  const auto& end = tr.back();

  std::ostringstream csv;
  write_trajectory_csv(csv, tr);
  detail::write_file(cfg, "trajectory.csv", csv.str());

  const bool is_circle = std::fabs(kappa - L) <= 1e-10;
  std::ostringstream js;
  js << "{\n  \"r_start\": " << format_g17(cfg.r_start) << ",\n  \"kappa_f\": " << format_g17(kappa)
     << ",\n  \"alpha_prime0\": " << format_g17(kappa - L) << ",\n  \"termination\": \"" << to_string(shot.termination)
     << "\",\n  \"closure_defect\": " << detail::opt_num(shot.closure_defect)
     << ",\n  \"crossing_theta\": " << detail::opt_num(shot.crossing_theta) << ",\n  \"encloses_origin\": "
     << (shot.encloses_origin ? (*shot.encloses_origin ? "true" : "false") : "null")
     << ",\n  \"is_circle\": " << (is_circle ? "true" : "false") << ",\n  \"t_end\": " << format_g17(end.t)
     << ",\n  \"r_end\": " << format_g17(end.r) << ",\n  \"theta_end\": " << format_g17(end.theta)
     << ",\n  \"alpha_end\": " << format_g17(end.alpha) << ",\n  \"P_w\": " << format_g17(end.P_w)
     << ",\n  \"A_w\": " << format_g17(end.A_w) << ",\n  \"samples\": " << tr.samples().size() << "\n}\n";
  detail::write_file(cfg, "shot.json", js.str());

  out << "termination: " << to_string(shot.termination) << "\n";
  if (shot.crossed())
    out << "closure_defect = " << format_g17(*shot.closure_defect) << " at theta = " << format_g17(*shot.crossing_theta)
        << (*shot.encloses_origin ? " (encloses origin)" : " (origin exterior)") << "\n";
  else
    out << "no axis crossing\n";
  out << "kappa_f = " << format_g17(kappa) << (is_circle ? " (centered circle)" : "") << "\n";
  return ok;
}

inline int cmd_close(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Surface s = load_surface(cfg.surface);
  if (!(cfg.volume > 0.0)) throw SpecError("--volume must be positive");
  if (cfg.classes != "both" && cfg.classes != "enclosing" && cfg.classes != "non-enclosing")
    throw SpecError("--classes must be both, enclosing or non-enclosing");
  VolumeScan scan;
  scan.enclosing = cfg.classes != "non-enclosing";
  scan.non_enclosing = cfg.classes != "enclosing";
  scan.find.shot.integ = cfg.integrate_options();
  scan.find.shot.admissible_window = true;
  if (!cfg.rtol_set) scan.find.shot.integ.rtol = 1e-12;
  if (!cfg.atol_set) scan.find.shot.integ.atol = 1e-12;

  double R;
  try {
    R = centered_circle_radius(s, cfg.volume, scan.r_cap);
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return no_result;
  }
  if (cfg.scan_min || cfg.scan_max) {
    const double lo = cfg.scan_min.value_or(0.5 * R), hi = cfg.scan_max.value_or(2.0 * R);
    if (!(lo > kOriginGuard) || !(hi >= lo)) throw SpecError("invalid scan range");
    for (int i = 0; i < cfg.scan_count; ++i)
      scan.r_starts.push_back(cfg.scan_count == 1 ? lo : lo + (hi - lo) * i / (cfg.scan_count - 1));
  } else {
    scan.r_starts = default_scan_grid(R, cfg.scan_count, scan.r_cap);
  }

  const auto cs = candidates_at_volume(s, cfg.volume, scan);
  std::ostringstream js;
  write_candidates_json(js, cs);
  detail::write_file(cfg, "candidates.json", js.str());
  const Candidate* win = min_perimeter(cs);
  if (!win) {
    err << "error: no candidate matches the volume\n";
    return no_result;
  }
  bool strict = true;
  for (const auto& c : cs)
    if (&c != win && !(c.P > win->P)) strict = false;
  out << "candidates: " << cs.size() << "\n"
      << "winner: " << (win->is_circle ? "centered circle" : "non-circle") << (strict ? "" : " (tie)")
      << ", P = " << format_g17(win->P) << ", V = " << format_g17(win->V) << ", kappa_f = " << format_g17(win->kappa_f)
      << ", r_start = " << format_g17(win->r_start) << "\n";
  return ok;
}

inline int cmd_audit(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  Surface s = load_surface(cfg.surface);
  if (cfg.n) s = s.with_dimension(*cfg.n);
  const auto ex = audit_existence(s);
  const auto bd = audit_boundedness(s);
  std::ostringstream js;
  js << "{\n  \"existence\": ";
  write_audit_json(js, ex, 2);
  js << ",\n  \"boundedness\": ";
  write_audit_json(js, bd, 2);
  js << "\n}\n";
  detail::write_file(cfg, "audit.json", js.str());
  for (const auto* a : {&ex, &bd}) {
    out << a->theorem << ": " << to_string(a->overall) << "\n";
    for (const auto& h : a->hypotheses) out << "  " << h.name << ": " << to_string(h.verdict) << "\n";
  }
  const bool any_fail = ex.overall == Verdict::fails || bd.overall == Verdict::fails;
  const bool all_hold = ex.overall == Verdict::holds && bd.overall == Verdict::holds;
  return all_hold ? ok : any_fail ? audit_fails : audit_inconclusive;
}

inline int cmd_circle(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const Surface s = load_surface(cfg.surface);
  const double R = cfg.radius;
  if (!(R > 0.0)) throw SpecError("--radius must be positive");
  const double two_pi = 2.0 * std::numbers::pi;
  out << "kappa_f = " << format_g17(logderiv_fh(s, R)) << "\n"
      << "P = " << format_g17(two_pi * s.fh(R)) << "\n"
      << "V = " << format_g17(two_pi * s.area_primitive(R)) << "\n";
  return ok;
}

/// Parses argv-style arguments and runs one subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Isoperimetric curves on surfaces of revolution with radial density"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  RunConfig cfg;
  app.add_option("--surface", cfg.surface, "surface spec: JSON file path or inline JSON")->required();
  app.add_option("--out", cfg.out_dir, "output directory");
  auto* o_rtol = app.add_option("--rtol", cfg.rtol, "integrator relative tolerance")->check(CLI::PositiveNumber);
  auto* o_atol = app.add_option("--atol", cfg.atol, "integrator absolute tolerance")->check(CLI::PositiveNumber);
  app.add_option("--event-tol", cfg.event_tol, "event location tolerance")->check(CLI::PositiveNumber);

  auto* th = app.add_subcommand("thresholds", "compute r0, M, r_star, V0");
  auto* sh = app.add_subcommand("shoot", "integrate one shot from the x-axis");
  sh->add_option("--r-start", cfg.r_start, "initial radius")->required();
  auto* k = sh->add_option("--kappa", cfg.kappa, "generalized curvature kappa_f");
  auto* ap = sh->add_option("--alpha-prime0", cfg.alpha_prime0, "initial alpha'");
  k->excludes(ap);
  ap->excludes(k);
  auto* cl = app.add_subcommand("close", "enumerate closed candidates at a volume");
  cl->add_option("--volume", cfg.volume, "weighted volume")->required();
  cl->add_option("--scan-count", cfg.scan_count, "number of r_start grid points")->check(CLI::PositiveNumber);
  cl->add_option("--scan-min", cfg.scan_min, "smallest r_start on the grid");
  cl->add_option("--scan-max", cfg.scan_max, "largest r_start on the grid");
  cl->add_option("--classes", cfg.classes, "both | enclosing | non-enclosing");
  auto* au = app.add_subcommand("audit", "audit existence and boundedness hypotheses");
  au->add_option("--n", cfg.n, "ambient dimension")->check(CLI::Range(2, 1 << 20));
  auto* ci = app.add_subcommand("circle", "kappa_f, P, V of the centered circle");
  ci->add_option("--radius", cfg.radius, "circle radius")->required();

  std::vector<const char*> argv{"isoperim"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return usage_or_spec;
  }
  cfg.rtol_set = o_rtol->count() > 0;
  cfg.atol_set = o_atol->count() > 0;
  if (sh->parsed() && !cfg.kappa && !cfg.alpha_prime0) {
    err << "error: shoot needs exactly one of --kappa, --alpha-prime0\n";
    return usage_or_spec;
  }

  try {
    if (th->parsed()) return cmd_thresholds(cfg, out, err);
    if (sh->parsed()) return cmd_shoot(cfg, out, err);
    if (cl->parsed()) return cmd_close(cfg, out, err);
    if (au->parsed()) return cmd_audit(cfg, out, err);
    if (ci->parsed()) return cmd_circle(cfg, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return usage_or_spec;
  }
  return usage_or_spec;
}

}  // namespace isoperim::cli
