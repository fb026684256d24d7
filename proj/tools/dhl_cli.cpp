// Command-line driver: CSV reports and PPM images for every experiment in
// the library.  Conventions:
//   - every run prints a header recording the schema version, the tool
//     version, and every knob that influenced the numbers;
//   - --deterministic suppresses the one nondeterministic header field
//     (the timestamp), making reruns byte-identical;
//   - numbers are printed with 17 significant digits so doubles round-trip;
//   - complex flags are written as `re,im`, grids as `start:stop:step`;
//   - exit 0 on success, 1 when a computation rejects its inputs, 2 on
//     usage errors (which also print the flag documentation).

#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "dhl/boettcher.hpp"
#include "dhl/exponents.hpp"
#include "dhl/free_energy.hpp"
#include "dhl/julia_render.hpp"
#include "dhl/lattice_oracle.hpp"
#include "dhl/rational_map.hpp"
#include "dhl/rng.hpp"
#include "dhl/thermo.hpp"

namespace {

using dhl::Complex;
using dhl::ComplexValue;
using dhl::MapParams;

constexpr const char* kVersion = "1.0.0";

std::string fmt(const char* f, ...) {
  va_list ap;
  va_start(ap, f);
  char buf[2048];
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return std::string(buf);
}

// Lossless double -> text (17 significant digits round-trip).
std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf);
}

// ---- output stream -----------------------------------------------------------

class Report {
 public:
  explicit Report(const std::string& path) {
    if (path == "-") {
      file_ = stdout;
    } else {
      file_ = std::fopen(path.c_str(), "wb");
      if (file_ == nullptr) throw dhl::IoError("cannot open output file: " + path);
      owned_ = true;
    }
  }
  ~Report() {
    if (owned_ && file_ != nullptr) std::fclose(file_);
  }
  Report(const Report&) = delete;
  Report& operator=(const Report&) = delete;

  void line(const std::string& s) {
    std::fputs(s.c_str(), file_);
    std::fputc('\n', file_);
  }

 private:
  std::FILE* file_ = nullptr;
  bool owned_ = false;
};

// ---- shared flags --------------------------------------------------------------

struct Common {
  int b = 3;
  std::uint64_t seed = 12345;
  int jobs = 1;
  bool deterministic = false;
  std::string out = "-";
};

std::uint64_t env_default_seed() {
  if (const char* s = std::getenv("RENORM_JULIA_SEED")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(s, &end, 10);
    if (end != nullptr && end != s && *end == '\0') return static_cast<std::uint64_t>(v);
  }
  return 12345;
}

void add_common(CLI::App* sc, Common& c, bool with_out = true) {
  sc->add_option("--b", c.b, "branch count b of the map 4t^b/(1+t^b)^2, b >= 2")->required();
  sc->add_option("--seed", c.seed,
                 "random seed (default 12345, or the RENORM_JULIA_SEED environment variable; "
                 "the flag wins)");
  sc->add_option("--jobs", c.jobs, "worker thread cap")->check(CLI::Range(1, 256));
  sc->add_flag("--deterministic", c.deterministic,
               "omit the timestamp header field so reruns are byte-identical");
  if (with_out) sc->add_option("--out", c.out, "output path ('-' writes to stdout)");
}

void emit_header(Report& r, const Common& c, const std::string& sub, const std::string& extra) {
  r.line("# schema=1");
  r.line(fmt("# tool=dhl version=%s", kVersion));
  std::string run = fmt("# run: subcommand=%s b=%d seed=%llu jobs=%d deterministic=%d",
                        sub.c_str(), c.b, static_cast<unsigned long long>(c.seed), c.jobs,
                        c.deterministic ? 1 : 0);
  if (!extra.empty()) run += " " + extra;
  r.line(run);
  if (!c.deterministic) {
    std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    r.line(fmt("# generated=%s", buf));
  }
}

// ---- flag value parsers ----------------------------------------------------------

Complex parse_complex(const std::string& s, const char* flag) {
  auto bad = [&] { return CLI::ValidationError(std::string(flag) + ": expected 're' or 're,im'"); };
  try {
    std::size_t comma = s.find(',');
    if (comma == std::string::npos) {
      std::size_t used = 0;
      double re = std::stod(s, &used);
      if (used != s.size()) throw bad();
      return Complex(re, 0.0);
    }
    std::string a = s.substr(0, comma);
    std::string b = s.substr(comma + 1);
    std::size_t ua = 0, ub = 0;
    double re = std::stod(a, &ua);
    double im = std::stod(b, &ub);
    if (ua != a.size() || ub != b.size()) throw bad();
    return Complex(re, im);
  } catch (const CLI::ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw bad();
  }
}

// "value" or inclusive "start:stop:step".
std::vector<double> parse_grid(const std::string& s, const char* flag) {
  auto bad = [&] {
    return CLI::ValidationError(std::string(flag) +
                                ": expected a value or 'start:stop:step' with step > 0");
  };
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    std::size_t colon = s.find(':', pos);
    parts.push_back(s.substr(pos, colon == std::string::npos ? colon : colon - pos));
    if (colon == std::string::npos) break;
    pos = colon + 1;
  }
  try {
    if (parts.size() == 1) {
      std::size_t used = 0;
      double v = std::stod(parts[0], &used);
      if (used != parts[0].size()) throw bad();
      return {v};
    }
    if (parts.size() != 3) throw bad();
    double vals[3];
    for (int i = 0; i < 3; ++i) {
      std::size_t used = 0;
      vals[i] = std::stod(parts[static_cast<std::size_t>(i)], &used);
      if (used != parts[static_cast<std::size_t>(i)].size()) throw bad();
    }
    double start = vals[0], stop = vals[1], step = vals[2];
    if (!(step > 0.0) || stop < start) throw bad();
    double span = (stop - start) / step;
    if (span > 100000.0) throw bad();
    int n = static_cast<int>(span + 1e-9);
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) grid.push_back(start + i * step);
    return grid;
  } catch (const CLI::ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw bad();
  }
}

std::vector<int> parse_int_list(const std::string& s, const char* flag) {
  auto bad = [&] {
    return CLI::ValidationError(std::string(flag) + ": expected comma-separated integers");
  };
  std::vector<int> out;
  std::size_t pos = 0;
  try {
    while (pos <= s.size()) {
      std::size_t comma = s.find(',', pos);
      std::string tok = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
      std::size_t used = 0;
      int v = std::stoi(tok, &used);
      if (used != tok.size()) throw bad();
      out.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  } catch (const CLI::ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw bad();
  }
  if (out.empty()) throw bad();
  return out;
}

// ---- subcommands ------------------------------------------------------------------

void run_map_orbit(const Common& c, const std::string& start_str, int steps) {
  MapParams p(c.b);
  Complex t0 = parse_complex(start_str, "--start");
  Report rep(c.out);
  emit_header(rep, c, "map-orbit",
              fmt("start=%s,%s steps=%d", num(t0.real()).c_str(), num(t0.imag()).c_str(), steps));
  rep.line("step,t_re,t_im,at_infinity");
  ComplexValue t(t0);
  for (int k = 0; k <= steps; ++k) {
    if (t.infinite()) {
      rep.line(fmt("%d,inf,inf,1", k));
    } else {
      rep.line(fmt("%d,%s,%s,0", k, num(t.value().real()).c_str(),
                   num(t.value().imag()).c_str()));
    }
    t = dhl::eval_map(p, t);
  }
}

void run_free_energy(const Common& c, const std::string& t_str, const std::string& start_str,
                     const std::string& stop_str, int count, int order, double tol,
                     int max_terms) {
  MapParams p(c.b);
  dhl::TruncationPolicy policy;
  policy.tol = tol;
  policy.max_terms = max_terms;

  std::vector<Complex> points;
  if (!t_str.empty()) {
    if (!start_str.empty() || !stop_str.empty())
      throw CLI::ValidationError("--t excludes --start/--stop");
    points.push_back(parse_complex(t_str, "--t"));
  } else {
    if (start_str.empty() || stop_str.empty())
      throw CLI::ValidationError("need either --t or both --start and --stop");
    if (count < 2) throw CLI::ValidationError("--count: need at least 2 segment samples");
    Complex a = parse_complex(start_str, "--start");
    Complex b = parse_complex(stop_str, "--stop");
    for (int i = 0; i < count; ++i) {
      double u = static_cast<double>(i) / (count - 1);
      points.push_back(a + (b - a) * u);
    }
  }

  Report rep(c.out);
  emit_header(rep, c, "free-energy",
              fmt("order=%d tol=%s max_terms=%d points=%zu", order, num(tol).c_str(), max_terms,
                  points.size()));
  std::string head = "index,t_re,t_im,terms";
  for (int k = 0; k <= order; ++k) head += fmt(",F%d_re,F%d_im", k, k);
  rep.line(head);
  for (std::size_t i = 0; i < points.size(); ++i) {
    dhl::FJet j = dhl::eval_F_jet(p, points[i], order, policy);
    std::string row = fmt("%zu,%s,%s,%d", i, num(points[i].real()).c_str(),
                          num(points[i].imag()).c_str(), j.terms_used);
    for (int k = 0; k <= order; ++k) {
      Complex d = j.derivative(k);
      row += fmt(",%s,%s", num(d.real()).c_str(), num(d.imag()).c_str());
    }
    rep.line(row);
  }
}

void run_geodesic_trace(const Common& c, double theta, double potential, int levels) {
  MapParams p(c.b);
  Report rep(c.out);
  emit_header(rep, c, "geodesic-trace",
              fmt("theta=%s potential=%s levels=%d", num(theta).c_str(), num(potential).c_str(),
                  levels));
  rep.line("level,potential,t_re,t_im,potential_measured");
  for (int k = 0; k <= levels; ++k) {
    double g = potential * std::pow(static_cast<double>(c.b), -k);
    Complex t = dhl::geodesic_point(p, g, theta);
    double measured = dhl::green_potential(p, t).value;
    rep.line(fmt("%d,%s,%s,%s,%s", k, num(g).c_str(), num(t.real()).c_str(),
                 num(t.imag()).c_str(), num(measured).c_str()));
  }
}

void run_julia_render(const Common& c, const std::string& center_str, double width, int px,
                      int max_iter, double eps, const std::string& image_path) {
  MapParams p(c.b);
  dhl::RasterSpec spec;
  spec.center = parse_complex(center_str, "--center");
  spec.width = width;
  spec.pixels = px;
  spec.max_iter = max_iter;
  spec.eps = eps;
  dhl::RasterRender render = dhl::render_raster(p, spec, c.jobs);
  dhl::write_ppm(image_path, render.image);
  Report rep("-");
  emit_header(rep, c, "julia-render",
              fmt("px=%d width=%s max_iter=%d eps=%s", px, num(width).c_str(), max_iter,
                  num(eps).c_str()));
  rep.line("pixels,max_iter,undecided_pixels,undecided_fraction");
  rep.line(fmt("%d,%d,%lld,%s", px, max_iter,
               static_cast<long long>(render.undecided_pixels),
               num(render.undecided_fraction()).c_str()));
}

void run_harmonic_lyapunov(const Common& c, int samples, double potential) {
  dhl::LyapunovEstimate est =
      dhl::harmonic_lyapunov_estimate(MapParams(c.b), samples, c.seed, potential, c.jobs);
  Report rep(c.out);
  emit_header(rep, c, "harmonic-lyapunov",
              fmt("samples=%d potential=%s", samples, num(potential).c_str()));
  rep.line("samples,failures,mean,standard_error,exact,rel_error");
  rep.line(fmt("%d,%d,%s,%s,%s,%s", est.samples, est.failures, num(est.mean).c_str(),
               num(est.standard_error).c_str(), num(est.exact).c_str(),
               num(std::abs(est.mean - est.exact) / est.exact).c_str()));
}

void run_pressure_curve(const Common& c, int depth, const std::string& kappa_str) {
  std::vector<double> kappas = parse_grid(kappa_str, "--kappa");
  dhl::PressureCurve curve = dhl::pressure_curve(MapParams(c.b), depth, kappas);
  Report rep(c.out);
  emit_header(rep, c, "pressure-curve",
              fmt("depth=%d kappa=%s", depth, kappa_str.c_str()));
  rep.line("kappa,value");
  for (std::size_t i = 0; i < curve.kappa.size(); ++i)
    rep.line(fmt("%s,%s", num(curve.kappa[i]).c_str(), num(curve.value[i]).c_str()));
}

void run_exponent_complex(const Common& c, int angles, int levels, double g0, int skip) {
  MapParams p(c.b);
  dhl::ComplexExponentOptions opt;
  opt.angles = angles;
  opt.levels = levels;
  opt.base_potential = g0;
  opt.fit_skip = static_cast<std::size_t>(skip);
  opt.seed = c.seed;
  opt.jobs = c.jobs;
  dhl::ComplexExponentResult res = dhl::complex_exponent_experiment(p, opt);

  Report rep(c.out);
  emit_header(rep, c, "exponent-complex",
              fmt("angles=%d levels=%d g0=%s fit_skip=%d", angles, levels, num(g0).c_str(),
                  skip));
  rep.line("theta,level,g,one_minus_r,abs_second_deriv,envelope");
  for (const dhl::AngleSeries& a : res.series) {
    std::size_t n = std::min(a.x.size(), a.y.size());
    for (std::size_t k = 0; k < n; ++k) {
      double g = g0 * std::pow(static_cast<double>(c.b), -static_cast<double>(k));
      rep.line(fmt("%s,%zu,%s,%s,%s,%s", num(a.theta).c_str(), k, num(g).c_str(),
                   num(std::exp(-a.x[k])).c_str(), num(std::exp(a.y[k])).c_str(),
                   num(std::exp(a.envelope[k])).c_str()));
    }
  }
  rep.line(fmt("# summary: predicted_alpha=%s median_slope=%s slope_iqr=%s failures=%d "
               "angles=%d levels=%d",
               num(res.predicted_alpha).c_str(), num(res.median_slope).c_str(),
               num(res.slope_iqr).c_str(), res.failures, angles, levels));
}

void run_exponent_real(const Common& c, int levels, int skip, double r0) {
  dhl::RealExponentOptions opt;
  opt.levels = levels;
  opt.fit_skip = static_cast<std::size_t>(skip);
  opt.r0 = r0;
  dhl::RealExponentResult res = dhl::real_exponent_at_tc(MapParams(c.b), opt);

  Report rep(c.out);
  emit_header(rep, c, "exponent-real",
              fmt("levels=%d fit_skip=%d r0=%s", levels, skip, num(r0).c_str()));
  rep.line("level,x,y");
  for (std::size_t k = 0; k < res.x.size(); ++k)
    rep.line(fmt("%zu,%s,%s", k, num(res.x[k]).c_str(), num(res.y[k]).c_str()));
  rep.line(fmt("# summary: t_c=%s lambda=%s m=%d predicted_alpha=%s slope_differenced=%s "
               "slope_plain=%s",
               num(res.t_c).c_str(), num(res.lambda).c_str(), res.prediction.m,
               num(res.prediction.alpha).c_str(), num(res.fit.slope).c_str(),
               num(res.fit_plain.slope).c_str()));
}

void run_exponent_periodic(const Common& c, const std::string& digits_str,
                           double start_potential) {
  std::vector<int> digits = parse_int_list(digits_str, "--digits");
  dhl::PeriodicExponentOptions opt;
  opt.start_potential = start_potential;
  dhl::PeriodicExponentResult res =
      dhl::periodic_exponent_experiment(MapParams(c.b), digits, opt);

  Report rep(c.out);
  emit_header(rep, c, "exponent-periodic",
              fmt("digits=%s start_potential=%s", digits_str.c_str(),
                  num(start_potential).c_str()));
  rep.line("level,x,y");
  for (std::size_t k = 0; k < res.x.size(); ++k)
    rep.line(fmt("%zu,%s,%s", k, num(res.x[k]).c_str(), num(res.y[k]).c_str()));
  rep.line(fmt("# summary: theta=%s period=%d chi=%s m=%d predicted_alpha=%s slope=%s",
               num(res.landing.theta).c_str(), res.landing.period,
               num(res.landing.chi()).c_str(), res.prediction.m,
               num(res.prediction.alpha).c_str(), num(res.fit.slope).c_str()));
}

void run_oracle_verify(const Common& c, int level, const std::string& coupling_str) {
  std::vector<double> couplings = parse_grid(coupling_str, "--coupling");
  Report rep(c.out);
  emit_header(rep, c, "oracle-verify",
              fmt("level=%d coupling=%s", level, coupling_str.c_str()));
  rep.line("b,level,coupling,log_partition,coupling_out,log_bond_factor,residual");
  for (double coupling : couplings) {
    dhl::DecimationCheck chk = dhl::verify_decimation(c.b, level, coupling);
    rep.line(fmt("%d,%d,%s,%s,%s,%s,%s", c.b, level, num(coupling).c_str(),
                 num(chk.lhs).c_str(), num(chk.step.coupling_out).c_str(),
                 num(chk.step.log_bond_factor).c_str(), num(chk.residual).c_str()));
  }
}

// ---- selftest -----------------------------------------------------------------------

int run_selftest(bool deterministic) {
  struct Check {
    std::string name;
    bool ok;
    std::string detail;  // no commas: the table is CSV
  };
  std::vector<Check> checks;
  auto run_check = [&](const std::string& name,
                       const std::function<std::pair<bool, std::string>()>& body) {
    try {
      auto [ok, detail] = body();
      checks.push_back({name, ok, detail});
    } catch (const std::exception& e) {
      checks.push_back({name, false, std::string("exception: ") + e.what()});
    }
  };

  run_check("map-closed-form", [] {
    double worst = 0.0;
    for (int b : {2, 3}) {
      MapParams p(b);
      dhl::SplitMix64 rng(101);
      int accepted = 0;
      while (accepted < 100) {
        Complex t(3.0 * rng.next_unit() - 1.5, 3.0 * rng.next_unit() - 1.5);
        Complex u = dhl::pow_int(t, b);
        if (std::abs(1.0 + u) < 0.2) continue;
        ++accepted;
        Complex direct = 4.0 * u / ((1.0 + u) * (1.0 + u));
        worst = std::max(worst, std::abs(dhl::eval_map(p, ComplexValue(t)).value() - direct));
      }
    }
    return std::pair{worst < 1e-12, fmt("max residual %.3g (tol 1e-12)", worst)};
  });

  run_check("reciprocal-symmetry", [] {
    double worst = 0.0;
    for (int b : {2, 3}) {
      MapParams p(b);
      dhl::SplitMix64 rng(102);
      int accepted = 0;
      while (accepted < 100) {
        Complex t(2.0 * rng.next_unit() - 1.0, 2.0 * rng.next_unit() - 1.0);
        if (std::abs(t) < 0.1 || std::abs(1.0 + dhl::pow_int(t, b)) < 0.2) continue;
        ++accepted;
        Complex a = dhl::eval_map(p, ComplexValue(t)).value();
        Complex bb = dhl::eval_map(p, ComplexValue(1.0 / t)).value();
        worst = std::max(worst, std::abs(a - bb));
      }
    }
    return std::pair{worst < 1e-12, fmt("max |f(t)-f(1/t)| %.3g (tol 1e-12)", worst)};
  });

  run_check("degree-two-conjugacy", [] {
    double worst = 0.0;
    MapParams p(3);
    dhl::SplitMix64 rng(103);
    int accepted = 0;
    while (accepted < 100) {
      Complex z(4.0 * rng.next_unit() - 2.0, 4.0 * rng.next_unit() - 2.0);
      if (std::abs(z) > 2.0 || std::abs(z - 1.0) < 0.35 || std::abs(z + 1.0) < 0.35) continue;
      ++accepted;
      dhl::DecompositionRecord rec = dhl::decompose(p, ComplexValue(z));
      worst = std::max(worst, std::abs(rec.phi_of_K.value() - rec.tcheb_of_phi.value()));
    }
    return std::pair{worst < 1e-11, fmt("max residual %.3g (tol 1e-11)", worst)};
  });

  run_check("unstable-fixed-point", [] {
    double worst = 0.0;
    bool expanding = true;
    for (int b : {2, 3, 4}) {
      dhl::FixedPointInfo fp = dhl::find_unstable_fixed_point(MapParams(b));
      worst = std::max(worst, fp.residual);
      expanding = expanding && fp.multiplier > 1.0;
    }
    return std::pair{worst < 1e-12 && expanding,
                     fmt("max residual %.3g; all multipliers > 1: %s", worst,
                         expanding ? "yes" : "NO")};
  });

  run_check("series-boundary-value", [] {
    double worst = 0.0;
    dhl::TruncationPolicy policy;
    for (int b : {2, 3}) {
      double value = dhl::eval_F_jet(MapParams(b), Complex(1.0, 0.0), 0, policy).F().real();
      worst = std::max(worst, std::abs(value - 2.0 * b * std::log(2.0) / (2.0 * b - 1.0)));
    }
    return std::pair{worst < 1e-12, fmt("max deviation %.3g (tol 1e-12)", worst)};
  });

  run_check("series-functional-equation", [] {
    MapParams p(3);
    dhl::TruncationPolicy policy;
    dhl::SplitMix64 rng(105);
    double worst = 0.0;
    for (int i = 0; i < 25; ++i) {
      double g = std::exp(std::log(0.05) * (1.0 - rng.next_unit()));  // in [0.05, 1)
      Complex t = dhl::geodesic_point(p, g, rng.next_unit());
      dhl::FunctionalResiduals r = dhl::functional_residuals(p, t, policy);
      worst = std::max({worst, std::abs(r.r0), std::abs(r.r1), std::abs(r.r2)});
    }
    return std::pair{worst < 1e-8, fmt("max residual %.3g (tol 1e-8)", worst)};
  });

  run_check("potential-functoriality", [] {
    MapParams p(3);
    dhl::SplitMix64 rng(106);
    double worst = 0.0;
    for (int i = 0; i < 15; ++i) {
      double g = std::exp(std::log(1e-4) * (1.0 - rng.next_unit()));
      Complex t = dhl::geodesic_point(p, g, rng.next_unit());
      Complex ft = dhl::eval_map(p, ComplexValue(t)).value();
      worst = std::max(worst, std::abs(dhl::green_potential(p, ft).value -
                                       3.0 * dhl::green_potential(p, t).value));
    }
    return std::pair{worst < 1e-8, fmt("max residual %.3g (tol 1e-8)", worst)};
  });

  run_check("geodesic-equivariance", [] {
    MapParams p(3);
    dhl::SplitMix64 rng(107);
    double worst = 0.0;
    for (int i = 0; i < 15; ++i) {
      double g = std::exp(std::log(1e-4) * (1.0 - rng.next_unit()));
      double theta = rng.next_unit();
      Complex t = dhl::geodesic_point(p, g, theta);
      Complex ft = dhl::eval_map(p, ComplexValue(t)).value();
      Complex target = dhl::geodesic_point(p, 3.0 * g, dhl::frac_turn(3.0 * theta));
      worst = std::max(worst, std::abs(ft - target));
    }
    return std::pair{worst < 1e-8, fmt("max residual %.3g (tol 1e-8)", worst)};
  });

  run_check("boundary-landing", [] {
    double worst = 0.0;
    for (int b : {2, 3}) {
      MapParams p(b);
      Complex lim = dhl::boundary_point(p, 0.0);
      worst = std::max(worst, std::abs(lim - Complex(dhl::find_unstable_fixed_point(p).location,
                                                     0.0)));
    }
    return std::pair{worst < 1e-4, fmt("angle-0 landing error %.3g (tol 1e-4)", worst)};
  });

  run_check("harmonic-average", [] {
    dhl::LyapunovEstimate est = dhl::harmonic_lyapunov_estimate(MapParams(3), 2000, 12345);
    double rel = std::abs(est.mean - est.exact) / est.exact;
    return std::pair{rel < 0.025, fmt("mean %.6f vs %.6f (rel %.3g%%; tol 2.5%%)", est.mean,
                                      est.exact, 100.0 * rel)};
  });

  run_check("pressure-zero-exact", [] {
    bool ok = true;
    for (int b : {3, 4})
      ok = ok && dhl::pressure_estimate(MapParams(b), 0.0, 6).value ==
                     std::log(static_cast<double>(b));
    return std::pair{ok, std::string(ok ? "value at 0 equals ln b exactly"
                                        : "value at 0 DIFFERS from ln b")};
  });

  run_check("expansion-bound", [] {
    dhl::ExpansionStatistic st = dhl::metric_expansion_statistic(MapParams(3), 5000, 7);
    bool ok = st.observed_sup <= st.bound * (1.0 + 1e-9);
    return std::pair{ok, fmt("sup %.6f of bound %.6f", st.observed_sup, st.bound)};
  });

  run_check("backward-rate", [] {
    MapParams p(3);
    double sum = 0.0;
    for (int i = 0; i < 100; ++i) {
      dhl::SplitMix64 ctrl(dhl::per_sample_seed(999u, static_cast<std::uint64_t>(i)));
      double theta = ctrl.next_unit();
      std::uint64_t seed = ctrl.next_u64();
      sum += dhl::backward_cocycle_sample(p, theta, 20, seed).mean_rate();
    }
    double mean = sum / 100.0;
    double target = -std::log(1.5);
    double rel = std::abs(mean - target) / std::abs(target);
    return std::pair{rel < 0.12, fmt("mean rate %.5f vs %.5f (rel %.3g%%; tol 12%%)", mean,
                                     target, 100.0 * rel)};
  });

  run_check("decimation-exact", [] {
    double worst = std::max(dhl::verify_decimation(2, 0, 0.7).residual,
                            dhl::verify_decimation(3, 0, 0.5).residual);
    return std::pair{worst < 1e-10, fmt("max residual %.3g (tol 1e-10)", worst)};
  });

  run_check("render-classification", [] {
    MapParams p(2);
    dhl::PointClass inner = dhl::classify_point(p, Complex(0.2, 0.0), 200, 1e-3);
    dhl::PointClass outer = dhl::classify_point(p, Complex(0.99, 0.0), 200, 1e-3);
    double tc = dhl::find_unstable_fixed_point(p).location;
    dhl::PointClass edge = dhl::classify_point(p, Complex(tc, 0.0), 200, 1e-3);
    bool ok = inner.basin == dhl::Basin::Zero && outer.basin == dhl::Basin::One &&
              edge.basin == dhl::Basin::Undecided;
    return std::pair{ok, std::string(ok ? "attractor basins resolved as expected"
                                        : "basin classification WRONG")};
  });

  run_check("rng-stability", [] {
    dhl::SplitMix64 a(42), b(42);
    bool same = true;
    for (int i = 0; i < 10; ++i) same = same && a.next_u64() == b.next_u64();
    bool in_range = true;
    for (int i = 0; i < 50; ++i) {
      int v = a.next_below(7);
      in_range = in_range && v >= 0 && v < 7;
    }
    return std::pair{same && in_range,
                     std::string(same && in_range ? "streams reproducible and bounded"
                                                  : "stream mismatch")};
  });

  Report rep("-");
  rep.line("# schema=1");
  rep.line(fmt("# tool=dhl version=%s", kVersion));
  rep.line(fmt("# run: subcommand=selftest deterministic=%d", deterministic ? 1 : 0));
  if (!deterministic) {
    std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    rep.line(fmt("# generated=%s", buf));
  }
  rep.line("check,result,detail");
  int passed = 0;
  for (const Check& c : checks) {
    if (c.ok) ++passed;
    rep.line(fmt("%s,%s,%s", c.name.c_str(), c.ok ? "ok" : "FAIL", c.detail.c_str()));
  }
  rep.line(fmt("# selftest: %d/%zu checks passed", passed, checks.size()));
  return passed == static_cast<int>(checks.size()) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dhl: hierarchical-lattice renormalization toolkit (CSV/PPM reports)"};
  app.require_subcommand(1);

  int rc = 0;

  // map-orbit
  Common c_orbit;
  c_orbit.seed = env_default_seed();
  std::string orbit_start;
  int orbit_steps = 20;
  CLI::App* sc_orbit = app.add_subcommand("map-orbit", "iterate the map from a starting point");
  add_common(sc_orbit, c_orbit);
  sc_orbit->add_option("--start", orbit_start, "starting point as re,im")->required();
  sc_orbit->add_option("--steps", orbit_steps, "number of iterations")
      ->check(CLI::Range(0, 100000));
  sc_orbit->callback([&] { run_map_orbit(c_orbit, orbit_start, orbit_steps); });

  // free-energy
  Common c_free;
  c_free.seed = env_default_seed();
  std::string free_t, free_start, free_stop;
  int free_count = 2, free_order = 2, free_max_terms = 400;
  double free_tol = 1e-12;
  CLI::App* sc_free = app.add_subcommand(
      "free-energy", "evaluate the free-energy series and derivatives at points");
  add_common(sc_free, c_free);
  sc_free->add_option("--t", free_t, "single evaluation point as re,im");
  sc_free->add_option("--start", free_start, "segment start as re,im");
  sc_free->add_option("--stop", free_stop, "segment end as re,im");
  sc_free->add_option("--count", free_count, "number of segment samples");
  sc_free->add_option("--order", free_order, "highest derivative order (0..4)");
  sc_free->add_option("--tol", free_tol, "series truncation tolerance");
  sc_free->add_option("--max-terms", free_max_terms, "series term budget");
  sc_free->callback([&] {
    run_free_energy(c_free, free_t, free_start, free_stop, free_count, free_order, free_tol,
                    free_max_terms);
  });

  // geodesic-trace
  Common c_geo;
  c_geo.seed = env_default_seed();
  double geo_theta = 0.0, geo_potential = 1.0;
  int geo_levels = 12;
  CLI::App* sc_geo = app.add_subcommand(
      "geodesic-trace", "follow one external angle toward the boundary, level by level");
  add_common(sc_geo, c_geo);
  sc_geo->add_option("--theta", geo_theta, "external angle in turns");
  sc_geo->add_option("--potential", geo_potential, "starting potential g0 > 0");
  sc_geo->add_option("--levels", geo_levels, "descent levels (potential shrinks by 1/b each)")
      ->check(CLI::Range(0, 60));
  sc_geo->callback([&] { run_geodesic_trace(c_geo, geo_theta, geo_potential, geo_levels); });

  // julia-render
  Common c_render;
  c_render.seed = env_default_seed();
  std::string render_center = "0,0", render_out;
  double render_width = 3.0, render_eps = 1e-3;
  int render_px = 512, render_iter = 200;
  CLI::App* sc_render =
      app.add_subcommand("julia-render", "render basin classification to a PPM image");
  add_common(sc_render, c_render, /*with_out=*/false);
  sc_render->add_option("--center", render_center, "view center as re,im");
  sc_render->add_option("--width", render_width, "view side length in the plane");
  sc_render->add_option("--px", render_px, "pixels per side");
  sc_render->add_option("--max-iter", render_iter, "iteration budget per pixel");
  sc_render->add_option("--eps", render_eps, "attraction-ball radius");
  sc_render->add_option("--out", render_out, "PPM output path")->required();
  sc_render->callback([&] {
    run_julia_render(c_render, render_center, render_width, render_px, render_iter, render_eps,
                     render_out);
  });

  // harmonic-lyapunov
  Common c_lyap;
  c_lyap.seed = env_default_seed();
  int lyap_samples = 20000;
  double lyap_potential = 1e-7;
  CLI::App* sc_lyap = app.add_subcommand(
      "harmonic-lyapunov", "boundary-sampled average of ln|f'| against the exact ln b");
  add_common(sc_lyap, c_lyap);
  sc_lyap->add_option("--samples", lyap_samples, "number of boundary samples");
  sc_lyap->add_option("--potential", lyap_potential, "sampling potential near the boundary");
  sc_lyap->callback([&] { run_harmonic_lyapunov(c_lyap, lyap_samples, lyap_potential); });

  // pressure-curve
  Common c_press;
  c_press.seed = env_default_seed();
  int press_depth = 8;
  std::string press_kappa = "0:0.3:0.05";
  CLI::App* sc_press = app.add_subcommand(
      "pressure-curve", "finite-depth pressure of -kappa ln|f'| over a kappa grid");
  add_common(sc_press, c_press);
  sc_press->add_option("--depth", press_depth, "preimage-tree depth");
  sc_press->add_option("--kappa", press_kappa, "kappa grid as value or start:stop:step");
  sc_press->callback([&] { run_pressure_curve(c_press, press_depth, press_kappa); });

  // exponent-complex
  Common c_cx;
  c_cx.seed = env_default_seed();
  int cx_angles = 50, cx_levels = 16, cx_skip = 2;
  double cx_g0 = 0.6931471805599453;
  CLI::App* sc_cx = app.add_subcommand(
      "exponent-complex", "envelope slopes of ln|F''| along random geodesics");
  add_common(sc_cx, c_cx);
  sc_cx->add_option("--angles", cx_angles, "number of random angles");
  sc_cx->add_option("--levels", cx_levels, "levels per angle (potential shrinks by 1/b)");
  sc_cx->add_option("--g0", cx_g0, "starting potential");
  sc_cx->add_option("--skip", cx_skip, "levels skipped before fitting");
  sc_cx->callback([&] { run_exponent_complex(c_cx, cx_angles, cx_levels, cx_g0, cx_skip); });

  // exponent-real
  Common c_real;
  c_real.seed = env_default_seed();
  int real_levels = 18, real_skip = 4;
  double real_r0 = 0.05;
  CLI::App* sc_real = app.add_subcommand(
      "exponent-real", "blow-up exponent of the m-th derivative on the real approach");
  add_common(sc_real, c_real);
  sc_real->add_option("--levels", real_levels, "geometric approach levels");
  sc_real->add_option("--skip", real_skip, "levels skipped before fitting");
  sc_real->add_option("--r0", real_r0, "starting distance to the fixed point");
  sc_real->callback([&] { run_exponent_real(c_real, real_levels, real_skip, real_r0); });

  // exponent-periodic
  Common c_per;
  c_per.seed = env_default_seed();
  std::string per_digits = "0";
  double per_start = 1e-2;
  CLI::App* sc_per = app.add_subcommand(
      "exponent-periodic", "exponent along the geodesic of a periodic boundary word");
  add_common(sc_per, c_per);
  sc_per->add_option("--digits", per_digits, "periodic digit word, comma-separated");
  sc_per->add_option("--start-potential", per_start, "potential of the first sample");
  sc_per->callback([&] { run_exponent_periodic(c_per, per_digits, per_start); });

  // oracle-verify
  Common c_oracle;
  c_oracle.seed = env_default_seed();
  int oracle_level = 0;
  std::string oracle_coupling = "0.05:2:0.1";
  CLI::App* sc_oracle = app.add_subcommand(
      "oracle-verify", "exact decimation check of the microscopic spin model");
  add_common(sc_oracle, c_oracle);
  sc_oracle->add_option("--level", oracle_level, "lattice level n (fine level is n+1)");
  sc_oracle->add_option("--coupling", oracle_coupling,
                        "coupling grid as value or start:stop:step");
  sc_oracle->callback([&] { run_oracle_verify(c_oracle, oracle_level, oracle_coupling); });

  // selftest
  bool selftest_deterministic = false;
  CLI::App* sc_self =
      app.add_subcommand("selftest", "run the built-in invariant checks and print a table");
  sc_self->add_flag("--deterministic", selftest_deterministic,
                    "omit the timestamp header field so reruns are byte-identical");
  sc_self->callback([&] { rc = run_selftest(selftest_deterministic); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::fprintf(stderr, "usage error: %s\n\n", e.what());
    std::vector<CLI::App*> parsed = app.get_subcommands();
    std::fputs(parsed.empty() ? app.help().c_str() : parsed.front()->help().c_str(), stderr);
    return 2;
  } catch (const dhl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
