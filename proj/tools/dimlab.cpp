#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dimlab/config.hpp"
#include "dimlab/locdim.hpp"
#include "dimlab/spectrum.hpp"
#include "dimlab/svg.hpp"
#include "dimlab/verify.hpp"

using namespace dimlab;

namespace {

// Measure references: a preset name, inline JSON, or @path to a JSON file.
MeasureSpec load_ref(const std::string& text) {
  if (!text.empty() && text[0] == '@') {
    std::ifstream is(text.substr(1));
    if (!is) fail(Errc::io_error, "cannot open measure file " + text.substr(1));
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_measure_text(ss.str());
  }
  return parse_measure_text(text);
}

// Writes to the path when given, standard output otherwise.
struct OutStream {
  explicit OutStream(const std::string& path) {
    if (!path.empty()) {
      file.open(path);
      if (!file) fail(Errc::io_error, "cannot open " + path + " for writing");
    }
  }
  std::ostream& get() { return file.is_open() ? file : std::cout; }
  std::ofstream file;
};

bool rational_mode(const std::string& mode) { return mode == "rational"; }

void write_svg(const std::string& path, const std::string& body) {
  std::ofstream os(path);
  if (!os) fail(Errc::io_error, "cannot open " + path + " for writing");
  os << body;
}

const IfsMeasure& plain_ifs(const MeasureSpec& spec, const char* what) {
  if (spec.kind != MeasureSpec::Kind::ifs)
    fail(Errc::config_error, std::string(what) + " needs a plain self-similar measure");
  return spec.ifs;
}

struct CommonOpts {
  std::string measure;
  std::string mode = "float";
  std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_measure = true) {
  auto* m = cmd->add_option("measure", o.measure,
                            "measure: preset name, inline JSON, or @file.json");
  if (need_measure) m->required();
  cmd->add_option("--mode", o.mode, "arithmetic: float or rational (exact)")
      ->check(CLI::IsMember({"float", "double", "rational"}));
  cmd->add_option("--out", o.out, "output CSV path (default: standard output)");
}

// dump_csv covers the plain frame; scaled or shifted vectors get the same
// rows under a header that carries the frame.
template <class T>
void dump_any_csv(const MassVector<T>& v, std::ostream& os) {
  if (v.scale == 1.0 && v.shift == 0.0) {
    dump_csv(v, os);
    return;
  }
  os << "base,level,offset,smear,scale,shift,total\n"
     << v.base << ',' << v.level << ',' << v.offset_idx << ',' << v.smear << ','
     << detail::fmt_double(v.scale) << ',' << detail::fmt_double(v.shift) << ','
     << detail::fmt_scalar(v.total()) << '\n';
  os << "index,mass\n";
  for (std::int64_t g = v.offset_idx; g < v.offset_idx + v.length; ++g) {
    T m = v.at_global(g);
    if (!is_zero(m)) os << g << ',' << detail::fmt_scalar(m) << '\n';
  }
}

template <class T>
void run_refine(const MeasureSpec& spec, int level, std::ostream& os) {
  dump_any_csv(build_level<T>(spec, spec_base(spec) == 0 ? 3 : spec_base(spec), level), os);
}

template <class T>
void run_convolve(const MeasureSpec& a, const MeasureSpec& b, int level, std::ostream& os) {
  int base = spec_base(a);
  int bb = spec_base(b);
  if (base != 0 && bb != 0 && base != bb) fail(Errc::base_mismatch, "operands use different bases");
  if (base == 0) base = bb == 0 ? 3 : bb;
  auto va = build_level<T>(a, base, level);
  auto vb = build_level<T>(b, base, level);
  auto c = b.kind == MeasureSpec::Kind::atomic ? convolve_atomic(va, b.atoms) : convolve(va, vb);
  if constexpr (std::is_same_v<T, double>) {
    if (c.err_bound > 0) std::cerr << "err_bound " << c.err_bound << "\n";
  }
  dump_any_csv(c, os);
}

template <class T>
void run_power(const MeasureSpec& spec, int k, int level, bool cyclic, std::ostream& os) {
  int base = spec_base(spec) == 0 ? 3 : spec_base(spec);
  auto v = cyclic ? build_cyclic<T>(spec, base, level) : build_level<T>(spec, base, level);
  auto p = convolve_power(v, k);
  if (!cyclic) {
    dump_csv(p, os);
    return;
  }
  os << "base,level,smear,total\n"
     << p.base << ',' << p.level << ',' << p.smear << ',' << detail::fmt_scalar(p.total())
     << '\n';
  os << "index,mass\n";
  for (std::int64_t j = 0; j < p.length; ++j) {
    T m = p.at_global(j);
    if (!is_zero(m)) os << j << ',' << detail::fmt_scalar(m) << '\n';
  }
}

template <class T>
DimProfile point_profile(const MeasureSpec& mu, const MeasureSpec* nu, int power, double x,
                         int nmax) {
  MeasureSpec spec = mu;
  if (power > 1) {
    MeasureSpec p;
    p.kind = MeasureSpec::Kind::power;
    p.children.push_back(mu);
    p.k = power;
    spec = p;
  }
  int base = spec_base(spec);
  if (nu) {
    int b2 = spec_base(*nu);
    if (base != 0 && b2 != 0 && base != b2)
      fail(Errc::base_mismatch, "operands use different bases");
    if (base == 0) base = b2;
  }
  if (base == 0) base = 3;
  return detail::conv_profiles<T>(spec, nu, base, nmax, {x})[0];
}

void print_profile_rows(const DimProfile& p, std::ostream& os) {
  os << "level,r,lower,upper,d_lower,d_upper\n";
  for (const auto& row : p.rows)
    os << row.level << ',' << detail::fmt_double(row.r) << ',' << detail::fmt_double(row.lower)
       << ',' << detail::fmt_double(row.upper) << ',' << detail::fmt_double(row.d_lower) << ','
       << detail::fmt_double(row.d_upper) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dimlab: local dimensions of self-similar measures and their convolutions.\n"
      "Cell-level mass cascades give two-sided ball-mass brackets; dimension\n"
      "estimates are slopes of log-mass against log-radius. DIMLAB_THREADS caps\n"
      "worker threads."};
  app.require_subcommand(1);

  // show
  CommonOpts show_o;
  auto* c_show = app.add_subcommand(
      "show", "Describe a measure: branches, weights, exact support hull, entropy dimension.");
  add_common(c_show, show_o);

  // refine
  CommonOpts ref_o;
  int ref_level = 8;
  auto* c_ref = app.add_subcommand(
      "refine",
      "Cell masses at one cascade level. Claim exercised: the level-n vector is the\n"
      "exact law of the first n digits, so cell masses are products of branch weights.");
  add_common(c_ref, ref_o);
  c_ref->add_option("--level", ref_level, "cascade depth")->check(CLI::Range(1, 32));

  // convolve
  CommonOpts conv_o;
  std::string conv_with;
  int conv_level = 8;
  auto* c_conv = app.add_subcommand(
      "convolve",
      "Cell masses of a convolution. Claim exercised: the sum law of independent digit\n"
      "cascades is the discrete convolution of their cell vectors, with one cell of smear.");
  add_common(c_conv, conv_o);
  c_conv->add_option("--with", conv_with, "second measure")->required();
  c_conv->add_option("--level", conv_level, "cascade depth")->check(CLI::Range(1, 32));

  // power
  CommonOpts pow_o;
  int pow_k = 2, pow_level = 8;
  bool pow_cyclic = false;
  auto* c_pow = app.add_subcommand(
      "power",
      "k-fold self-convolution, on the line or reduced mod 1 on the circle. Claim\n"
      "exercised: repeated convolution fills support gaps, and on the circle enough\n"
      "powers cover everything.");
  add_common(c_pow, pow_o);
  c_pow->add_option("--k", pow_k, "number of factors")->check(CLI::Range(1, 64));
  c_pow->add_option("--level", pow_level, "cascade depth")->check(CLI::Range(1, 32));
  c_pow->add_flag("--cyclic", pow_cyclic, "reduce mod 1 onto the circle");

  // dim
  CommonOpts dim_o;
  std::string dim_with;
  int dim_power = 1, dim_nmax = 14;
  double dim_x = 0;
  auto* c_dim = app.add_subcommand(
      "dim",
      "Local dimension estimate at one point: per-level ball-mass brackets and the\n"
      "slope of log-mass vs log-radius. Claim exercised: at m-adic endpoints the\n"
      "cascade is exact and the slope equals log(weight)/log(1/base) at every level.");
  add_common(c_dim, dim_o);
  c_dim->add_option("--with", dim_with, "convolve with this measure first");
  c_dim->add_option("--power", dim_power, "self-convolution power")->check(CLI::Range(1, 16));
  c_dim->add_option("--x", dim_x, "evaluation point")->required();
  c_dim->add_option("--nmax", dim_nmax, "deepest cascade level")->check(CLI::Range(1, 32));

  // profile
  CommonOpts prof_o;
  std::string prof_with, prof_svg;
  int prof_level = 12, prof_grid = 64;
  double prof_from = 0, prof_to = 0;
  auto* c_prof = app.add_subcommand(
      "profile",
      "Dimension estimates over a grid of points. Claim exercised: convolution keeps\n"
      "interior local dimensions below the factor ceiling while edge points keep the\n"
      "sum of the factor endpoint dimensions.");
  add_common(c_prof, prof_o);
  c_prof->add_option("--with", prof_with, "convolve with this measure first");
  c_prof->add_option("--level", prof_level, "deepest cascade level")->check(CLI::Range(1, 32));
  c_prof->add_option("--grid", prof_grid, "number of interior grid points")
      ->check(CLI::Range(1, 100000));
  c_prof->add_option("--from", prof_from, "left end of the grid window (default: hull)");
  c_prof->add_option("--to", prof_to, "right end of the grid window (default: hull)");
  c_prof->add_option("--svg", prof_svg, "also write an SVG line plot here");

  // spectrum
  CommonOpts spec_o;
  std::string spec_svg, spec_method = "closed";
  double spec_qmin = -5, spec_qmax = 5;
  int spec_steps = 41;
  auto* c_spec = app.add_subcommand(
      "spectrum",
      "Multifractal spectrum rows (q, beta, alpha, f). Claim exercised: beta(q) =\n"
      "log_m sum p_i^q is the scaling exponent, beta(1) = 0, and f = q*alpha + beta\n"
      "is its Legendre transform with alpha in the dimension range.");
  add_common(c_spec, spec_o);
  c_spec->add_option("--qmin", spec_qmin, "smallest moment order");
  c_spec->add_option("--qmax", spec_qmax, "largest moment order");
  c_spec->add_option("--steps", spec_steps, "number of q samples")->check(CLI::Range(2, 100000));
  c_spec->add_option("--method", spec_method, "closed form or bisection cross-check")
      ->check(CLI::IsMember({"closed", "bisect"}));
  c_spec->add_option("--svg", spec_svg, "also write an SVG line plot here");

  // verify
  std::string ver_suite = "default", ver_out = "reports";
  bool ver_list = false;
  auto* c_ver = app.add_subcommand(
      "verify",
      "Run theorem-shaped scenario checks and write CSV reports. Claims exercised:\n"
      "interior upper bounds, uniquely-decomposed and gap-translated point dimensions,\n"
      "isolated boundary evidence, and circle-power ceilings, each with audited\n"
      "hypotheses and signed margins.");
  c_ver->add_option("--suite", ver_suite, "'default' or a suite JSON path");
  c_ver->add_option("--out", ver_out, "report directory");
  c_ver->add_flag("--list", ver_list, "list scenario names and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_show) {
      auto spec = load_ref(show_o.measure);
      std::cout << describe(spec) << "\n";
      auto hull = detail::spec_hull(spec);
      std::cout << "base " << (spec_base(spec) == 0 ? 3 : spec_base(spec)) << "\n";
      std::cout << "support hull [" << detail::fmt_double(hull.lo) << ", "
                << detail::fmt_double(hull.hi) << "]\n";
      if (spec.kind == MeasureSpec::Kind::ifs) {
        std::cout << "entropy dim " << detail::fmt_double(entropy_dim(spec.ifs)) << "\n";
        auto [alo, ahi] = dim_range(spec.ifs);
        std::cout << "dim range [" << detail::fmt_double(alo) << ", " << detail::fmt_double(ahi)
                  << "]\n";
      }
      return 0;
    }
    if (*c_ref) {
      OutStream os(ref_o.out);
      auto spec = load_ref(ref_o.measure);
      if (rational_mode(ref_o.mode))
        run_refine<Rat>(spec, ref_level, os.get());
      else
        run_refine<double>(spec, ref_level, os.get());
      return 0;
    }
    if (*c_conv) {
      OutStream os(conv_o.out);
      auto a = load_ref(conv_o.measure);
      auto b = load_ref(conv_with);
      if (rational_mode(conv_o.mode))
        run_convolve<Rat>(a, b, conv_level, os.get());
      else
        run_convolve<double>(a, b, conv_level, os.get());
      return 0;
    }
    if (*c_pow) {
      OutStream os(pow_o.out);
      auto spec = load_ref(pow_o.measure);
      if (rational_mode(pow_o.mode))
        run_power<Rat>(spec, pow_k, pow_level, pow_cyclic, os.get());
      else
        run_power<double>(spec, pow_k, pow_level, pow_cyclic, os.get());
      return 0;
    }
    if (*c_dim) {
      auto mu = load_ref(dim_o.measure);
      std::optional<MeasureSpec> nu;
      if (!dim_with.empty()) nu = load_ref(dim_with);
      DimProfile p;
      if (rational_mode(dim_o.mode))
        p = point_profile<Rat>(mu, nu ? &*nu : nullptr, dim_power, dim_x, dim_nmax);
      else
        p = point_profile<double>(mu, nu ? &*nu : nullptr, dim_power, dim_x, dim_nmax);
      if (!dim_o.out.empty()) {
        OutStream os(dim_o.out);
        print_profile_rows(p, os.get());
      }
      std::cout << "x " << detail::fmt_double(p.x) << "\n";
      std::cout << "levels " << p.rows.size() << "\n";
      std::cout << "slope_est " << detail::fmt_double(p.slope_est) << "\n";
      std::cout << "lower_dim_est " << detail::fmt_double(p.lower_dim_est) << "\n";
      std::cout << "upper_dim_est " << detail::fmt_double(p.upper_dim_est) << "\n";
      return 0;
    }
    if (*c_prof) {
      auto mu = load_ref(prof_o.measure);
      std::optional<MeasureSpec> nu;
      if (!prof_with.empty()) nu = load_ref(prof_with);
      Scenario sc;
      sc.mu = mu;
      if (nu) sc.nu = *nu;
      int base = detail::pair_base(sc);
      Interval hull = detail::spec_hull(mu);
      if (nu) {
        auto hn = detail::spec_hull(*nu);
        hull = {hull.lo + hn.lo, hull.hi + hn.hi};
      }
      double lo = prof_from, hi = prof_to;
      if (!(hi > lo)) {
        lo = hull.lo;
        hi = hull.hi;
      }
      auto xs = detail::interior_grid(lo, hi, prof_grid);
      std::vector<DimProfile> profs;
      if (rational_mode(prof_o.mode))
        profs = detail::conv_profiles<Rat>(mu, nu ? &*nu : nullptr, base, prof_level, xs);
      else
        profs = detail::conv_profiles<double>(mu, nu ? &*nu : nullptr, base, prof_level, xs);
      {
        OutStream os(prof_o.out);
        os.get() << "x,slope_est,lower_dim_est,upper_dim_est\n";
        for (const auto& p : profs)
          os.get() << detail::fmt_double(p.x) << ',' << detail::fmt_double(p.slope_est) << ','
                   << detail::fmt_double(p.lower_dim_est) << ','
                   << detail::fmt_double(p.upper_dim_est) << '\n';
      }
      if (!prof_svg.empty()) {
        SvgSeries s;
        s.label = "slope_est";
        for (const auto& p : profs) {
          s.x.push_back(p.x);
          s.y.push_back(p.slope_est);
        }
        write_svg(prof_svg, svg_plot({s}, "dimension profile", "x", "dim estimate"));
      }
      return 0;
    }
    if (*c_spec) {
      auto spec = load_ref(spec_o.measure);
      const IfsMeasure& mu = plain_ifs(spec, "spectrum");
      auto method = spec_method == "bisect" ? BetaMethod::bisect : BetaMethod::closed;
      auto rows = legendre_spectrum(mu, spec_qmin, spec_qmax, spec_steps, method);
      {
        OutStream os(spec_o.out);
        os.get() << "q,beta,alpha,f\n";
        for (const auto& r : rows)
          os.get() << detail::fmt_double(r.q) << ',' << detail::fmt_double(r.beta) << ','
                   << detail::fmt_double(r.alpha) << ',' << detail::fmt_double(r.f_alpha)
                   << '\n';
      }
      if (!spec_svg.empty()) {
        SvgSeries s;
        s.label = "f(alpha)";
        for (const auto& r : rows) {
          s.x.push_back(r.alpha);
          s.y.push_back(r.f_alpha);
        }
        write_svg(spec_svg, svg_plot({s}, "multifractal spectrum", "alpha", "f"));
      }
      return 0;
    }
    if (*c_ver) {
      auto suite = ver_suite == "default" ? default_suite() : load_suite(ver_suite);
      if (ver_list) {
        for (const auto& sc : suite) std::cout << sc.name << " (" << sc.check << ")\n";
        return 0;
      }
      auto reports = run_suite(suite, ver_out, std::cout);
      return all_ok(reports) ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
