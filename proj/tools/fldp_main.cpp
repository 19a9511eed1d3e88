// Command-line front end; talks to the library exclusively through the C API.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fldp.h"

namespace {

using nlohmann::json;

struct Common {
  std::string protocol_path;
  std::string out_dir = ".";
  int steps = 2048;
  int threads = 1;
  std::uint64_t seed = 1;
  bool plot = false;
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

[[noreturn]] void fail(int status, const std::string& msg) {
  json j;
  j["code"] = status;
  j["error"] = msg;
  std::fprintf(stderr, "%s\n", j.dump().c_str());
  std::exit(status);
}

void check(int status) {
  if (status != FLDP_OK) fail(status, fldp_last_error());
}

fldp_protocol* load_protocol(const std::string& path) {
  fldp_protocol* p = nullptr;
  check(fldp_protocol_from_file(path.c_str(), &p));
  return p;
}

std::ofstream open_out(const Common& c, const std::string& name) {
  std::filesystem::create_directories(c.out_dir);
  std::filesystem::path p = std::filesystem::path(c.out_dir) / name;
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(FLDP_ERR_CONFIG, "cannot open output file " + p.string());
  return out;
}

// Header row first, then the provenance comment line.
void csv_preamble(std::ofstream& out, const std::string& header,
                  std::uint64_t seed, const std::string& config) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, fnv1a(config));
  out << header << "\n"
      << "# fldp " << fldp_version() << " seed=" << seed << " config=" << hash
      << "\n";
}

void write_json(const Common& c, const std::string& name, const json& j) {
  std::ofstream out = open_out(c, name);
  out << j.dump(2) << "\n";
}

struct Series {
  std::string name;
  std::vector<double> ys;
};

// Minimal native SVG line plot: axes box plus one polyline per series.
void write_svg(const Common& c, const std::string& name,
               const std::vector<double>& xs, const std::vector<Series>& ss,
               const std::string& x_label, const std::string& y_label) {
  const int w = 640, h = 480, m = 60;
  double xmin = xs.front(), xmax = xs.back();
  double ymin = 1e300, ymax = -1e300;
  for (const Series& s : ss)
    for (double v : s.ys) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  if (ymax - ymin < 1e-12) {
    ymax += 1.0;
    ymin -= 1.0;
  }
  auto px = [&](double x) {
    return m + (x - xmin) / (xmax - xmin) * (w - 2 * m);
  };
  auto py = [&](double y) {
    return h - m - (y - ymin) / (ymax - ymin) * (h - 2 * m);
  };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

  std::ofstream out = open_out(c, name);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<rect x=\"" << m << "\" y=\"" << m << "\" width=\"" << w - 2 * m
      << "\" height=\"" << h - 2 * m
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (std::size_t k = 0; k < ss.size(); ++k) {
    out << "<polyline fill=\"none\" stroke=\"" << colors[k % 4]
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i)
      out << fmt(px(xs[i])) << "," << fmt(py(ss[k].ys[i])) << " ";
    out << "\"/>\n";
    out << "<text x=\"" << m + 8 << "\" y=\"" << m + 18 + 16 * int(k)
        << "\" fill=\"" << colors[k % 4] << "\" font-size=\"13\">"
        << ss[k].name << "</text>\n";
  }
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label
      << "</text>\n"
      << "<text x=\"16\" y=\"" << h / 2
      << "\" font-size=\"13\" transform=\"rotate(-90 16 " << h / 2 << ")\""
      << " text-anchor=\"middle\">" << y_label << "</text>\n"
      << "<text x=\"" << m << "\" y=\"" << h - m + 16 << "\" font-size=\"11\">"
      << fmt(xmin) << "</text>\n"
      << "<text x=\"" << w - m << "\" y=\"" << h - m + 16
      << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(xmax) << "</text>\n"
      << "<text x=\"" << m - 6 << "\" y=\"" << h - m
      << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(ymin) << "</text>\n"
      << "<text x=\"" << m - 6 << "\" y=\"" << m + 4
      << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(ymax)
      << "</text>\n</svg>\n";
}

void add_common(CLI::App* cmd, Common& c, bool needs_protocol = true) {
  auto* opt = cmd->add_option("--protocol", c.protocol_path, "protocol JSON file");
  if (needs_protocol) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out_dir, "output directory");
  cmd->add_option("--steps-per-period", c.steps, "integrator steps per period");
  cmd->add_option("--seed", c.seed, "base RNG seed");
  cmd->add_option("--threads", c.threads, "worker threads")
      ->envname("FLDP_THREADS");
  cmd->add_flag("--plot", c.plot, "also emit SVG plots");
}

int functional_code(const std::string& f) {
  if (f == "W" || f == "w") return FLDP_FUNCTIONAL_W;
  if (f == "S" || f == "s") return FLDP_FUNCTIONAL_S;
  fail(FLDP_ERR_CONFIG, "functional must be W or S");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fluctuation analysis for periodically driven Markov chains"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fldp_version());

  Common c;
  std::string functional = "W";
  double lambda_min = -3.0, lambda_max = 2.0;
  int lambda_points = 201, z_points = 401;
  double t = 20.0, tol = 1e-6, lambda = 0.5, step = 0.01;
  long paths = 10000;
  double alpha = 0.5, beta = 5.0, gamma = 2.0, smoothing = -1.0, t1 = -1.0;
  int k_max = 8;

  auto* validate = app.add_subcommand("validate", "run protocol checks");
  add_common(validate, c);

  auto* simulate = app.add_subcommand("simulate", "sample trajectories");
  add_common(simulate, c);
  simulate->add_option("--t", t, "horizon");
  simulate->add_option("--paths", paths, "number of paths");

  auto* fe = app.add_subcommand("free-energy", "forward/backward curves");
  add_common(fe, c);
  fe->add_option("--functional", functional, "W or S");
  fe->add_option("--lambda-min", lambda_min);
  fe->add_option("--lambda-max", lambda_max);
  fe->add_option("--lambda-points", lambda_points);

  auto* rf = app.add_subcommand("rate-function", "Legendre transform");
  add_common(rf, c);
  rf->add_option("--functional", functional, "W or S");
  rf->add_option("--lambda-points", lambda_points);
  rf->add_option("--z-points", z_points);

  auto* ft = app.add_subcommand("ft-check", "fluctuation-theorem residuals");
  add_common(ft, c);
  ft->add_option("--lambda-points", lambda_points);
  ft->add_option("--z-points", z_points);
  ft->add_option("--tol", tol, "residual tolerance");

  auto* ep = app.add_subcommand("ep-rate", "entropy production over a period");
  add_common(ep, c);

  auto* ce = app.add_subcommand("counterexample",
                                "epoch-doubling nonconvergence demo");
  add_common(ce, c);
  ce->add_option("--lambda", lambda, "tilt parameter");
  ce->add_option("--gamma", gamma, "scale factor on even epochs");
  ce->add_option("--k-max", k_max, "number of epochs");
  ce->add_option("--alpha", alpha, "lower rate bound");
  ce->add_option("--beta", beta, "upper rate bound");
  ce->add_option("--step", step, "integration step");
  ce->add_option("--smoothing-width", smoothing, "ramp width (<0: default)");
  ce->add_option("--t1", t1, "first epoch end (<0: default)");
  ce->add_option("--tol", tol, "verdict tolerance");

  auto* rep = app.add_subcommand("report", "entropy-rate consistency triangle");
  add_common(rep, c);
  rep->add_option("--t", t, "Monte Carlo horizon");
  rep->add_option("--paths", paths, "number of paths");

  CLI11_PARSE(app, argc, argv);

  if (validate->parsed()) {
    fldp_protocol* p = load_protocol(c.protocol_path);
    char* report = nullptr;
    const int status = fldp_protocol_validate(p, &report);
    if (report) {
      std::printf("%s\n", report);
      fldp_string_free(report);
    }
    fldp_protocol_free(p);
    if (status != FLDP_OK && status != FLDP_ERR_VALIDATION) check(status);
    return status;
  }

  if (simulate->parsed()) {
    fldp_protocol* p = load_protocol(c.protocol_path);
    const std::string config = "simulate " + c.protocol_path + " t=" + fmt(t) +
                               " paths=" + std::to_string(paths) +
                               " spp=" + std::to_string(c.steps);
    std::vector<double> w(static_cast<std::size_t>(paths)), s(static_cast<std::size_t>(paths));
    std::vector<long> jumps(static_cast<std::size_t>(paths));
    check(fldp_sample_paths(p, t, paths, c.seed, c.steps, c.threads, w.data(),
                            s.data(), jumps.data()));
    {
      std::ofstream out = open_out(c, "functionals.csv");
      csv_preamble(out, "path_id,w,s,n_jumps", c.seed, config);
      for (long i = 0; i < paths; ++i)
        out << i << "," << fmt(w[static_cast<std::size_t>(i)]) << ","
            << fmt(s[static_cast<std::size_t>(i)]) << "," << jumps[static_cast<std::size_t>(i)] << "\n";
    }
    {
      // One full trajectory (path 0) for inspection.
      const int cap = 1 << 20;
      std::vector<double> jt(cap);
      std::vector<int> js(cap);
      int nj = 0, init = 0;
      check(fldp_sample_trajectory(p, t, c.seed, 0, cap, jt.data(), js.data(),
                                   &nj, &init));
      std::ofstream out = open_out(c, "trajectory.csv");
      csv_preamble(out, "time,state", c.seed, config);
      out << fmt(0.0) << "," << init << "\n";
      for (int i = 0; i < nj; ++i)
        out << fmt(jt[static_cast<std::size_t>(i)]) << "," << js[static_cast<std::size_t>(i)] << "\n";
    }
    fldp_protocol_free(p);
    return 0;
  }

  if (fe->parsed()) {
    fldp_protocol* p = load_protocol(c.protocol_path);
    const int f = functional_code(functional);
    fldp_curve *cf = nullptr, *cb = nullptr;
    check(fldp_free_energy_curve(p, f, FLDP_DIRECTION_FORWARD, lambda_min,
                                 lambda_max, lambda_points, c.steps, c.threads,
                                 &cf));
    check(fldp_free_energy_curve(p, f, FLDP_DIRECTION_BACKWARD, lambda_min,
                                 lambda_max, lambda_points, c.steps, c.threads,
                                 &cb));
    const int n = fldp_curve_size(cf);
    std::vector<double> ls(static_cast<std::size_t>(n)), vf(static_cast<std::size_t>(n)),
        vb(static_cast<std::size_t>(n));
    check(fldp_curve_data(cf, ls.data(), vf.data()));
    check(fldp_curve_data(cb, nullptr, vb.data()));
    const std::string config = "free-energy " + c.protocol_path + " " +
                               functional + " [" + fmt(lambda_min) + "," +
                               fmt(lambda_max) + "]x" +
                               std::to_string(lambda_points) + " spp=" +
                               std::to_string(c.steps);
    std::ofstream out = open_out(c, "free_energy.csv");
    csv_preamble(out, "lambda,c_fwd,c_bwd", c.seed, config);
    for (int i = 0; i < n; ++i)
      out << fmt(ls[static_cast<std::size_t>(i)]) << "," << fmt(vf[static_cast<std::size_t>(i)]) << ","
          << fmt(vb[static_cast<std::size_t>(i)]) << "\n";
    if (c.plot)
      write_svg(c, "free_energy.svg", ls,
                {{"c_fwd", vf}, {"c_bwd", vb}}, "lambda", "c(lambda)");
    fldp_curve_free(cf);
    fldp_curve_free(cb);
    fldp_protocol_free(p);
    return 0;
  }

  if (rf->parsed()) {
    fldp_protocol* p = load_protocol(c.protocol_path);
    const int f = functional_code(functional);
    fldp_curve *cf = nullptr, *cb = nullptr;
    check(fldp_free_energy_curve(p, f, FLDP_DIRECTION_FORWARD, lambda_min,
                                 lambda_max, lambda_points, c.steps, c.threads,
                                 &cf));
    check(fldp_free_energy_curve(p, f, FLDP_DIRECTION_BACKWARD, lambda_min,
                                 lambda_max, lambda_points, c.steps, c.threads,
                                 &cb));
    fldp_rate_function *rff = nullptr, *rfb = nullptr;
    check(fldp_rate_function_pair(cf, cb, z_points, &rff, &rfb));
    const int m = fldp_rate_function_size(rff);
    std::vector<double> zs(static_cast<std::size_t>(m)), vf(static_cast<std::size_t>(m)),
        vb(static_cast<std::size_t>(m));
    std::vector<int> bf(static_cast<std::size_t>(m)), bb(static_cast<std::size_t>(m));
    check(fldp_rate_function_data(rff, zs.data(), vf.data(), nullptr,
                                  bf.data()));
    check(fldp_rate_function_data(rfb, nullptr, vb.data(), nullptr, bb.data()));
    const std::string config = "rate-function " + c.protocol_path + " " +
                               functional + " z=" + std::to_string(z_points);
    std::ofstream out = open_out(c, "rate_function.csv");
    csv_preamble(out, "z,I_fwd,I_bwd,boundary_fwd,boundary_bwd,ft_residual",
                 c.seed, config);
    for (int i = 0; i < m; ++i) {
      const double res =
          vf[static_cast<std::size_t>(i)] - vb[static_cast<std::size_t>(m - 1 - i)] + zs[static_cast<std::size_t>(i)];
      out << fmt(zs[static_cast<std::size_t>(i)]) << "," << fmt(vf[static_cast<std::size_t>(i)]) << ","
          << fmt(vb[static_cast<std::size_t>(i)]) << "," << bf[static_cast<std::size_t>(i)] << ","
          << bb[static_cast<std::size_t>(i)] << "," << fmt(res) << "\n";
    }
    if (c.plot)
      write_svg(c, "rate_function.svg", zs, {{"I_fwd", vf}, {"I_bwd", vb}},
                "z", "I(z)");
    double zstar = 0.0, istar = 0.0;
    check(fldp_rate_function_minimizer(rff, &zstar, &istar));
    json j;
    j["minimizer_z"] = zstar;
    j["minimizer_value"] = istar;
    std::printf("%s\n", j.dump(2).c_str());
    fldp_rate_function_free(rff);
    fldp_rate_function_free(rfb);
    fldp_curve_free(cf);
    fldp_curve_free(cb);
    fldp_protocol_free(p);
    return 0;
  }

  if (ft->parsed()) {
    fldp_protocol* p = load_protocol(c.protocol_path);
    json combined;
    int worst = 0;
    for (int f : {FLDP_FUNCTIONAL_W, FLDP_FUNCTIONAL_S}) {
      char* report = nullptr;
      const int status = fldp_ft_check(p, f, lambda_points, z_points, c.steps,
                                       c.threads, tol, &report);
      if (status != FLDP_OK && status != FLDP_ERR_NUMERICAL) check(status);
      worst = std::max(worst, status);
      combined[f == FLDP_FUNCTIONAL_W ? "W" : "S"] =
          report ? json::parse(report) : json();
      if (report) fldp_string_free(report);
    }
    std::printf("%s\n", combined.dump(2).c_str());
    write_json(c, "ft_check.json", combined);
    fldp_protocol_free(p);
    return worst;
  }

  if (ep->parsed()) {
    fldp_protocol* p = load_protocol(c.protocol_path);
    fldp_ep_curve* e = nullptr;
    check(fldp_ep_curve_new(p, c.steps, &e));
    const int n = fldp_ep_curve_size(e);
    std::vector<double> ts(static_cast<std::size_t>(n)), vs(static_cast<std::size_t>(n));
    check(fldp_ep_curve_data(e, ts.data(), vs.data()));
    const std::string config =
        "ep-rate " + c.protocol_path + " spp=" + std::to_string(c.steps);
    std::ofstream out = open_out(c, "ep_curve.csv");
    csv_preamble(out, "s,ep_rate", c.seed, config);
    for (int i = 0; i < n; ++i)
      out << fmt(ts[static_cast<std::size_t>(i)]) << "," << fmt(vs[static_cast<std::size_t>(i)]) << "\n";
    if (c.plot) write_svg(c, "ep_curve.svg", ts, {{"e_p", vs}}, "s", "e_p(s)");
    json j;
    j["time_average"] = fldp_ep_curve_time_average(e);
    std::printf("%s\n", j.dump(2).c_str());
    fldp_ep_curve_free(e);
    fldp_protocol_free(p);
    return 0;
  }

  if (ce->parsed()) {
    fldp_protocol* p = load_protocol(c.protocol_path);
    const int n = fldp_protocol_n_states(p);
    std::vector<double> base(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    check(fldp_protocol_generator(p, 0.0, base.data()));
    fldp_protocol_free(p);
    fldp_trace* tr = nullptr;
    check(fldp_counterexample_trace(alpha, beta, base.data(), n, gamma, k_max,
                                    lambda, step, smoothing, t1, &tr));
    const int m = fldp_trace_size(tr);
    std::vector<double> ts(static_cast<std::size_t>(m)), vs(static_cast<std::size_t>(m));
    std::vector<int> eps(static_cast<std::size_t>(m)), par(static_cast<std::size_t>(m));
    check(fldp_trace_data(tr, ts.data(), eps.data(), par.data(), vs.data()));
    const std::string config = "counterexample " + c.protocol_path +
                               " gamma=" + fmt(gamma) + " k=" +
                               std::to_string(k_max) + " lambda=" + fmt(lambda);
    std::ofstream out = open_out(c, "trace.csv");
    csv_preamble(out, "t,epoch_index,parity,c_S_lambda_t", c.seed, config);
    for (int i = 0; i < m; ++i)
      out << fmt(ts[static_cast<std::size_t>(i)]) << "," << eps[static_cast<std::size_t>(i)] << ","
          << par[static_cast<std::size_t>(i)] << "," << fmt(vs[static_cast<std::size_t>(i)]) << "\n";
    double lo = 0, hi = 0, gap = 0;
    int bad = 0;
    check(fldp_trace_verdict(tr, tol, &lo, &hi, &gap, &bad));
    json j;
    j["liminf_est"] = lo;
    j["limsup_est"] = hi;
    j["gap"] = gap;
    j["tol"] = tol;
    j["verdict"] = bad ? "nonconvergent" : "convergent";
    std::printf("%s\n", j.dump(2).c_str());
    write_json(c, "verdict.json", j);
    fldp_trace_free(tr);
    return 0;
  }

  if (rep->parsed()) {
    fldp_protocol* p = load_protocol(c.protocol_path);
    char* report = nullptr;
    check(fldp_report(p, t, paths, c.seed, c.steps, c.threads, &report));
    std::printf("%s\n", report);
    write_json(c, "report.json", json::parse(report));
    fldp_string_free(report);
    fldp_protocol_free(p);
    return 0;
  }

  return 0;
}
