#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 numerical failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "repmut/bifurcation.hpp"
#include "repmut/config.hpp"
#include "repmut/conjecture.hpp"
#include "repmut/svg.hpp"

namespace repmut {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

namespace cli {

struct Globals {
  std::string config;
  std::string system;
  std::optional<double> mu;
  std::optional<double> cost;
  std::uint64_t seed = 1;
  std::string out = ".";
  int threads = 0;
};

inline RunConfig resolve(const Globals& g) {
  RunConfig rc;
  bool have_system = false;
  if (!g.config.empty()) {
    rc = load_config(g.config);
    have_system = true;
  }
  if (!g.system.empty()) {
    const SystemId id = parse_system_id(g.system);
    if (id == SystemId::general) throw InvalidArgument("--system general needs a config with a mutation matrix");
    rc.system = id;
    rc.mutation = MutationSpec::from_pattern(pattern_for(id));
    have_system = true;
  }
  if (!have_system) throw InvalidArgument("no system given: use --system or --config");
  if (g.mu) rc.params.mu = *g.mu;
  if (g.cost) rc.params.cost = *g.cost;
  if (rc.system == SystemId::replicator && rc.params.mu != 0.0)
    throw InvalidArgument("the replicator system has mu = 0");
  rc.params.validate();
  return rc;
}

inline std::filesystem::path out_file(const Globals& g, const std::string& name) {
  std::filesystem::create_directories(g.out);
  return std::filesystem::path(g.out) / name;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw InvalidArgument("cannot write " + p.string());
  os << s;
}

/// Uniform random interior point.
inline SimplexState random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    double a = u(rng), b = u(rng);
    if (a + b > 1.0) a = 1.0 - a, b = 1.0 - b;
    if (a > 1e-6 && b > 1e-6 && a + b < 1.0 - 1e-6) return SimplexState(a, b);
  }
}

inline std::vector<SimplexState> starts(const Globals& g, int n, std::optional<double> x0, std::optional<double> y0) {
  if (x0 || y0) {
    if (!(x0 && y0)) throw InvalidArgument("--x0 and --y0 go together");
    return {SimplexState(*x0, *y0)};
  }
  std::mt19937_64 rng(g.seed);
  std::vector<SimplexState> v;
  for (int i = 0; i < n; ++i) v.push_back(random_state(rng));
  return v;
}

}  // namespace cli

/// Entry point shared by the executable and the tests.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Replicator-mutator dynamics of ALLD / TFT / ALLC", "repmut"};
  app.require_subcommand(1);
  app.fallthrough();
  cli::Globals g;
  app.add_option("--config", g.config, "JSON config (payoffs, cost, mu, mutation)")->check(CLI::ExistingFile);
  app.add_option("--system", g.system, "replicator | tft_to_allc | alld_to_allc | uniform");
  app.add_option("--mu", g.mu, "mutation probability");
  app.add_option("--cost", g.cost, "cost of TFT");
  app.add_option("--seed", g.seed, "seed for random starts");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads (0 = REPMUT_THREADS or hardware)");

  std::optional<double> x0, y0;
  double t_max = 500.0;
  int n_starts = 1;
  auto* sim = app.add_subcommand("simulate", "integrate trajectories to CSV");
  sim->add_option("--x0", x0, "ALLD share of the start");
  sim->add_option("--y0", y0, "TFT share of the start");
  sim->add_option("--t-max", t_max, "time horizon");
  sim->add_option("--starts", n_starts, "number of random starts")->check(CLI::PositiveNumber);

  int portrait_starts = 16;
  double portrait_t = 200.0;
  auto* por = app.add_subcommand("portrait", "phase portrait SVG");
  por->add_option("--starts", portrait_starts, "number of random starts")->check(CLI::NonNegativeNumber);
  por->add_option("--t-max", portrait_t, "trajectory horizon");

  auto* eq = app.add_subcommand("equilibria", "fixed points with eigenvalues and stability (JSON)");

  DiagramOptions dopt;
  auto* dia = app.add_subcommand("diagram", "stability diagram JSON + SVG");
  dia->add_option("--mu-min", dopt.mu_min);
  dia->add_option("--mu-max", dopt.mu_max);
  dia->add_option("--c-min", dopt.c_min);
  dia->add_option("--c-max", dopt.c_max);
  dia->add_option("--resolution", dopt.resolution, "samples per closed-form curve")->check(CLI::PositiveNumber);
  dia->add_option("--grid", dopt.grid, "classification grid points per axis")->check(CLI::NonNegativeNumber);
  dia->add_option("--homoclinic-samples", dopt.homoclinic_samples)->check(CLI::NonNegativeNumber);

  double h_mu_min = 0.005, h_mu_max = 0.05, h_c_lo = 1e-3;
  std::optional<double> h_c_hi;
  int h_samples = 10;
  double h_tol = 1e-4;
  auto* hom = app.add_subcommand("homoclinic", "homoclinic curve by bisection on cycle existence (CSV)");
  hom->add_option("--mu-min", h_mu_min);
  hom->add_option("--mu-max", h_mu_max);
  hom->add_option("--samples", h_samples)->check(CLI::PositiveNumber);
  hom->add_option("--c-lo", h_c_lo, "lower end of the c scan");
  hom->add_option("--c-hi", h_c_hi, "upper end of the c scan (default: fold curve or 1)");
  hom->add_option("--tol", h_tol, "bracket width in c");

  double cyc_t = 20000.0;
  auto* cyc = app.add_subcommand("cycle", "limit cycle metrics JSON + orbit CSV");
  cyc->add_option("--t-max", cyc_t, "search horizon");
  cyc->add_option("--x0", x0, "ALLD share of the seed");
  cyc->add_option("--y0", y0, "TFT share of the seed");

  ConjectureOptions copt;
  auto* con = app.add_subcommand("conjecture", "random admissible mutation patterns: search for stable cycles");
  con->add_option("--matrices", copt.matrices)->check(CLI::PositiveNumber);
  con->add_option("--mu-max", copt.mu_max);
  con->add_option("--c-max", copt.c_max);
  con->add_option("--grid", copt.grid)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    auto dump = [&](const nlohmann::json& j, const std::string& name) {
      const auto p = cli::out_file(g, name);
      cli::write_text(p, j.dump(2) + "\n");
      return p.string();
    };

    if (*con) {
      copt.seed = g.seed;
      copt.threads = g.threads;
      const auto rep = conjecture_harness(copt);
      const auto p = dump(to_json(rep), "conjecture.json");
      out << "conjecture: stable cycle found for " << rep.found() << " of " << rep.trials.size()
          << " patterns -> " << p << "\n";
      return kExitOk;
    }

    const RunConfig rc = cli::resolve(g);
    const VectorField f = rc.field();

    if (*sim) {
      IntegratorOptions io;
      io.t_max = t_max;
      nlohmann::json summary = nlohmann::json::array();
      const auto ss = cli::starts(g, n_starts, x0, y0);
      for (std::size_t i = 0; i < ss.size(); ++i) {
        const auto tr = integrate(f, ss[i], io);
        const auto p = cli::out_file(g, ss.size() == 1 ? "trajectory.csv" : "trajectory_" + std::to_string(i) + ".csv");
        std::ofstream os(p, std::ios::binary);
        write_trajectory_csv(os, tr);
        summary.push_back({{"file", p.string()},
                           {"start", {ss[i].x(), ss[i].y(), ss[i].z()}},
                           {"final", {tr.final_state.x(), tr.final_state.y(), tr.final_state.z()}},
                           {"final_time", tr.final_time},
                           {"terminal_event", to_string(tr.terminal_event)}});
      }
      out << summary.dump(2) << "\n";
      return kExitOk;
    }
    if (*por) {
      PortraitOptions po;
      po.t_max = portrait_t;
      po.title = std::string(to_string(rc.system));
      const auto p = cli::out_file(g, "portrait.svg");
      cli::write_text(p, render_phase_portrait(f, cli::starts(g, portrait_starts, {}, {}), po));
      out << "portrait -> " << p.string() << "\n";
      return kExitOk;
    }
    if (*eq) {
      nlohmann::json j;
      j["config"] = to_json(rc);
      j["equilibria"] = to_json(fixed_points(f));
      const auto p = dump(j, "equilibria.json");
      out << j["equilibria"].dump(2) << "\n";
      err << "equilibria -> " << p << "\n";
      return kExitOk;
    }
    if (*dia) {
      dopt.threads = g.threads;
      const auto d = stability_diagram(f, dopt);
      const auto pj = dump(to_json(d), "diagram.json");
      const auto ps = cli::out_file(g, "diagram.svg");
      cli::write_text(ps, render_diagram(d));
      out << "regions:";
      for (int id : d.region_ids()) out << ' ' << id;
      out << "; points:";
      for (const auto& p : d.points) out << ' ' << p.kind << "(" << p.mu << ", " << p.c << ")";
      out << "\ndiagram -> " << pj << ", " << ps.string() << "\n";
      for (const auto& w : d.warnings) err << "warning: " << w << "\n";
      return kExitOk;
    }
    if (*hom) {
      if (!(h_mu_max >= h_mu_min) || !(h_mu_min > 0)) throw InvalidArgument("need 0 < mu-min <= mu-max");
      HomoclinicOptions ho;
      ho.tol = h_tol;
      std::vector<double> mus;
      for (int i = 0; i < h_samples; ++i)
        mus.push_back(h_samples == 1 ? h_mu_min : h_mu_min + (h_mu_max - h_mu_min) * i / (h_samples - 1));
      std::vector<std::optional<HomoclinicResult>> res(mus.size());
      parallel_for(mus.size(), g.threads, [&](std::size_t i) {
        double hi = h_c_hi.value_or(1.0);
        if (!h_c_hi) {
          try {
            if (rc.system == SystemId::tft_to_allc) hi = 0.999 * sn_curve_tft_allc(mus[i]);
            if (rc.system == SystemId::alld_to_allc) hi = 0.999 * sn_curve_alld_allc(mus[i]);
          } catch (const Error&) {
          }
        }
        try {
          if (auto br = homoclinic_bracket(f, mus[i], h_c_lo, hi, 24, ho))
            res[i] = homoclinic_trace(f, mus[i], br->first, br->second, ho);
        } catch (const NumericalError&) {
        }
      });
      std::vector<HomoclinicResult> v;
      for (std::size_t i = 0; i < res.size(); ++i) {
        if (res[i]) v.push_back(*res[i]);
        else err << "warning: no homoclinic bracket at mu = " << mus[i] << "\n";
      }
      const auto p = cli::out_file(g, "homoclinic.csv");
      std::ofstream os(p, std::ios::binary);
      write_homoclinic_csv(os, v);
      out << "homoclinic: " << v.size() << " of " << mus.size() << " samples -> " << p.string() << "\n";
      return v.empty() ? kExitNumerical : kExitOk;
    }
    if (*cyc) {
      std::optional<SimplexState> seed;
      if (x0 || y0) seed = cli::starts(g, 1, x0, y0).front();
      const auto r = detect_limit_cycle(f, seed, cyc_t);
      nlohmann::json j;
      j["config"] = to_json(rc);
      if (!r) {
        j["cycle"] = false;
        const auto p = dump(j, "cycle.json");
        out << j.dump(2) << "\n";
        err << "no limit cycle -> " << p << "\n";
        return kExitOk;
      }
      j["cycle"] = true;
      j["metrics"] = to_json(*r);
      const auto pj = dump(j, "cycle.json");
      const auto pc = cli::out_file(g, "cycle.csv");
      std::ofstream os(pc, std::ios::binary);
      write_cycle_csv(os, *r);
      out << j.dump(2) << "\n";
      err << "cycle -> " << pj << ", " << pc.string() << "\n";
      return kExitOk;
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace repmut
