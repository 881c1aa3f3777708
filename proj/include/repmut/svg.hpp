#pragma once

// Simplex projection and self-contained SVG output (800 x 700 viewport)
// for phase portraits and stability diagrams.

#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "repmut/bifurcation.hpp"
#include "repmut/cycles.hpp"
#include "repmut/equilibria.hpp"
#include "repmut/integrator.hpp"

namespace repmut {

struct ProjectedPoint {
  double X = 0.0;
  double Y = 0.0;
};

/// Equilateral-triangle chart: ALLC at (0,0), ALLD at (1,0), TFT at (1/2, sqrt(3)/2).
inline ProjectedPoint simplex_project(double x, double y) { return {x + 0.5 * y, 0.5 * std::numbers::sqrt3 * y}; }
inline ProjectedPoint simplex_project(const SimplexState& s) { return simplex_project(s.x(), s.y()); }

inline constexpr int kSvgWidth = 800;
inline constexpr int kSvgHeight = 700;

namespace svg {

inline std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3f", v);
  return b;
}

inline std::string header(const std::string& title) {
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"700\" viewBox=\"0 0 800 700\" "
       "font-family=\"Helvetica, Arial, sans-serif\">\n";
  s += "<title>" + title + "</title>\n";
  s += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"700\" fill=\"white\"/>\n";
  return s;
}

inline std::string text(double x, double y, const std::string& t, int size = 16, const char* anchor = "middle",
                        const char* extra = "") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + std::to_string(size) +
         "\" text-anchor=\"" + anchor + "\"" + extra + ">" + t + "</text>\n";
}

/// Points closer than `min_px` to the last emitted one are dropped (the last point is kept).
template <class Pts>
std::string polyline(const Pts& pts, const std::string& style, double min_px = 0.8) {
  std::string s = "<polyline fill=\"none\" " + style + " points=\"";
  double lx = 0, ly = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto [px, py] = pts[i];
    if (i > 0 && i + 1 < pts.size() && std::hypot(px - lx, py - ly) < min_px) continue;
    if (i > 0) s += ' ';
    s += num(px) + "," + num(py);
    lx = px, ly = py;
  }
  return s + "\"/>\n";
}

}  // namespace svg

// ---------------------------------------------------------------------------
// Phase portrait

struct PortraitOptions {
  double t_max = 200.0;
  bool show_equilibria = true;
  bool detect_cycle = true;  // search for a limit cycle from the default seed
  double cycle_t_max = 20000.0;
  std::optional<LimitCycleRecord> cycle;  // drawn instead of searching when set
  std::string title = "phase portrait";
};

/// Maps the triangle chart into the viewport.
struct TriangleFrame {
  double left = 60.0, bottom = 640.0, side = 680.0;
  std::pair<double, double> operator()(double x, double y) const {
    const auto p = simplex_project(x, y);
    return {left + side * p.X, bottom - side * p.Y};
  }
};

inline std::string render_phase_portrait(const VectorField& f, const std::vector<SimplexState>& starts,
                                         const PortraitOptions& o = {}) {
  const TriangleFrame fr;
  std::string s = svg::header(o.title);
  {
    const auto a = fr(0, 0), b = fr(1, 0), c = fr(0, 1);
    s += "<polygon class=\"simplex\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"" +
         svg::num(a.first) + "," + svg::num(a.second) + " " + svg::num(b.first) + "," + svg::num(b.second) + " " +
         svg::num(c.first) + "," + svg::num(c.second) + "\"/>\n";
    s += svg::text(b.first + 8, b.second + 22, "ALLD", 18, "middle", " class=\"corner\"");
    s += svg::text(c.first, c.second - 12, "TFT", 18, "middle", " class=\"corner\"");
    s += svg::text(a.first - 8, a.second + 22, "ALLC", 18, "middle", " class=\"corner\"");
  }
  s += "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"5\" refY=\"5\" markerWidth=\"5\" "
       "markerHeight=\"5\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#4a6fa5\"/></marker></defs>\n";

  s += "<g class=\"trajectories\">\n";
  IntegratorOptions io;
  io.t_max = o.t_max;
  io.max_step = 0.05;
  for (const auto& s0 : starts) {
    const auto tr = integrate(f, s0, io);
    std::vector<std::pair<double, double>> pts;
    for (const auto& st : tr.states) pts.push_back(fr(st.x(), st.y()));
    s += svg::polyline(pts, "stroke=\"#4a6fa5\" stroke-width=\"1\" marker-end=\"url(#arrow)\"");
  }
  s += "</g>\n";

  std::optional<LimitCycleRecord> cyc = o.cycle;
  if (!cyc && o.detect_cycle && f.mu() > 0.0) {
    try {
      cyc = detect_limit_cycle(f, std::nullopt, o.cycle_t_max);
    } catch (const NumericalError&) {
    }
  }
  if (cyc) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& st : cyc->orbit) pts.push_back(fr(st.x(), st.y()));
    s += "<g class=\"limit-cycle\">\n" + svg::polyline(pts, "stroke=\"#d62728\" stroke-width=\"3\"") + "</g>\n";
  }

  if (o.show_equilibria) {
    s += "<g class=\"equilibria\">\n";
    for (const auto& r : fixed_points(f)) {
      const auto [px, py] = fr(r.location.x(), r.location.y());
      std::string fill = "white";
      if (r.is_stable()) fill = "black";
      else if (r.classification == Stability::saddle) fill = "#999999";
      else if (r.classification == Stability::nonhyperbolic) fill = "#f0c000";
      s += "<circle class=\"" + std::string(to_string(r.classification)) + "\" cx=\"" + svg::num(px) + "\" cy=\"" +
           svg::num(py) + "\" r=\"6\" fill=\"" + fill + "\" stroke=\"black\" stroke-width=\"1.5\"><title>" +
           to_string(r.classification) + " (" + svg::num(r.location.x()) + ", " + svg::num(r.location.y()) + ", " +
           svg::num(r.location.z()) + ")</title></circle>\n";
    }
    s += "</g>\n";
  }
  s += svg::text(20, 28, o.title + "  (mu = " + svg::num(f.mu()) + ", c = " + svg::num(f.cost()) + ")", 16, "start");
  s += "</svg>\n";
  return s;
}

// ---------------------------------------------------------------------------
// Stability diagram

inline const char* region_color(int id) {
  switch (id) {
    case 1: return "#f2d7d5";
    case 2: return "#fae5d3";
    case 3: return "#d5f5e3";
    case 4: return "#d6eaf8";
    case 5: return "#e8daef";
    default: return "#f4f4f4";
  }
}

inline const char* curve_color(CurveKind k) {
  switch (k) {
    case CurveKind::saddle_node: return "#1f4fd1";
    case CurveKind::hopf: return "#d62728";
    case CurveKind::homoclinic: return "#2ca02c";
  }
  return "black";
}

inline std::string render_diagram(const StabilityDiagram& d) {
  const auto& o = d.options;
  const double L = 90, R = 770, T = 50, B = 630;
  auto px = [&](double mu) { return L + (R - L) * (mu - o.mu_min) / (o.mu_max - o.mu_min); };
  auto py = [&](double c) { return B - (B - T) * (c - o.c_min) / (o.c_max - o.c_min); };
  std::string s = svg::header("stability diagram " + std::string(to_string(d.system)));
  s += "<defs><clipPath id=\"plot\"><rect x=\"" + svg::num(L) + "\" y=\"" + svg::num(T) + "\" width=\"" +
       svg::num(R - L) + "\" height=\"" + svg::num(B - T) + "\"/></clipPath></defs>\n";

  const std::size_t nm = d.mu_axis.size(), nc = d.c_axis.size();
  if (nm > 1 && nc > 1) {
    s += "<g class=\"regions\" clip-path=\"url(#plot)\">\n";
    const double w = (R - L) / (nm - 1), h = (B - T) / (nc - 1);
    for (std::size_t ic = 0; ic < nc; ++ic)
      for (std::size_t im = 0; im < nm; ++im) {
        const int id = d.at(im, ic).id;
        s += "<rect x=\"" + svg::num(px(d.mu_axis[im]) - w / 2) + "\" y=\"" + svg::num(py(d.c_axis[ic]) - h / 2) +
             "\" width=\"" + svg::num(w) + "\" height=\"" + svg::num(h) + "\" fill=\"" + region_color(id) +
             "\" data-region=\"" + std::to_string(id) + "\"/>\n";
      }
    s += "</g>\n";
    // region numbers at the cell of each id closest to that id's centroid
    s += "<g class=\"region-labels\">\n";
    for (int id : d.region_ids()) {
      double sm = 0, sc = 0;
      int n = 0;
      for (std::size_t ic = 0; ic < nc; ++ic)
        for (std::size_t im = 0; im < nm; ++im)
          if (d.at(im, ic).id == id) sm += im, sc += ic, ++n;
      sm /= n;
      sc /= n;
      double best = 1e300;
      std::size_t bm = 0, bc = 0;
      for (std::size_t ic = 0; ic < nc; ++ic)
        for (std::size_t im = 0; im < nm; ++im)
          if (d.at(im, ic).id == id) {
            const double dd = (im - sm) * (im - sm) + (ic - sc) * (ic - sc);
            if (dd < best) best = dd, bm = im, bc = ic;
          }
      s += svg::text(px(d.mu_axis[bm]), py(d.c_axis[bc]) + 7, std::to_string(id), 22, "middle",
                     " font-weight=\"bold\"");
    }
    s += "</g>\n";
  }

  s += "<g class=\"curves\" clip-path=\"url(#plot)\">\n";
  for (const auto& c : d.curves) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : c.samples) pts.emplace_back(px(p.mu), py(p.c));
    if (pts.size() < 2) continue;
    std::string style = std::string("stroke=\"") + curve_color(c.kind) + "\" class=\"" + to_string(c.kind) + " " +
                        to_string(c.method) + "\"";
    style += c.method == CurveMethod::closed_form ? " stroke-width=\"1.5\" stroke-dasharray=\"6,4\""
                                                  : " stroke-width=\"2.5\"";
    s += svg::polyline(pts, style);
  }
  s += "</g>\n";

  s += "<g class=\"codim2\">\n";
  for (const auto& p : d.points) {
    s += "<circle class=\"" + p.kind + "\" cx=\"" + svg::num(px(p.mu)) + "\" cy=\"" + svg::num(py(p.c)) +
         "\" r=\"6\" fill=\"black\"><title>" + p.kind + " (" + svg::num(p.mu) + ", " + svg::num(p.c) +
         ")</title></circle>\n";
    s += svg::text(px(p.mu) + 10, py(p.c) - 10, p.kind, 16, "start", " font-weight=\"bold\"");
  }
  s += "</g>\n";

  // axes
  s += "<rect x=\"" + svg::num(L) + "\" y=\"" + svg::num(T) + "\" width=\"" + svg::num(R - L) + "\" height=\"" +
       svg::num(B - T) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double m = o.mu_min + (o.mu_max - o.mu_min) * i / 5, c = o.c_min + (o.c_max - o.c_min) * i / 5;
    s += "<line x1=\"" + svg::num(px(m)) + "\" y1=\"" + svg::num(B) + "\" x2=\"" + svg::num(px(m)) + "\" y2=\"" +
         svg::num(B + 6) + "\" stroke=\"black\"/>\n";
    s += svg::text(px(m), B + 24, svg::num(m), 13);
    s += "<line x1=\"" + svg::num(L - 6) + "\" y1=\"" + svg::num(py(c)) + "\" x2=\"" + svg::num(L) + "\" y2=\"" +
         svg::num(py(c)) + "\" stroke=\"black\"/>\n";
    s += svg::text(L - 10, py(c) + 5, svg::num(c), 13, "end");
  }
  s += svg::text((L + R) / 2, B + 52, "mu (mutation probability)", 16);
  s += svg::text(24, (T + B) / 2, "c (cost of TFT)", 16, "middle",
                 (" transform=\"rotate(-90 24 " + svg::num((T + B) / 2) + ")\"").c_str());
  s += svg::text(400, 30, "stability diagram: " + std::string(to_string(d.system)), 18);
  // legend
  const double lx = R - 170, ly = T + 18;
  const std::pair<CurveKind, const char*> legend[] = {
      {CurveKind::saddle_node, "saddle-node"}, {CurveKind::hopf, "Hopf"}, {CurveKind::homoclinic, "homoclinic"}};
  for (int i = 0; i < 3; ++i) {
    s += "<line x1=\"" + svg::num(lx) + "\" y1=\"" + svg::num(ly + 20 * i) + "\" x2=\"" + svg::num(lx + 30) +
         "\" y2=\"" + svg::num(ly + 20 * i) + "\" stroke=\"" + curve_color(legend[i].first) +
         "\" stroke-width=\"2.5\"/>\n";
    s += svg::text(lx + 38, ly + 20 * i + 5, legend[i].second, 13, "start");
  }
  s += "</svg>\n";
  return s;
}

// ---------------------------------------------------------------------------
// CSV

/// `mu,c,c_cycle,c_absent,period_near,period_reference`, 17 significant digits.
inline void write_homoclinic_csv(std::ostream& os, const std::vector<HomoclinicResult>& v) {
  os << "mu,c,c_cycle,c_absent,period_near,period_reference\n";
  char buf[256];
  for (const auto& r : v) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.mu, r.c, r.c_cycle, r.c_absent,
                  r.period_near, r.period_reference);
    os << buf;
  }
}

}  // namespace repmut
