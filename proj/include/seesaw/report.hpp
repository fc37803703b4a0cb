#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "seesaw/error.hpp"
#include "seesaw/frame.hpp"
#include "seesaw/pipeline.hpp"

namespace seesaw::report {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
  std::string color;
  bool dashed = false;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Roughly five round tick values covering [lo, hi].
inline std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return out;
}

}  // namespace detail

/// Static SVG line chart with labelled axes and a legend.
inline std::string line_chart(const std::string& title, const std::vector<Series>& series,
                              const std::string& xlabel = "generation", const std::string& ylabel = "fitness") {
  constexpr double W = 720, H = 440, L = 70, R = 170, T = 40, B = 55;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (!any) x0 = x1 = x, y0 = y1 = y, any = true;
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad, y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(W) + "\" height=\"" +
                    detail::num(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + detail::num((L + W - R) / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         detail::escape(title) + "</text>\n";
  svg += "<g stroke=\"#ddd\">\n";
  for (double t : detail::ticks(y0, y1))
    svg += "<line x1=\"" + detail::num(L) + "\" x2=\"" + detail::num(W - R) + "\" y1=\"" + detail::num(py(t)) +
           "\" y2=\"" + detail::num(py(t)) + "\"/>\n";
  svg += "</g>\n";
  svg += "<g stroke=\"black\"><line x1=\"" + detail::num(L) + "\" y1=\"" + detail::num(H - B) + "\" x2=\"" +
         detail::num(W - R) + "\" y2=\"" + detail::num(H - B) + "\"/><line x1=\"" + detail::num(L) + "\" y1=\"" +
         detail::num(T) + "\" x2=\"" + detail::num(L) + "\" y2=\"" + detail::num(H - B) + "\"/></g>\n";
  for (double t : detail::ticks(x0, x1))
    svg += "<text x=\"" + detail::num(px(t)) + "\" y=\"" + detail::num(H - B + 16) + "\" text-anchor=\"middle\">" +
           detail::num(t) + "</text>\n";
  for (double t : detail::ticks(y0, y1))
    svg += "<text x=\"" + detail::num(L - 6) + "\" y=\"" + detail::num(py(t) + 4) + "\" text-anchor=\"end\">" +
           detail::num(t) + "</text>\n";
  svg += "<text class=\"xlabel\" x=\"" + detail::num((L + W - R) / 2) + "\" y=\"" + detail::num(H - 12) +
         "\" text-anchor=\"middle\">" + detail::escape(xlabel) + "</text>\n";
  svg += "<text class=\"ylabel\" transform=\"translate(18," + detail::num((T + H - B) / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + detail::escape(ylabel) + "</text>\n";

  double ly = T + 10;
  for (const auto& s : series) {
    std::string pts;
    for (const auto& [x, y] : s.points) pts += detail::num(px(x)) + "," + detail::num(py(y)) + " ";
    if (!pts.empty()) pts.pop_back();
    const std::string dash = s.dashed ? " stroke-dasharray=\"6 4\"" : "";
    svg += "<polyline class=\"series\" data-label=\"" + detail::escape(s.label) + "\" fill=\"none\" stroke=\"" +
           s.color + "\" stroke-width=\"2\"" + dash + " points=\"" + pts + "\"/>\n";
    svg += "<line x1=\"" + detail::num(W - R + 12) + "\" x2=\"" + detail::num(W - R + 36) + "\" y1=\"" +
           detail::num(ly) + "\" y2=\"" + detail::num(ly) + "\" stroke=\"" + s.color + "\" stroke-width=\"2\"" + dash +
           "/>\n";
    svg += "<text x=\"" + detail::num(W - R + 42) + "\" y=\"" + detail::num(ly + 4) + "\">" + detail::escape(s.label) +
           "</text>\n";
    ly += 18;
  }
  svg += "</svg>\n";
  return svg;
}

struct NamedLedger {
  std::string label;
  std::vector<pipeline::LedgerRow> rows;
};

/// Series for one stage: best and mean of the NEAT population (stage 1) or
/// of the CMA-ES samples (stage 2), one pair per ledger.
inline std::vector<Series> stage_series(const std::vector<NamedLedger>& ledgers, int stage) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  const std::string phase = stage == 1 ? "neat" : "tune";
  std::vector<Series> out;
  for (std::size_t i = 0; i < ledgers.size(); ++i) {
    const std::string prefix = ledgers.size() > 1 ? ledgers[i].label + " " : "";
    Series best{prefix + "best", {}, palette[i % 6], false};
    Series mean{prefix + "mean", {}, palette[i % 6], true};
    for (const auto& r : ledgers[i].rows)
      if (r.stage == stage && r.phase == phase) {
        best.points.emplace_back(static_cast<double>(r.generation), r.best);
        mean.points.emplace_back(static_cast<double>(r.generation), r.mean);
      }
    if (!best.points.empty()) {
      out.push_back(std::move(best));
      out.push_back(std::move(mean));
    }
  }
  return out;
}

/// Writes `<prefix>stage1.svg` (and `stage2.svg` when any ledger has tuning
/// rows) into `dir`. Returns the files written.
inline std::vector<std::filesystem::path> plot_ledgers(const std::vector<NamedLedger>& ledgers,
                                                       const std::filesystem::path& dir,
                                                       const std::string& prefix = "fitness_") {
  if (ledgers.empty()) throw LedgerParseError("no ledgers to plot");
  std::vector<std::pair<std::filesystem::path, std::string>> charts;
  for (int stage : {1, 2}) {
    const auto series = stage_series(ledgers, stage);
    if (series.empty()) continue;
    const std::string title = stage == 1 ? "Stage 1: Seesaw coevolution" : "Stage 2: weight tuning";
    charts.emplace_back(dir / (prefix + "stage" + std::to_string(stage) + ".svg"), line_chart(title, series));
  }
  if (charts.empty()) throw LedgerParseError("ledger has no plottable rows");
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& [path, text] : charts) {
    pipeline::write_text(path, text);
    written.push_back(path);
  }
  return written;
}

/// Binary PPM (P6).
inline void write_ppm(const Frame& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "P6\n" << f.width << " " << f.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(f.data.data()), static_cast<std::streamsize>(f.data.size()));
}

inline Frame read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (!in || magic != "P6" || maxval != 255 || w < 1 || h < 1) throw Error("not an 8-bit P6 image: " + path.string());
  in.get();
  Frame f(h, w);
  in.read(reinterpret_cast<char*>(f.data.data()), static_cast<std::streamsize>(f.data.size()));
  if (!in) throw Error("truncated image: " + path.string());
  return f;
}

}  // namespace seesaw::report
