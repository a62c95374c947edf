#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "delegrid/errors.hpp"
#include "delegrid/experiments.hpp"
#include "delegrid/io.hpp"

namespace delegrid {

/// One annotated data point embedded in a chart, exactly mirroring the CSV
/// numbers so charts can be checked by script.
struct ChartPoint {
  std::string series;
  int level = 0;
  double mean = 0.0;
  std::optional<double> variance;
};

namespace detail {

struct Series {
  std::string name;
  std::string color;
  // level -> (mean, variance)
  std::map<int, std::pair<double, double>> points;
};

inline std::string chart_color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                  "#bcbd22", "#17becf"};
  return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

inline std::string svg_chart(const std::string& title, const std::string& y_label,
                             const std::vector<Series>& series, double y_min_hint,
                             double y_max_hint, bool with_bands) {
  constexpr double width = 720, height = 440;
  constexpr double left = 64, right = 560, top = 48, bottom = 392;
  int x_min = 0, x_max = 1;
  double y_min = y_min_hint, y_max = y_max_hint;
  bool first = true;
  for (const Series& s : series) {
    for (const auto& [level, mv] : s.points) {
      const double sd = with_bands ? std::sqrt(std::max(0.0, mv.second)) : 0.0;
      if (first) {
        x_min = x_max = level;
        first = false;
      } else {
        x_min = std::min(x_min, level);
        x_max = std::max(x_max, level);
      }
      y_min = std::min(y_min, mv.first - sd);
      y_max = std::max(y_max, mv.first + sd);
    }
  }
  if (x_min == x_max) {
    --x_min;
    ++x_max;
  }
  if (y_max <= y_min) y_max = y_min + 1.0;
  const double pad = 0.05 * (y_max - y_min);
  y_max += pad;
  if (y_min != 0.0) y_min -= pad;
  const auto sx = [&](double level) {
    return left + (level - x_min) / static_cast<double>(x_max - x_min) * (right - left);
  };
  const auto sy = [&](double v) { return bottom - (v - y_min) / (y_max - y_min) * (bottom - top); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<metadata id=\"chart-data\">\n";
  for (const Series& s : series) {
    for (const auto& [level, mv] : s.points) {
      svg << "point series=" << s.name << " level=" << level << " mean=" << fmt_g6(mv.first);
      if (with_bands) svg << " variance=" << fmt_g6(mv.second);
      svg << "\n";
    }
  }
  svg << "</metadata>\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << (left + right) / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

  // axes and ticks
  svg << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
      << bottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
      << "\" stroke=\"black\"/>\n";
  for (int level = x_min; level <= x_max; ++level) {
    svg << "<line x1=\"" << sx(level) << "\" y1=\"" << bottom << "\" x2=\"" << sx(level)
        << "\" y2=\"" << bottom + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << sx(level) << "\" y=\"" << bottom + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << level
        << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double v = y_min + (y_max - y_min) * i / 5.0;
    svg << "<line x1=\"" << left - 5 << "\" y1=\"" << sy(v) << "\" x2=\"" << left << "\" y2=\""
        << sy(v) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << left - 9 << "\" y=\"" << sy(v) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_g6(v)
        << "</text>\n";
  }
  svg << "<text x=\"" << (left + right) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << "error states per type</text>\n";
  svg << "<text x=\"16\" y=\"" << (top + bottom) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 16 " << (top + bottom) / 2 << ")\">" << y_label << "</text>\n";

  // variance bands under the lines
  if (with_bands) {
    for (const Series& s : series) {
      if (s.points.size() < 2) continue;
      std::ostringstream pts;
      for (auto it = s.points.begin(); it != s.points.end(); ++it) {
        const double sd = std::sqrt(std::max(0.0, it->second.second));
        pts << sx(it->first) << "," << sy(it->second.first + sd) << " ";
      }
      for (auto it = s.points.rbegin(); it != s.points.rend(); ++it) {
        const double sd = std::sqrt(std::max(0.0, it->second.second));
        pts << sx(it->first) << "," << sy(it->second.first - sd) << " ";
      }
      svg << "<polygon points=\"" << pts.str() << "\" fill=\"" << s.color
          << "\" opacity=\"0.15\"/>\n";
    }
  }
  for (const Series& s : series) {
    if (s.points.size() > 1) {
      std::ostringstream pts;
      for (const auto& [level, mv] : s.points) pts << sx(level) << "," << sy(mv.first) << " ";
      svg << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << s.color
          << "\" stroke-width=\"2\"/>\n";
    }
    for (const auto& [level, mv] : s.points) {
      svg << "<circle cx=\"" << sx(level) << "\" cy=\"" << sy(mv.first) << "\" r=\"3\" fill=\""
          << s.color << "\"/>\n";
    }
  }
  // legend
  double ly = top;
  for (const Series& s : series) {
    svg << "<line x1=\"" << right + 12 << "\" y1=\"" << ly << "\" x2=\"" << right + 36
        << "\" y2=\"" << ly << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << right + 42 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.name << "</text>\n";
    ly += 18;
  }
  svg << "</svg>\n";
  return svg.str();
}

inline std::string safe_name(const std::string& label) {
  std::string out;
  for (char c : label) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '-';
  return out;
}

}  // namespace detail

/// Mean game length vs error level for every condition of one scenario,
/// with variance bands across grids.
inline std::string game_length_chart(const std::string& scenario,
                                     const std::vector<AggregateRecord>& aggregates,
                                     int team_size) {
  std::vector<detail::Series> series;
  const std::vector<std::string> conditions = condition_labels(team_size);
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    detail::Series s;
    s.name = conditions[i];
    s.color = detail::chart_color(i);
    for (const AggregateRecord& agg : aggregates) {
      if (agg.scenario == scenario && agg.condition == conditions[i])
        s.points[agg.level] = {agg.mean, agg.variance};
    }
    if (!s.points.empty()) series.push_back(std::move(s));
  }
  if (series.empty()) fail(Errc::empty_group, "no aggregates for scenario '" + scenario + "'");
  return detail::svg_chart("Game lengths: " + scenario, "mean game length", series, 0.0, 1.0,
                           true);
}

/// Manager selection frequency per (error tag, agent) vs error level for one
/// scenario.
inline std::string selection_chart(const std::string& scenario,
                                   const std::vector<SelectionAggregate>& selections) {
  std::map<std::string, detail::Series> by_name;
  for (const SelectionAggregate& sel : selections) {
    if (sel.scenario != scenario) continue;
    const std::string name = "sel_" + sel.tag + "_" + std::to_string(sel.agent);
    auto [it, inserted] = by_name.emplace(name, detail::Series{name, "", {}});
    it->second.points[sel.level] = {sel.mean_freq, 0.0};
  }
  if (by_name.empty()) fail(Errc::empty_group, "no selection data for scenario '" + scenario + "'");
  std::vector<detail::Series> series;
  std::size_t i = 0;
  for (auto& [name, s] : by_name) {
    s.color = detail::chart_color(i++);
    series.push_back(std::move(s));
  }
  return detail::svg_chart("Selection preferences: " + scenario, "selection frequency", series,
                           0.0, 1.0, false);
}

/// Writes one game-length chart and one selection chart per scenario.
/// Returns the emitted paths.
inline std::vector<std::filesystem::path> emit_charts(
    const std::vector<AggregateRecord>& aggregates,
    const std::vector<SelectionAggregate>& selections, int team_size,
    const std::filesystem::path& out_dir) {
  if (aggregates.empty()) fail(Errc::empty_group, "no aggregates to chart");
  std::vector<std::string> scenarios;
  for (const AggregateRecord& agg : aggregates)
    if (std::find(scenarios.begin(), scenarios.end(), agg.scenario) == scenarios.end())
      scenarios.push_back(agg.scenario);
  std::sort(scenarios.begin(), scenarios.end());
  std::vector<std::filesystem::path> paths;
  for (const std::string& scenario : scenarios) {
    const auto base = out_dir / detail::safe_name(scenario);
    const auto gamelen = base.string() + "_gamelen.svg";
    write_file(gamelen, game_length_chart(scenario, aggregates, team_size));
    paths.emplace_back(gamelen);
    const bool has_selection = std::any_of(
        selections.begin(), selections.end(),
        [&](const SelectionAggregate& sel) { return sel.scenario == scenario; });
    if (has_selection) {
      const auto self = base.string() + "_selection.svg";
      write_file(self, selection_chart(scenario, selections));
      paths.emplace_back(self);
    }
  }
  return paths;
}

/// Parses the metadata block back out of an emitted chart.
inline std::vector<ChartPoint> parse_chart_annotations(const std::string& svg) {
  std::vector<ChartPoint> points;
  std::istringstream in(svg);
  std::string line;
  bool in_data = false;
  while (std::getline(in, line)) {
    if (line.find("<metadata id=\"chart-data\">") != std::string::npos) {
      in_data = true;
      continue;
    }
    if (line.find("</metadata>") != std::string::npos) break;
    if (!in_data || line.rfind("point ", 0) != 0) continue;
    ChartPoint pt;
    std::istringstream row(line.substr(6));
    std::string token;
    while (row >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      if (key == "series") pt.series = value;
      if (key == "level") pt.level = std::stoi(value);
      if (key == "mean") pt.mean = std::stod(value);
      if (key == "variance") pt.variance = std::stod(value);
    }
    points.push_back(std::move(pt));
  }
  return points;
}

}  // namespace delegrid
