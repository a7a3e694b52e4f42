#include "arcast/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "arcast/errors.hpp"

namespace arcast {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace

void SvgLinePlot::add_series(const std::string& name, const std::vector<double>& xs,
                             const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw ShapeMismatch("series x/y lengths differ");
  series_.push_back({name, xs, ys});
}

std::string SvgLinePlot::render() const {
  const double W = 720, H = 440, ml = 70, mr = 170, mt = 40, mb = 50;
  const double pw = W - ml - mr, ph = H - mt - mb;

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const auto& s : series_)
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      double y = s.ys[i];
      if (!std::isfinite(s.xs[i]) || !std::isfinite(y)) continue;
      if (log_y_) {
        if (y <= 0) continue;
        y = std::log10(y);
      }
      if (first) {
        x_min = x_max = s.xs[i];
        y_min = y_max = y;
        first = false;
      } else {
        x_min = std::min(x_min, s.xs[i]);
        x_max = std::max(x_max, s.xs[i]);
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
      }
    }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;

  auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
  auto py = [&](double y) { return mt + ph - (y - y_min) / (y_max - y_min) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" << title_
      << "</text>\n";
  svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int t = 0; t <= 4; ++t) {
    const double fx = x_min + (x_max - x_min) * t / 4.0;
    const double fy = y_min + (y_max - y_min) * t / 4.0;
    svg << "<text x=\"" << px(fx) << "\" y=\"" << H - mb + 18
        << "\" text-anchor=\"middle\">" << fmt(fx) << "</text>\n";
    const std::string ylab = log_y_ ? ("1e" + fmt(fy)) : fmt(fy);
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">" << ylab
        << "</text>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << py(fy) << "\" x2=\"" << ml + pw << "\" y2=\""
        << py(fy) << "\" stroke=\"#dddddd\"/>\n";
  }
  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
      << x_label_ << "</text>\n";
  svg << "<text x=\"18\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << mt + ph / 2 << ")\">" << y_label_ << "</text>\n";

  int color = 0;
  double legend_y = mt + 10;
  for (const auto& s : series_) {
    const char* c = kPalette[color % 10];
    std::ostringstream pts;
    bool pen_down = false;
    std::string path;
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      double y = s.ys[i];
      if (!std::isfinite(s.xs[i]) || !std::isfinite(y) || (log_y_ && y <= 0)) {
        pen_down = false;
        continue;
      }
      if (log_y_) y = std::log10(y);
      path += (pen_down ? " " : (path.empty() ? "" : " "));
      path += fmt(px(s.xs[i])) + "," + fmt(py(y));
      pen_down = true;
    }
    svg << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"" << path
        << "\"/>\n";
    svg << "<line x1=\"" << ml + pw + 10 << "\" y1=\"" << legend_y << "\" x2=\"" << ml + pw + 30
        << "\" y2=\"" << legend_y << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << ml + pw + 35 << "\" y=\"" << legend_y + 4 << "\">" << s.name
        << "</text>\n";
    legend_y += 18;
    ++color;
  }
  svg << "</svg>\n";
  return svg.str();
}

void SvgLinePlot::write(const std::string& path) const { write_text_file(path, render()); }

void write_heatmap_svg(const std::string& path, const std::string& title, int nx, int ny,
                       const std::vector<std::vector<double>>& panels,
                       const std::vector<std::string>& panel_titles) {
  if (panels.empty() || panels.size() != panel_titles.size())
    throw ShapeMismatch("heatmap needs one title per panel");
  for (const auto& p : panels)
    if (static_cast<int>(p.size()) != nx * ny) throw ShapeMismatch("panel size != nx*ny");

  double lim = 0.0;
  for (const auto& p : panels)
    for (double v : p)
      if (std::isfinite(v)) lim = std::max(lim, std::fabs(v));
  if (lim == 0.0) lim = 1.0;

  const double cell = std::max(2.0, 256.0 / std::max(nx, ny));
  const double pw = nx * cell, ph = ny * cell, gap = 28, mt = 48;
  const double W = panels.size() * (pw + gap) + gap, H = ph + mt + 20;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"15\">" << title
      << "</text>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const double x0 = gap + p * (pw + gap);
    svg << "<text x=\"" << x0 + pw / 2 << "\" y=\"" << mt - 8 << "\" text-anchor=\"middle\">"
        << panel_titles[p] << "</text>\n";
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const double v = panels[p][static_cast<std::size_t>(j) * nx + i];
        int rr = 255, gg = 255, bb = 255;
        if (std::isfinite(v)) {
          const double t = std::clamp(v / lim, -1.0, 1.0);
          if (t >= 0) {  // white -> red
            rr = 255;
            gg = bb = static_cast<int>(255 * (1.0 - t));
          } else {  // white -> blue
            bb = 255;
            rr = gg = static_cast<int>(255 * (1.0 + t));
          }
        } else {
          rr = gg = bb = 0;
        }
        svg << "<rect x=\"" << x0 + i * cell << "\" y=\"" << mt + (ny - 1 - j) * cell
            << "\" width=\"" << cell + 0.5 << "\" height=\"" << cell + 0.5 << "\" fill=\"rgb(" << rr
            << ',' << gg << ',' << bb << ")\"/>\n";
      }
    }
  }
  svg << "</svg>\n";
  write_text_file(path, svg.str());
}

}  // namespace arcast
