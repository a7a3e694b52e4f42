#pragma once

#include <string>
#include <vector>

namespace arcast {

/// Minimal standalone SVG line plot: fixed margins, linear axes with tick
/// labels, one polyline per named series.
class SvgLinePlot {
 public:
  SvgLinePlot(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

  void add_series(const std::string& name, const std::vector<double>& xs,
                  const std::vector<double>& ys);
  /// Log-scale the y axis (non-positive values are dropped).
  void set_log_y(bool log_y) { log_y_ = log_y; }

  std::string render() const;
  void write(const std::string& path) const;

 private:
  struct Series {
    std::string name;
    std::vector<double> xs, ys;
  };
  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
  bool log_y_ = false;
};

/// Field heatmap (row-major, x fastest) with a symmetric blue-white-red
/// colormap, one cell per grid point.
void write_heatmap_svg(const std::string& path, const std::string& title, int nx, int ny,
                       const std::vector<std::vector<double>>& panels,
                       const std::vector<std::string>& panel_titles);

}  // namespace arcast
