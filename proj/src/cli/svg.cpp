#include "protoexplain/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "protoexplain/errors.hpp"

namespace protoexplain::svg {
namespace {

std::string num(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << (std::abs(v) < 0.005 ? 0.0 : v);
  return os.str();
}

std::string label_value(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

std::string escape(const std::string& s) {
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

void open_svg(std::ostringstream& os, double w, double h, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
     << "\" viewBox=\"0 0 " << num(w) << " " << num(h) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(w / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
     << "</text>\n";
}

// Draws bars into a panel starting at (x0, y0) of width `w`.
void draw_bars(std::ostringstream& os, double x0, double y0, double w, std::span<const std::string> labels,
               std::span<const double> values) {
  constexpr double kLabelW = 80.0;
  constexpr double kRowH = 28.0;
  double extent = 0.0;
  bool negative = false;
  for (double v : values) {
    extent = std::max(extent, std::abs(v));
    negative = negative || v < 0.0;
  }
  if (extent == 0.0) extent = 1.0;
  const double plot_w = w - kLabelW - 60.0;
  const double zero_x = x0 + kLabelW + (negative ? plot_w / 2 : 0.0);
  const double scale = (negative ? plot_w / 2 : plot_w) / extent;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double y = y0 + static_cast<double>(i) * kRowH;
    const double v = values[i];
    const double bar = std::abs(v) * scale;
    const double bx = v >= 0 ? zero_x : zero_x - bar;
    os << "<text x=\"" << num(x0 + kLabelW - 6) << "\" y=\"" << num(y + 15) << "\" text-anchor=\"end\">"
       << escape(labels[i]) << "</text>\n";
    os << "<rect class=\"bar\" x=\"" << num(bx) << "\" y=\"" << num(y + 4) << "\" width=\"" << num(bar)
       << "\" height=\"" << num(kRowH - 8) << "\" fill=\"" << (v >= 0 ? "#3b75af" : "#c44e52") << "\"/>\n";
    os << "<text x=\"" << num(v >= 0 ? bx + bar + 4 : zero_x + 4) << "\" y=\"" << num(y + 15) << "\">"
       << label_value(v) << "</text>\n";
  }
  const double axis_bottom = y0 + static_cast<double>(values.size()) * kRowH;
  os << "<line x1=\"" << num(zero_x) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(zero_x) << "\" y2=\""
     << num(axis_bottom) << "\" stroke=\"black\"/>\n";
}

}  // namespace

std::string bar_chart(const std::string& title, std::span<const std::string> labels, std::span<const double> values) {
  if (labels.size() != values.size()) throw ArgumentError("bar chart labels and values differ in length");
  const double w = 420.0;
  const double h = 40.0 + 28.0 * static_cast<double>(values.size()) + 16.0;
  std::ostringstream os;
  open_svg(os, w, h, title);
  draw_bars(os, 0.0, 36.0, w, labels, values);
  os << "</svg>\n";
  return os.str();
}

std::string bars_with_heatmap(const std::string& title, std::span<const std::string> labels,
                              std::span<const double> values, const Plane& heatmap) {
  if (labels.size() != values.size()) throw ArgumentError("bar chart labels and values differ in length");
  constexpr double kPanel = 200.0;
  const double w = 420.0 + kPanel + 20.0;
  const double h = std::max(40.0 + 28.0 * static_cast<double>(values.size()), 40.0 + kPanel) + 16.0;
  std::ostringstream os;
  open_svg(os, w, h, title);
  draw_bars(os, 0.0, 36.0, 420.0, labels, values);

  // Coarsen to at most 50 x 50 cells.
  const Index rows = heatmap.rows();
  const Index cols = heatmap.cols();
  const Index step = std::max<Index>(1, (std::max(rows, cols) + 49) / 50);
  const double lo = heatmap.minCoeff();
  const double hi = heatmap.maxCoeff();
  const double cell_w = kPanel / static_cast<double>((cols + step - 1) / step);
  const double cell_h = kPanel / static_cast<double>((rows + step - 1) / step);
  os << "<g class=\"heatmap\">\n";
  for (Index r = 0; r < rows; r += step) {
    for (Index c = 0; c < cols; c += step) {
      const double v = heatmap(r, c);
      const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;  // 0 = nearest
      const int red = static_cast<int>(std::lround(255.0 * (1.0 - t)));
      const int blue = static_cast<int>(std::lround(255.0 * t));
      os << "<rect x=\"" << num(430.0 + static_cast<double>(c / step) * cell_w) << "\" y=\""
         << num(36.0 + static_cast<double>(r / step) * cell_h) << "\" width=\"" << num(cell_w) << "\" height=\""
         << num(cell_h) << "\" fill=\"rgb(" << red << ",64," << blue << ")\"/>\n";
    }
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

std::string histogram_overlay(const std::string& title, const Histogram& back, const std::string& back_label,
                              const Histogram& front, const std::string& front_label) {
  if (back.counts.size() != front.counts.size()) throw ArgumentError("overlaid histograms need the same bins");
  constexpr double kW = 520.0, kH = 300.0, kLeft = 50.0, kTop = 40.0, kPlotH = 200.0;
  const double plot_w = kW - kLeft - 20.0;
  std::size_t peak = 1;
  for (auto c : back.counts) peak = std::max(peak, c);
  for (auto c : front.counts) peak = std::max(peak, c);
  const double bin_w = plot_w / static_cast<double>(back.counts.size());
  std::ostringstream os;
  open_svg(os, kW, kH, title);
  auto draw = [&](const Histogram& hist, const char* cls, const char* fill) {
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
      const double bh = kPlotH * static_cast<double>(hist.counts[i]) / static_cast<double>(peak);
      os << "<rect class=\"" << cls << "\" data-count=\"" << hist.counts[i] << "\" x=\""
         << num(kLeft + static_cast<double>(i) * bin_w) << "\" y=\"" << num(kTop + kPlotH - bh) << "\" width=\""
         << num(bin_w) << "\" height=\"" << num(bh) << "\" fill=\"" << fill << "\"/>\n";
    }
  };
  draw(back, "back", "#9ecae1");
  draw(front, "front", "#e6550d");
  os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + kPlotH) << "\" x2=\"" << num(kLeft + plot_w)
     << "\" y2=\"" << num(kTop + kPlotH) << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << num(kLeft) << "\" y=\"" << num(kTop + kPlotH + 16) << "\">"
     << label_value(back.edges.front()) << "</text>\n";
  os << "<text x=\"" << num(kLeft + plot_w) << "\" y=\"" << num(kTop + kPlotH + 16) << "\" text-anchor=\"end\">"
     << label_value(back.edges.back()) << "</text>\n";
  os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kH - 40) << "\" width=\"12\" height=\"12\" fill=\"#9ecae1\"/>"
     << "<text x=\"" << num(kLeft + 16) << "\" y=\"" << num(kH - 30) << "\">" << escape(back_label) << "</text>\n";
  os << "<rect x=\"" << num(kLeft + 200) << "\" y=\"" << num(kH - 40)
     << "\" width=\"12\" height=\"12\" fill=\"#e6550d\"/>"
     << "<text x=\"" << num(kLeft + 216) << "\" y=\"" << num(kH - 30) << "\">" << escape(front_label) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string box_plot(const std::string& title, std::span<const std::string> labels, std::span<const Summary> summaries) {
  if (labels.size() != summaries.size()) throw ArgumentError("box plot labels and summaries differ in length");
  constexpr double kLeft = 60.0, kTop = 40.0, kPlotH = 240.0, kBoxW = 60.0, kGap = 30.0;
  const double w = kLeft + static_cast<double>(summaries.size()) * (kBoxW + kGap) + 20.0;
  const double h = kTop + kPlotH + 40.0;
  double lo = 0.0, hi = 0.0;
  for (const auto& s : summaries) {
    lo = std::min(lo, s.min);
    hi = std::max(hi, s.max);
  }
  if (hi == lo) hi = lo + 1.0;
  auto y_of = [&](double v) { return kTop + kPlotH * (hi - v) / (hi - lo); };
  std::ostringstream os;
  open_svg(os, w, h, title);
  os << "<line x1=\"" << num(kLeft - 10) << "\" y1=\"" << num(y_of(0.0)) << "\" x2=\"" << num(w - 10) << "\" y2=\""
     << num(y_of(0.0)) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const Summary& s = summaries[i];
    const double x = kLeft + static_cast<double>(i) * (kBoxW + kGap);
    const double cx = x + kBoxW / 2;
    os << "<g class=\"box\" data-min=\"" << label_value(s.min) << "\" data-q1=\"" << label_value(s.q1)
       << "\" data-median=\"" << label_value(s.median) << "\" data-q3=\"" << label_value(s.q3) << "\" data-max=\""
       << label_value(s.max) << "\">\n";
    os << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y_of(s.whisker_high)) << "\" x2=\"" << num(cx) << "\" y2=\""
       << num(y_of(s.whisker_low)) << "\" stroke=\"black\"/>\n";
    os << "<rect x=\"" << num(x) << "\" y=\"" << num(y_of(s.q3)) << "\" width=\"" << num(kBoxW) << "\" height=\""
       << num(y_of(s.q1) - y_of(s.q3)) << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << num(x) << "\" y1=\"" << num(y_of(s.median)) << "\" x2=\"" << num(x + kBoxW) << "\" y2=\""
       << num(y_of(s.median)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << num(cx) << "\" y=\"" << num(kTop + kPlotH + 20) << "\" text-anchor=\"middle\">"
       << escape(labels[i]) << "</text>\n</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace protoexplain::svg
