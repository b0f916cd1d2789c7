// svg.hpp - plain-text SVG charts. Output depends only on the inputs, so
// charts can be diffed in tests.
#pragma once

#include <span>
#include <string>

#include "protoexplain/analysis.hpp"
#include "protoexplain/types.hpp"

namespace protoexplain::svg {

/// Horizontal bars around a zero axis; negative values extend left.
std::string bar_chart(const std::string& title, std::span<const std::string> labels,
                      std::span<const double> values);

/// Bar chart beside a heatmap (low values drawn hot, matching distance maps).
std::string bars_with_heatmap(const std::string& title, std::span<const std::string> labels,
                              std::span<const double> values, const Plane& heatmap);

/// Two histograms over the same edges, drawn on top of each other.
std::string histogram_overlay(const std::string& title, const Histogram& back, const std::string& back_label,
                              const Histogram& front, const std::string& front_label);

/// Box plot, one box per summary.
std::string box_plot(const std::string& title, std::span<const std::string> labels,
                     std::span<const Summary> summaries);

}  // namespace protoexplain::svg
