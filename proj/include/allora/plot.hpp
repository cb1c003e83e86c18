/* Copyright 2026 The ALLoRA Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ALLORA_PLOT_HPP_
#define ALLORA_PLOT_HPP_

#include <string>
#include <vector>

namespace allora {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 640;
  int height = 400;
};

/// Minimal SVG line chart: frame, ticks, one polyline per series, legend.
/// Points that are non-finite, or non-positive on a log axis, are skipped.
std::string line_chart_svg(const std::vector<Series>& series, const ChartOptions& options);

}  // namespace allora

#endif  // ALLORA_PLOT_HPP_
