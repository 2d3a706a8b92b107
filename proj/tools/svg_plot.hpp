#pragma once

#include <string>
#include <vector>

namespace nls3::tools {

// Single polyline y(x) with labelled axes. Non-finite points break the line.
std::string svg_line_plot(const std::vector<double>& x, const std::vector<double>& y,
                          const std::string& xlabel, const std::string& ylabel,
                          const std::string& title);

}  // namespace nls3::tools
