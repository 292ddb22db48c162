#ifndef PL_CLI_SVG_HPP
#define PL_CLI_SVG_HPP

#include <string>
#include <vector>

namespace pl::cli
{

struct Series
{
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool markers = false; ///< draw points instead of a line
};

struct PlotSpec
{
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
};

/// Standalone SVG line plot with linear axes (log10 y optional).
std::string svg_plot(const PlotSpec &spec, const std::vector<Series> &series);

} // namespace pl::cli

#endif
