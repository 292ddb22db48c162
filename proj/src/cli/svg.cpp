#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace pl::cli
{

namespace
{

constexpr double width = 720, height = 440;
constexpr double left = 80, right = 20, top = 40, bottom = 60;
const char *const colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string tick(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

std::string escape(const std::string &s)
{
    std::string out;
    for (char c : s)
    {
        switch (c)
        {
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '&':
            out += "&amp;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

} // namespace

std::string svg_plot(const PlotSpec &spec, const std::vector<Series> &series)
{
    const auto ty = [&](double y) { return spec.log_y ? (y > 0 ? std::log10(y) : std::nan("")) : y; };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto &s : series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
        {
            const double y = ty(s.y[i]);
            if (!std::isfinite(s.x[i]) || !std::isfinite(y))
                continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!std::isfinite(x0))
        x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0)
        x1 = x0 + 1;
    if (y1 == y0)
        y1 = y0 + 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    const double pw = width - left - right, ph = height - top - bottom;
    const auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    const auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
           "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + num(width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
           escape(spec.title) + "</text>\n";
    out += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
           "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k)
    {
        const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
        out += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(top + ph + 18) + "\" text-anchor=\"middle\">" +
               tick(xv) + "</text>\n";
        out += "<text x=\"" + num(left - 6) + "\" y=\"" + num(py(yv) + 4) + "\" text-anchor=\"end\">" +
               tick(spec.log_y ? std::pow(10.0, yv) : yv) + "</text>\n";
    }
    out += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(height - 16) + "\" text-anchor=\"middle\">" +
           escape(spec.x_label) + "</text>\n";
    out += "<text transform=\"translate(18," + num(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
           escape(spec.y_label) + "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k)
    {
        const auto &s = series[k];
        const char *color = colors[k % std::size(colors)];
        if (s.markers)
        {
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
                if (std::isfinite(ty(s.y[i])))
                    out += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(ty(s.y[i]))) +
                           "\" r=\"3.5\" fill=\"" + color + "\"/>\n";
        }
        else
        {
            out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
                if (std::isfinite(ty(s.y[i])))
                    out += num(px(s.x[i])) + "," + num(py(ty(s.y[i]))) + " ";
            out += "\"/>\n";
        }
        out += "<text x=\"" + num(left + pw - 8) + "\" y=\"" + num(top + 16 + 16 * static_cast<double>(k)) +
               "\" text-anchor=\"end\" fill=\"" + color + "\">" + escape(s.label) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace pl::cli
