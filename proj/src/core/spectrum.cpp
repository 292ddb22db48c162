#include "pl/spectrum.hpp"

#include "pl/error.hpp"
#include "pl/units.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pl
{

EnergyGrid::EnergyGrid(double start, double step, std::size_t size)
    : start_(start), step_(step), size_(size)
{
    require(std::isfinite(start) && std::isfinite(step), "grid_not_finite", "energy grid start/step must be finite");
    require(step > 0.0, "grid_step_not_positive", "energy grid spacing must be strictly positive");
    require(size >= 2, "grid_too_small", "energy grid needs at least two points");
}

EnergyGrid EnergyGrid::centered(double center, double half_span, double step)
{
    require(half_span > 0.0 && step > 0.0, "grid_invalid", "centered grid needs positive half-span and step");
    const auto half = static_cast<std::size_t>(std::ceil(half_span / step - 1e-9));
    return EnergyGrid(center - static_cast<double>(half) * step, step, 2 * half + 1);
}

EnergyGrid EnergyGrid::from_points(std::span<const double> points)
{
    require(points.size() >= 2, "grid_too_small", "energy grid needs at least two points");
    const double step = (points.back() - points.front()) / static_cast<double>(points.size() - 1);
    require(step > 0.0, "grid_not_ascending", "energies must be strictly ascending");
    for (std::size_t i = 0; i < points.size(); ++i)
    {
        const double expected = points.front() + step * static_cast<double>(i);
        const double scale = std::max({std::abs(points.front()), std::abs(points.back()), step});
        if (std::abs(points[i] - expected) > 1e-9 * scale)
            throw ValidationError("grid_not_uniform",
                                  "energy grid is not uniform at index " + std::to_string(i));
    }
    return EnergyGrid(points.front(), step, points.size());
}

std::vector<double> EnergyGrid::points() const
{
    std::vector<double> out(size_);
    for (std::size_t i = 0; i < size_; ++i)
        out[i] = at(i);
    return out;
}

bool EnergyGrid::contains(double energy) const noexcept
{
    const double tol = 1e-9 * step_;
    return energy >= front() - tol && energy <= back() + tol;
}

bool EnergyGrid::same_as(const EnergyGrid &other) const noexcept
{
    return size_ == other.size_ && std::abs(step_ - other.step_) <= 1e-9 * step_ &&
           std::abs(start_ - other.start_) <= 1e-6 * step_;
}

std::string_view to_string(Normalization n)
{
    switch (n)
    {
    case Normalization::area_one: return "area-one";
    case Normalization::area_two_pi: return "area-2pi";
    case Normalization::raw_counts: return "raw-counts";
    }
    return "raw-counts";
}

Normalization normalization_from_string(std::string_view s)
{
    if (s == "area-one")
        return Normalization::area_one;
    if (s == "area-2pi" || s == "area-2π")
        return Normalization::area_two_pi;
    if (s == "raw-counts")
        return Normalization::raw_counts;
    throw ValidationError("unknown_normalization", "unknown normalization tag '" + std::string(s) + "'");
}

double trapezoid(std::span<const double> values, double step)
{
    if (values.size() < 2)
        return 0.0;
    double sum = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i)
        sum += values[i];
    return sum * step;
}

namespace
{

double target_area(Normalization n)
{
    switch (n)
    {
    case Normalization::area_one: return 1.0;
    case Normalization::area_two_pi: return units::two_pi;
    case Normalization::raw_counts: return 0.0;
    }
    return 0.0;
}

} // namespace

Spectrum::Spectrum(EnergyGrid grid, std::vector<double> values, Normalization normalization)
    : grid_(grid), values_(std::move(values)), normalization_(normalization)
{
    require(values_.size() == grid_.size(), "size_mismatch",
            "spectrum has " + std::to_string(values_.size()) + " values for " + std::to_string(grid_.size()) +
                " grid points");
    for (std::size_t i = 0; i < values_.size(); ++i)
    {
        if (!std::isfinite(values_[i]) || values_[i] < 0.0)
            throw ValidationError("negative_density", "spectral density must be finite and >= 0 (index " +
                                                          std::to_string(i) + ")");
    }
    if (normalization_ != Normalization::raw_counts)
    {
        const double want = target_area(normalization_);
        const double got = integral();
        require(std::abs(got - want) <= 1e-6 * want, "normalization_mismatch",
                "spectrum tagged " + std::string(to_string(normalization_)) + " integrates to " +
                    std::to_string(got));
    }
}

Spectrum Spectrum::normalized(EnergyGrid grid, std::vector<double> values, Normalization target)
{
    if (target != Normalization::raw_counts)
    {
        require(values.size() == grid.size(), "size_mismatch", "spectrum values do not match the grid");
        const double area = trapezoid(values, grid.step());
        require(area > 0.0, "zero_area", "cannot normalize a spectrum with zero area");
        const double scale = target_area(target) / area;
        for (double &v : values)
            v *= scale;
    }
    return Spectrum(grid, std::move(values), target);
}

double Spectrum::integral() const { return trapezoid(values_, grid_.step()); }

double Spectrum::integral(double lo, double hi) const
{
    double sum = 0.0;
    bool have_prev = false;
    double prev = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i)
    {
        const double e = grid_.at(i);
        if (e < lo - 1e-9 * grid_.step() || e > hi + 1e-9 * grid_.step())
        {
            have_prev = false;
            continue;
        }
        if (have_prev)
            sum += 0.5 * (prev + values_[i]) * grid_.step();
        prev = values_[i];
        have_prev = true;
    }
    return sum;
}

std::size_t Spectrum::peak_index() const
{
    return static_cast<std::size_t>(std::distance(values_.begin(), std::max_element(values_.begin(), values_.end())));
}

double Spectrum::peak() const { return values_[peak_index()]; }

double Spectrum::at(double energy) const
{
    const double x = (energy - grid_.start()) / grid_.step();
    if (x < -1e-9 || x > static_cast<double>(values_.size() - 1) + 1e-9)
        return 0.0;
    const double clamped = std::clamp(x, 0.0, static_cast<double>(values_.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(clamped), values_.size() - 2);
    const double t = clamped - static_cast<double>(i);
    return values_[i] * (1.0 - t) + values_[i + 1] * t;
}

double Spectrum::fwhm() const
{
    const std::size_t ip = peak_index();
    const double half = 0.5 * values_[ip];
    require(half > 0.0, "zero_spectrum", "FWHM of an all-zero spectrum is undefined");

    std::size_t left = ip;
    while (left > 0 && values_[left] > half)
        --left;
    std::size_t right = ip;
    while (right + 1 < values_.size() && values_[right] > half)
        ++right;
    require(values_[left] <= half && values_[right] <= half, "fwhm_out_of_grid",
            "half-maximum crossing lies outside the grid");

    const auto crossing = [&](std::size_t below, std::size_t above) {
        const double t = (half - values_[below]) / (values_[above] - values_[below]);
        return grid_.at(below) + t * (grid_.at(above) - grid_.at(below));
    };
    return crossing(right, right - 1) - crossing(left, left + 1);
}

Spectrum Spectrum::rescaled_to(Normalization target) const { return normalized(grid_, values_, target); }

Spectrum Spectrum::with_values(std::vector<double> values) const
{
    return Spectrum(grid_, std::move(values), Normalization::raw_counts);
}

} // namespace pl
