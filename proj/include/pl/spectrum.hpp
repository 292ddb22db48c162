#ifndef PL_SPECTRUM_HPP
#define PL_SPECTRUM_HPP

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace pl
{

// Uniformly spaced energy axis, in ueV. The axis is either absolute photon
// energy or detuning from the zero-phonon line; the grid itself does not care.
class EnergyGrid
{
public:
    EnergyGrid(double start, double step, std::size_t size);

    /// Odd-sized grid with a point exactly at `center`, covering at least
    /// [center - half_span, center + half_span].
    static EnergyGrid centered(double center, double half_span, double step);

    /// Builds a grid from explicit points; spacing must be uniform to 1e-9.
    static EnergyGrid from_points(std::span<const double> points);

    double start() const noexcept { return start_; }
    double step() const noexcept { return step_; }
    std::size_t size() const noexcept { return size_; }
    double at(std::size_t i) const noexcept { return start_ + step_ * static_cast<double>(i); }
    double front() const noexcept { return start_; }
    double back() const noexcept { return at(size_ - 1); }
    double span() const noexcept { return back() - front(); }
    std::vector<double> points() const;

    bool contains(double energy) const noexcept;
    bool same_as(const EnergyGrid &other) const noexcept;

private:
    double start_;
    double step_;
    std::size_t size_;
};

enum class Normalization
{
    area_one,
    area_two_pi,
    raw_counts
};

std::string_view to_string(Normalization n);
Normalization normalization_from_string(std::string_view s);

// Nonnegative spectral density sampled on an EnergyGrid. The normalization
// tag is a checked claim: area_one and area_two_pi spectra integrate
// (trapezoid rule) to 1 and 2*pi within 1e-6 relative.
class Spectrum
{
public:
    Spectrum(EnergyGrid grid, std::vector<double> values, Normalization normalization);

    /// Rescales `values` so the trapezoid integral matches `target` and tags it.
    static Spectrum normalized(EnergyGrid grid, std::vector<double> values, Normalization target);

    const EnergyGrid &grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    Normalization normalization() const noexcept { return normalization_; }
    std::size_t size() const noexcept { return values_.size(); }
    double energy(std::size_t i) const noexcept { return grid_.at(i); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    double integral() const;
    /// Trapezoid integral over the grid points with energy in [lo, hi].
    double integral(double lo, double hi) const;
    double peak() const;
    std::size_t peak_index() const;
    /// Linear interpolation; zero outside the grid.
    double at(double energy) const;
    /// Full width at half maximum around the global peak, with linear
    /// interpolation of the half-maximum crossings.
    double fwhm() const;

    Spectrum rescaled_to(Normalization target) const;
    /// Same grid, new values, tagged raw-counts.
    Spectrum with_values(std::vector<double> values) const;

private:
    EnergyGrid grid_;
    std::vector<double> values_;
    Normalization normalization_;
};

double trapezoid(std::span<const double> values, double step);

} // namespace pl

#endif
