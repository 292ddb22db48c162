#ifndef PL_IO_HPP
#define PL_IO_HPP

#include "pl/budget.hpp"
#include "pl/dynamics.hpp"
#include "pl/spectrum.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace pl::io
{

/// Shortest representation that parses back to the same double.
std::string format_double(double x);
/// Whole-string parse; throws ValidationError("parse_error") otherwise.
double parse_double(std::string_view s);

// A header row plus rows of numeric cells. Lines starting with '#' and blank
// lines are skipped.
struct NumericTable
{
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const;
};

/// Throws IoError("file_not_found" / "empty_input") and ValidationError("parse_error").
NumericTable read_numeric_csv(const std::filesystem::path &path, const std::vector<std::string> &expected_header);
void write_numeric_csv(const std::filesystem::path &path, const std::vector<std::string> &header,
                       const std::vector<std::vector<double>> &columns);

/// energy_ueV,value
Spectrum read_spectrum_csv(const std::filesystem::path &path, Normalization tag = Normalization::raw_counts);
void write_spectrum_csv(const std::filesystem::path &path, const Spectrum &s);

/// time_ps,counts (bin centres, uniform spacing)
DecayTrace read_trace_csv(const std::filesystem::path &path, const Irf &irf = GaussianIrf{});
void write_trace_csv(const std::filesystem::path &path, const DecayTrace &trace);

/// tau_ps,g2
G2Trace read_g2_csv(const std::filesystem::path &path);
void write_g2_csv(const std::filesystem::path &path, const G2Trace &trace);

/// Mode-order table: mode volume, computed and measured Q, exit probabilities.
struct ModeOrderRow
{
    int p = 0;
    double v_eff_lambda3 = 0.0;
    double q_theory = 0.0;
    double q_measured = 0.0;
    double exit_substrate_pct = 0.0;
    double exit_fiber_pct = 0.0;
};

std::vector<ModeOrderRow> read_table_s1(const std::filesystem::path &path);
void write_table_s1(const std::filesystem::path &path, const std::vector<ModeOrderRow> &rows);

/// Stage-by-stage efficiencies for the three paths, in path order
/// free-space, cavity-planar, cavity-fiber. Provenance is `fixture`.
std::array<EfficiencyChain, 3> read_table_s2(const std::filesystem::path &path);

struct EfficiencySummary
{
    std::array<double, 3> extraction{};
    std::array<double, 3> transmission_and_detector{};
    std::array<double, 3> overall{};
};

/// Summary table, fractions (the file stores percent).
EfficiencySummary read_table_s3(const std::filesystem::path &path);

/// PL_FIXTURE_DIR if set, else the directory compiled into the library.
std::filesystem::path fixture_dir();

std::string read_text(const std::filesystem::path &path);
void write_text(const std::filesystem::path &path, const std::string &text);

} // namespace pl::io

#endif
