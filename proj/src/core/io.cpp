#include "pl/io.hpp"

#include "pl/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#ifndef PL_DEFAULT_FIXTURE_DIR
#define PL_DEFAULT_FIXTURE_DIR "fixtures"
#endif

namespace pl::io
{

namespace fs = std::filesystem;

namespace
{

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string> split(std::string_view line)
{
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true)
    {
        const auto comma = line.find(',', pos);
        cells.emplace_back(trim(line.substr(pos, comma - pos)));
        if (comma == std::string_view::npos)
            break;
        pos = comma + 1;
    }
    return cells;
}

// Non-comment, non-blank lines of a file with their line numbers.
std::vector<std::pair<int, std::string>> content_lines(const fs::path &path)
{
    const std::string text = read_text(path);
    std::vector<std::pair<int, std::string>> lines;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line))
    {
        ++number;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        lines.emplace_back(number, std::string(t));
    }
    if (lines.empty())
        throw IoError("empty_input", "input file '" + path.string() + "' is empty");
    return lines;
}

std::string where(const fs::path &path, int line) { return path.string() + ":" + std::to_string(line); }

} // namespace

std::string format_double(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s)
{
    s = trim(s);
    double x = 0.0;
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ValidationError("parse_error", "not a number: '" + std::string(s) + "'");
    return x;
}

std::size_t NumericTable::column(std::string_view name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return i;
    throw ValidationError("missing_column", "missing column '" + std::string(name) + "'");
}

std::string read_text(const fs::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("file_not_found", "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path &path, const std::string &text)
{
    if (path.has_parent_path())
    {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("write_failed", "cannot write '" + path.string() + "'");
    out << text;
    if (!out)
        throw IoError("write_failed", "cannot write '" + path.string() + "'");
}

NumericTable read_numeric_csv(const fs::path &path, const std::vector<std::string> &expected_header)
{
    const auto lines = content_lines(path);
    NumericTable table;
    table.header = split(lines.front().second);
    if (!expected_header.empty() && table.header != expected_header)
    {
        std::string want;
        for (const auto &h : expected_header)
            want += (want.empty() ? "" : ",") + h;
        throw ValidationError("bad_header", where(path, lines.front().first) + ": expected header '" + want + "'");
    }
    for (std::size_t i = 1; i < lines.size(); ++i)
    {
        const auto cells = split(lines[i].second);
        if (cells.size() != table.header.size())
            throw ValidationError("parse_error", where(path, lines[i].first) + ": expected " +
                                                     std::to_string(table.header.size()) + " cells");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto &c : cells)
        {
            try
            {
                row.push_back(parse_double(c));
            }
            catch (const ValidationError &e)
            {
                throw ValidationError("parse_error", where(path, lines[i].first) + ": " + e.what());
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty())
        throw IoError("empty_input", "input file '" + path.string() + "' has a header but no data");
    return table;
}

void write_numeric_csv(const fs::path &path, const std::vector<std::string> &header,
                       const std::vector<std::vector<double>> &columns)
{
    require(header.size() == columns.size() && !columns.empty(), "csv_shape", "header and columns disagree");
    std::string text;
    for (std::size_t j = 0; j < header.size(); ++j)
        text += (j ? "," : "") + header[j];
    text += '\n';
    for (std::size_t i = 0; i < columns.front().size(); ++i)
    {
        for (std::size_t j = 0; j < columns.size(); ++j)
        {
            if (j)
                text += ',';
            text += format_double(columns[j].at(i));
        }
        text += '\n';
    }
    write_text(path, text);
}

Spectrum read_spectrum_csv(const fs::path &path, Normalization tag)
{
    const auto t = read_numeric_csv(path, {"energy_ueV", "value"});
    std::vector<double> e, v;
    for (const auto &r : t.rows)
    {
        e.push_back(r[0]);
        v.push_back(r[1]);
    }
    return Spectrum(EnergyGrid::from_points(e), std::move(v), tag);
}

void write_spectrum_csv(const fs::path &path, const Spectrum &s)
{
    write_numeric_csv(path, {"energy_ueV", "value"},
                      {s.grid().points(), std::vector<double>(s.values().begin(), s.values().end())});
}

DecayTrace read_trace_csv(const fs::path &path, const Irf &irf)
{
    const auto t = read_numeric_csv(path, {"time_ps", "counts"});
    std::vector<double> times, counts;
    for (const auto &r : t.rows)
    {
        times.push_back(r[0]);
        counts.push_back(r[1]);
    }
    const EnergyGrid axis = EnergyGrid::from_points(times);
    DecayTrace trace{TimeGrid{axis.start(), axis.step(), axis.size()}, std::move(counts), irf};
    trace.validate();
    return trace;
}

void write_trace_csv(const fs::path &path, const DecayTrace &trace)
{
    std::vector<double> times(trace.grid.size);
    for (std::size_t i = 0; i < times.size(); ++i)
        times[i] = trace.grid.at(i);
    write_numeric_csv(path, {"time_ps", "counts"}, {times, trace.counts});
}

G2Trace read_g2_csv(const fs::path &path)
{
    const auto t = read_numeric_csv(path, {"tau_ps", "g2"});
    G2Trace out;
    for (const auto &r : t.rows)
    {
        out.tau_ps.push_back(r[0]);
        out.g2.push_back(r[1]);
    }
    return out;
}

void write_g2_csv(const fs::path &path, const G2Trace &trace)
{
    write_numeric_csv(path, {"tau_ps", "g2"}, {trace.tau_ps, trace.g2});
}

namespace
{
const std::vector<std::string> s1_header{"p",           "v_eff_lambda3",      "q_cav_th",
                                         "q_cav_exp",   "p_subs_exp_percent", "p_fiber_exp_percent"};
}

std::vector<ModeOrderRow> read_table_s1(const fs::path &path)
{
    const auto t = read_numeric_csv(path, s1_header);
    std::vector<ModeOrderRow> rows;
    for (const auto &r : t.rows)
    {
        require(r[0] == std::floor(r[0]) && r[0] >= 1.0, "parse_error", "mode order must be a positive integer");
        rows.push_back({static_cast<int>(r[0]), r[1], r[2], r[3], r[4], r[5]});
    }
    return rows;
}

void write_table_s1(const fs::path &path, const std::vector<ModeOrderRow> &rows)
{
    std::vector<std::vector<double>> cols(6);
    for (const auto &r : rows)
    {
        cols[0].push_back(r.p);
        cols[1].push_back(r.v_eff_lambda3);
        cols[2].push_back(r.q_theory);
        cols[3].push_back(r.q_measured);
        cols[4].push_back(r.exit_substrate_pct);
        cols[5].push_back(r.exit_fiber_pct);
    }
    write_numeric_csv(path, s1_header, cols);
}

std::array<EfficiencyChain, 3> read_table_s2(const fs::path &path)
{
    // stage,kind,free_space_percent,cavity_planar_percent,cavity_fiber_percent
    // with empty cells for stages absent from a path.
    const auto lines = content_lines(path);
    const std::vector<std::string> header{"stage", "kind", "free_space_percent", "cavity_planar_percent",
                                          "cavity_fiber_percent"};
    if (split(lines.front().second) != header)
        throw ValidationError("bad_header", where(path, lines.front().first) +
                                                ": expected header 'stage,kind,free_space_percent,"
                                                "cavity_planar_percent,cavity_fiber_percent'");
    std::array<EfficiencyChain, 3> chains{EfficiencyChain{OpticalPath::free_space, {}},
                                          EfficiencyChain{OpticalPath::cavity_planar, {}},
                                          EfficiencyChain{OpticalPath::cavity_fiber, {}}};
    for (std::size_t i = 1; i < lines.size(); ++i)
    {
        const auto cells = split(lines[i].second);
        if (cells.size() != header.size())
            throw ValidationError("parse_error", where(path, lines[i].first) + ": expected 5 cells");
        try
        {
            const StageKind kind = stage_kind_from_string(cells[1]);
            for (std::size_t k = 0; k < 3; ++k)
            {
                if (cells[2 + k].empty() || cells[2 + k] == "-")
                    continue;
                chains[k].stages.push_back({cells[0], parse_double(cells[2 + k]) / 100.0, kind, Provenance::fixture});
            }
        }
        catch (const ValidationError &e)
        {
            throw ValidationError("parse_error", where(path, lines[i].first) + ": " + e.what());
        }
    }
    for (const auto &c : chains)
        c.validate();
    return chains;
}

EfficiencySummary read_table_s3(const fs::path &path)
{
    const auto lines = content_lines(path);
    const std::vector<std::string> header{"quantity", "free_space_percent", "cavity_planar_percent",
                                          "cavity_fiber_percent"};
    if (split(lines.front().second) != header)
        throw ValidationError("bad_header", where(path, lines.front().first) +
                                                ": expected header 'quantity,free_space_percent,"
                                                "cavity_planar_percent,cavity_fiber_percent'");
    EfficiencySummary s;
    int seen = 0;
    for (std::size_t i = 1; i < lines.size(); ++i)
    {
        const auto cells = split(lines[i].second);
        if (cells.size() != header.size())
            throw ValidationError("parse_error", where(path, lines[i].first) + ": expected 4 cells");
        std::array<double, 3> *target = nullptr;
        if (cells[0] == "extraction")
            target = &s.extraction;
        else if (cells[0] == "transmission_and_detector")
            target = &s.transmission_and_detector;
        else if (cells[0] == "overall")
            target = &s.overall;
        else
            throw ValidationError("parse_error", where(path, lines[i].first) + ": unknown quantity '" + cells[0] + "'");
        for (std::size_t k = 0; k < 3; ++k)
            (*target)[k] = parse_double(cells[1 + k]) / 100.0;
        ++seen;
    }
    require(seen == 3, "parse_error", path.string() + ": expected three summary rows");
    return s;
}

fs::path fixture_dir()
{
    if (const char *env = std::getenv("PL_FIXTURE_DIR"); env && *env)
        return fs::path(env);
    return fs::path(PL_DEFAULT_FIXTURE_DIR);
}

} // namespace pl::io
