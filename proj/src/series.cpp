#include "peakon/series.hpp"

#include "peakon/grid.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace peakon {

void TimeSeries::append(std::vector<double> row)
{
    if (row.size() != columns.size()) throw DomainError("TimeSeries: row width does not match the header");
    rows.push_back(std::move(row));
}

std::size_t TimeSeries::index(const std::string& name) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw DomainError("TimeSeries: no column named " + name);
}

std::vector<double> TimeSeries::column(const std::string& name) const
{
    const std::size_t k = index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[k]);
    return out;
}

std::string format_real(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(std::ostream& out, const TimeSeries& series)
{
    for (std::size_t i = 0; i < series.columns.size(); ++i) out << (i ? "," : "") << series.columns[i];
    out << '\n';
    for (const auto& r : series.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_real(r[i]);
        out << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const TimeSeries& series)
{
    std::ofstream out(path);
    if (!out) throw DomainError("cannot open " + path.string() + " for writing");
    write_csv(out, series);
}

TimeSeries read_csv(std::istream& in)
{
    TimeSeries s;
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw DomainError("CSV: missing header");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) s.columns.push_back(cell);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cell.size()) throw DomainError("CSV: bad number '" + cell + "'");
            row.push_back(v);
        }
        s.append(std::move(row));
    }
    return s;
}

TimeSeries read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open " + path.string());
    return read_csv(in);
}

}  // namespace peakon
