#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace peakon {

/// Named numeric columns sampled at a common sequence of rows. The first column is
/// conventionally the time "t".
struct TimeSeries {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    /// Free-text warnings raised while the series was produced.
    std::vector<std::string> notes;

    TimeSeries() = default;
    explicit TimeSeries(std::vector<std::string> names) : columns(std::move(names)) {}

    std::size_t size() const { return rows.size(); }
    /// Appends a row; throws DomainError on a column-count mismatch.
    void append(std::vector<double> row);
    /// Index of a named column; throws DomainError when absent.
    std::size_t index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
};

/// Decimal text with 17 significant digits, enough to round-trip every double.
std::string format_real(double x);

/// CSV with a header row and 17-significant-digit fields.
void write_csv(std::ostream& out, const TimeSeries& series);
void write_csv(const std::filesystem::path& path, const TimeSeries& series);
/// Parses what write_csv produces. Throws DomainError on malformed input.
TimeSeries read_csv(std::istream& in);
TimeSeries read_csv(const std::filesystem::path& path);

}  // namespace peakon
