#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lpp {

/// Distribution or model parameter outside its domain (non-positive scale, NaN, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Vector or matrix lengths that do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Violations of the forecasting protocol, e.g. a non-increasing time index.
class ProtocolError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The data-generating process has no closed-form conditional the oracle can integrate against.
class UnsupportedDgpError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input file. Row numbers are 1-based and count the header as row 1.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string source, std::size_t row, std::string column, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(row) +
                             (column.empty() ? std::string{} : " [" + column + "]") + ": " + what),
          source_(std::move(source)),
          row_(row),
          column_(std::move(column)) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::string source_;
    std::size_t row_;
    std::string column_;
};

}  // namespace lpp
