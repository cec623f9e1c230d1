#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace tcglab::csv
{
/// Formats with 17 significant digits ("%.17g"); non-finite values become nan / inf / -inf.
std::string format_double(double value);

/// Splits one CSV line on commas and trims surrounding whitespace of each field.
std::vector< std::string > split_line(std::string_view line);

/// Parses a full-precision floating-point field; throws std::invalid_argument on junk.
double parse_double(std::string_view field);

class Writer
{
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    Writer& header(std::initializer_list< std::string_view > names);
    Writer& field(double value);
    Writer& field(long long value);
    Writer& field(int value) { return field(static_cast< long long >(value)); }
    Writer& field(bool value) { return field(static_cast< long long >(value ? 1 : 0)); }
    Writer& field(std::string_view text);
    Writer& field(const char* text) { return field(std::string_view{text}); }
    void    end_row();

private:
    void separator();

    std::ostream& out_;
    bool          row_started_ = false;
};
} // namespace tcglab::csv
