#include "tcglab/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace tcglab::csv
{
std::string format_double(double value)
{
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::vector< std::string > split_line(std::string_view line)
{
    std::vector< std::string > out;
    std::size_t                start = 0;
    while (true)
    {
        const auto       comma = line.find(',', start);
        std::string_view piece = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
        const auto       first = piece.find_first_not_of(" \t\r");
        const auto       last  = piece.find_last_not_of(" \t\r");
        out.emplace_back(first == std::string_view::npos ? std::string_view{} : piece.substr(first, last - first + 1));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

double parse_double(std::string_view field)
{
    const std::string text{field};
    char*             end   = nullptr;
    const double      value = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size())
        throw std::invalid_argument("not a number: '" + text + "'");
    return value;
}

Writer& Writer::header(std::initializer_list< std::string_view > names)
{
    for (auto name : names)
        field(name);
    end_row();
    return *this;
}

void Writer::separator()
{
    if (row_started_)
        out_ << ',';
    row_started_ = true;
}

Writer& Writer::field(double value)
{
    separator();
    out_ << format_double(value);
    return *this;
}

Writer& Writer::field(long long value)
{
    separator();
    out_ << value;
    return *this;
}

Writer& Writer::field(std::string_view text)
{
    separator();
    out_ << text;
    return *this;
}

void Writer::end_row()
{
    out_ << '\n';
    row_started_ = false;
}
} // namespace tcglab::csv
