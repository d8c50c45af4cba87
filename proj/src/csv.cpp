#include "dqf/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "dqf/error.hpp"

namespace dqf::csv {

std::vector<Row> read(std::istream& in) {
    std::vector<Row> rows;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    char ch;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        if (!row.empty() || field_started || !field.empty()) {
            end_field();
            rows.push_back(std::move(row));
        }
        row.clear();
    };

    while (in.get(ch)) {
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get(ch);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
            case '"':
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                field_started = true;
                end_field();
                field_started = true;
                break;
            case '\r':
                break;
            case '\n':
                end_row();
                break;
            default:
                field.push_back(ch);
                field_started = true;
        }
    }
    if (in_quotes) {
        throw ParseError("unterminated quoted field at end of input");
    }
    end_row();
    return rows;
}

std::vector<Row> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open file: " + path);
    }
    return read(in);
}

double parse_real(std::string_view cell, std::size_t row, std::size_t col) {
    auto fail = [&](const char* why) {
        std::ostringstream msg;
        msg << "row " << row << ", column " << col << ": " << why << " '" << cell << "'";
        throw ParseError(msg.str());
    };
    std::size_t b = 0;
    std::size_t e = cell.size();
    while (b < e && (cell[b] == ' ' || cell[b] == '\t')) ++b;
    while (e > b && (cell[e - 1] == ' ' || cell[e - 1] == '\t')) --e;
    if (b == e) fail("empty cell");
    if (cell[b] == '+') ++b;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data() + b, cell.data() + e, value);
    if (ec != std::errc() || ptr != cell.data() + e) fail("not a number");
    if (!std::isfinite(value)) fail("non-finite value");
    return value;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_real(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

}  // namespace dqf::csv
