#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "unpci/data_model.hpp"
#include "unpci/error.hpp"

namespace unpci {

namespace detail {

inline std::vector<std::string> split_line(std::string_view line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string trim(std::string s) {
    const auto issp = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!s.empty() && issp(s.back())) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && issp(s[i])) ++i;
    return s.substr(i);
}

/// Locale-independent double parse.
inline double parse_double(const std::string& tok, std::size_t line_no, std::size_t col_no) {
    const std::string t = trim(tok);
    double value = 0.0;
    const auto* begin = t.data();
    const auto* end = t.data() + t.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end)
        throw IoError("cannot parse numeric value '" + tok + "' at line " +
                      std::to_string(line_no) + ", column " + std::to_string(col_no));
    return value;
}

}

/// Read an observations-by-features table. The first row is a header of
/// feature ids; each following row is one observation. Decimal points only,
/// independent of locale. No quoting support.
inline DataMatrix read_data_csv(std::istream& in, char delim = ',') {
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty input: missing header row");
    std::vector<std::string> ids;
    for (auto& tok : detail::split_line(line, delim)) ids.push_back(detail::trim(tok));

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto toks = detail::split_line(line, delim);
        if (toks.size() != ids.size())
            throw IoError("line " + std::to_string(line_no) + " has " +
                          std::to_string(toks.size()) + " fields, expected " +
                          std::to_string(ids.size()));
        std::vector<double> row(toks.size());
        for (std::size_t j = 0; j < toks.size(); ++j)
            row[j] = detail::parse_double(toks[j], line_no, j + 1);
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw IoError("need at least 2 observation rows");
    Matrix m(rows.size(), ids.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < ids.size(); ++j) m(i, j) = rows[i][j];
    return DataMatrix(std::move(m), std::move(ids));
}

inline DataMatrix read_data_csv_file(const std::string& path, char delim = ',') {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_data_csv(in, delim);
}

/// Read cluster labels: one integer (1 or 2) per line. A single leading
/// non-numeric line is tolerated as a header.
inline std::vector<int> read_labels_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        int v = 0;
        const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
            if (line_no == 1 && labels.empty()) continue;  // header
            throw IoError("cannot parse label '" + t + "' at line " + std::to_string(line_no));
        }
        if (v != 1 && v != 2)
            throw IoError("labels must be 1 or 2, got '" + t + "' at line " +
                          std::to_string(line_no));
        labels.push_back(v);
    }
    if (labels.empty()) throw IoError("no labels found in '" + path + "'");
    return labels;
}

}
