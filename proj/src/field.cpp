#include "plume_scout/field.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "plume_scout/errors.hpp"

namespace plume_scout {

Field::Field(GridSpec g, Eigen::VectorXd v) : grid(g), values(std::move(v)) {
    if (size() != grid.size()) {
        throw InvalidArgument("field has " + std::to_string(size()) + " values but grid has " +
                              std::to_string(grid.size()) + " cells");
    }
    if (!values.allFinite()) {
        throw InvalidArgument("field contains non-finite values");
    }
}

double Field::stddev() const {
    const double m = mean();
    return std::sqrt((values.array() - m).square().mean());
}

Field uniform_field(const GridSpec& grid, double value) {
    return Field(grid, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.size()), value));
}

double mae(const Field& a, const Field& b) {
    if (!(a.grid == b.grid)) {
        throw InvalidArgument("mae: fields are defined on different grids");
    }
    return (a.values - b.values).cwiseAbs().mean();
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

Field load_field_csv(std::string_view text, const GridSpec& grid) {
    std::vector<double> values;
    values.reserve(grid.size());
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;

        std::size_t tok_start = 0;
        while (tok_start <= line.size()) {
            auto comma = line.find(',', tok_start);
            if (comma == std::string_view::npos) comma = line.size();
            const std::string_view token = trim(line.substr(tok_start, comma - tok_start));
            tok_start = comma + 1;
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
            if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v)) {
                throw FormatError("line " + std::to_string(line_no) + ": non-numeric token '" +
                                  std::string(token) + "'");
            }
            values.push_back(v);
        }
    }
    if (values.size() != grid.size()) {
        throw FormatError("field CSV: expected " + std::to_string(grid.size()) + " cells, found " +
                          std::to_string(values.size()));
    }
    return Field(grid, Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
}

Field load_field_csv_file(const std::string& path, const GridSpec& grid) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open field CSV '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_field_csv(ss.str(), grid);
}

std::string write_field_csv(const Field& field) {
    std::string out = "# rows=" + std::to_string(field.grid.rows) + " cols=" + std::to_string(field.grid.cols) + "\n";
    char buf[64];
    for (std::size_t r = 0; r < field.grid.rows; ++r) {
        for (std::size_t c = 0; c < field.grid.cols; ++c) {
            const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), field.values[static_cast<Eigen::Index>(field.grid.index(r, c))]);
            if (c > 0) out += ',';
            out.append(buf, ptr);
        }
        out += '\n';
    }
    return out;
}

}  // namespace plume_scout
