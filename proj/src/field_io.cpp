#include "deadcore/field_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/core.h>

#include "deadcore/errors.hpp"

namespace deadcore {

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

void write_csv(std::ostream& out, const ScalarField& field) {
    const auto& g = field.grid();
    out << (g.dim() == 1 ? "x,value\n" : "x,y,value\n");
    for (std::size_t n = 0; n < g.size(); ++n) {
        const auto i = static_cast<NodeIndex>(n);
        const Point p = g.point(i);
        if (!std::isfinite(field[i])) throw NumericalError("cannot export a non-finite value");
        if (g.dim() == 1) {
            out << format_real(p[0]) << ',' << format_real(field[i]) << '\n';
        } else {
            out << format_real(p[0]) << ',' << format_real(p[1]) << ',' << format_real(field[i]) << '\n';
        }
    }
}

void write_csv(const std::filesystem::path& path, const ScalarField& field) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError(fmt::format("cannot open {} for writing", path.string()));
    write_csv(out, field);
}

ScalarField read_csv(std::istream& in, const GridPtr& grid) {
    std::string line;
    if (!std::getline(in, line)) throw IngestionError("empty CSV");
    const std::string expected = grid->dim() == 1 ? "x,value" : "x,y,value";
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected) throw IngestionError(fmt::format("CSV header '{}' does not match '{}'", line, expected));

    std::vector<double> values(grid->size(), 0.0);
    std::vector<std::uint8_t> seen(grid->size(), 0);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> cols;
        while (std::getline(row, cell, ',')) {
            try {
                cols.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IngestionError(fmt::format("bad number '{}' in CSV row {}", cell, rows + 1));
            }
        }
        if (cols.size() != static_cast<std::size_t>(grid->dim()) + 1) {
            throw IngestionError(fmt::format("CSV row {} has {} columns", rows + 1, cols.size()));
        }
        const Point p{cols[0], grid->dim() == 2 ? cols[1] : 0.0};
        const auto node = grid->find_point(p);
        if (!node) throw IngestionError(fmt::format("CSV row {} is not a lattice node", rows + 1));
        const auto k = static_cast<std::size_t>(*node);
        if (seen[k]) throw IngestionError(fmt::format("CSV row {} repeats a node", rows + 1));
        seen[k] = 1;
        values[k] = cols.back();
        ++rows;
    }
    if (rows != grid->size()) {
        throw IngestionError(fmt::format("CSV has {} rows, grid has {} nodes", rows, grid->size()));
    }
    return ScalarField(grid, std::move(values));
}

ScalarField read_csv(const std::filesystem::path& path, const GridPtr& grid) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError(fmt::format("cannot open {}", path.string()));
    return read_csv(in, grid);
}

void write_pgm(std::ostream& out, const ScalarField& field) {
    const auto& g = field.grid();
    if (g.dim() != 2) throw ContractError("PGM export requires a 2D field");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : field.values()) {
        if (!std::isfinite(v)) throw NumericalError("PGM export: non-finite value");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const auto& qmin = g.lattice_min();
    const auto& qmax = g.lattice_max();
    const auto width = qmax[0] - qmin[0] + 1;
    const auto height = qmax[1] - qmin[1] + 1;
    out << "P2\n" << width << ' ' << height << "\n255\n";
    for (auto j = qmax[1]; j >= qmin[1]; --j) {
        for (auto i = qmin[0]; i <= qmax[0]; ++i) {
            int pixel = 0;
            if (auto node = g.find({i, j}); node && hi > lo) {
                pixel = static_cast<int>(std::lround(255.0 * (field[*node] - lo) / (hi - lo)));
            }
            out << pixel << (i == qmax[0] ? '\n' : ' ');
        }
    }
}

void write_pgm(const std::filesystem::path& path, const ScalarField& field) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError(fmt::format("cannot open {} for writing", path.string()));
    write_pgm(out, field);
}

}  // namespace deadcore
