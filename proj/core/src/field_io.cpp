#include "ksadi/field_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "ksadi/errors.hpp"

namespace ksadi {

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s)
{
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first != last && (*first == ' ' || *first == '\t'))
        ++first;
    while (last != first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r'))
        --last;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw ConfigError("cannot parse number '" + s + "'");
    return v;
}

std::string to_string(BoundaryKind bc)
{
    return bc == BoundaryKind::Periodic ? "periodic" : "neumann";
}

BoundaryKind parse_boundary_kind(const std::string& s)
{
    if (s == "periodic")
        return BoundaryKind::Periodic;
    if (s == "neumann" || s == "neumann_symmetric")
        return BoundaryKind::NeumannSymmetric;
    throw ConfigError("unknown boundary kind '" + s + "' (expected periodic|neumann)");
}

void write_field_csv(std::ostream& os, const Field& f, const SnapshotMeta& meta)
{
    const GridSpec& g = f.grid();
    nlohmann::ordered_json header;
    header["name"] = meta.name;
    header["t"] = meta.t;
    header["xmin"] = g.xmin;
    header["xmax"] = g.xmax;
    header["ymin"] = g.ymin;
    header["ymax"] = g.ymax;
    header["nx"] = g.nx;
    header["ny"] = g.ny;
    header["bc"] = to_string(g.bc);
    os << "# " << header.dump() << '\n';
    for (int j = 0; j < g.nodes_y(); ++j) {
        for (int i = 0; i < g.nodes_x(); ++i) {
            if (i > 0)
                os << ',';
            os << format_double(f(i, j));
        }
        os << '\n';
    }
}

Field read_field_csv(std::istream& is, SnapshotMeta* meta)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0)
        throw ConfigError("snapshot: missing '# {json}' header line");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line.substr(2));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("snapshot: bad header: ") + e.what());
    }

    GridSpec g;
    try {
        g = make_grid(header.at("xmin").get<double>(), header.at("xmax").get<double>(),
                      header.at("ymin").get<double>(), header.at("ymax").get<double>(),
                      header.at("nx").get<int>(), header.at("ny").get<int>(),
                      parse_boundary_kind(header.at("bc").get<std::string>()));
        if (meta) {
            meta->name = header.value("name", std::string{});
            meta->t = header.value("t", 0.0);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("snapshot: incomplete header: ") + e.what());
    }

    std::vector<double> values;
    values.reserve(g.size());
    int rows = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r")
            continue;
        std::stringstream ss(line);
        std::string cell;
        int cols = 0;
        while (std::getline(ss, cell, ',')) {
            values.push_back(parse_double(cell));
            ++cols;
        }
        if (cols != g.nodes_x())
            throw ConfigError("snapshot: row " + std::to_string(rows) + " has " +
                              std::to_string(cols) + " columns, expected " +
                              std::to_string(g.nodes_x()));
        ++rows;
    }
    if (rows != g.nodes_y())
        throw ConfigError("snapshot: expected " + std::to_string(g.nodes_y()) + " rows, got " +
                          std::to_string(rows));
    return Field(g, std::move(values));
}

}  // namespace ksadi
