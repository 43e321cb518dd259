#pragma once

#include <iosfwd>
#include <string>

#include "ksadi/grid.hpp"

namespace ksadi {

/// Metadata carried in the snapshot header line.
struct SnapshotMeta {
    std::string name;  ///< e.g. "rho" or "c"
    double t = 0.0;
};

/// Snapshot format: one header line `# {json}` holding the grid metadata,
/// followed by a CSV matrix with one row per j and one column per i.
/// Numbers are written with 17 significant digits so a round trip through
/// the text is exact.
void write_field_csv(std::ostream& os, const Field& f, const SnapshotMeta& meta);

/// Reads a snapshot written by write_field_csv. Throws ConfigError on a
/// malformed header or a matrix whose shape disagrees with the header grid.
Field read_field_csv(std::istream& is, SnapshotMeta* meta = nullptr);

/// 17-significant-digit text form; parses back to the same double.
std::string format_double(double v);

/// Parses a double written by format_double; throws ConfigError on garbage.
double parse_double(const std::string& s);

std::string to_string(BoundaryKind bc);
BoundaryKind parse_boundary_kind(const std::string& s);

}  // namespace ksadi
