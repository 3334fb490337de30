#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "deadcore/lattice.hpp"

namespace deadcore {

/// CSV with header `x,value` (1D) or `x,y,value` (2D), one row per node in
/// node order, every number printed with 17 significant digits.
void write_csv(std::ostream& out, const ScalarField& field);
void write_csv(const std::filesystem::path& path, const ScalarField& field);

/// Reads a CSV produced by write_csv back onto `grid`. Rows must cover
/// every node exactly once; throws IngestionError otherwise.
ScalarField read_csv(std::istream& in, const GridPtr& grid);
ScalarField read_csv(const std::filesystem::path& path, const GridPtr& grid);

/// Plain PGM (P2) of a 2D field over the node bounding box, maxval 255.
/// Node values map affinely from [min, max] to [0, 255] (rounded); a
/// constant field maps to 0, and lattice points that are not nodes are 0.
/// The first image row is the largest y. Throws ContractError in 1D and
/// NumericalError on non-finite values.
void write_pgm(std::ostream& out, const ScalarField& field);
void write_pgm(const std::filesystem::path& path, const ScalarField& field);

/// 17-significant-digit rendering used by every text artifact.
std::string format_real(double v);

}  // namespace deadcore
