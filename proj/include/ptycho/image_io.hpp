#pragma once

#include <string>

#include "ptycho/field.hpp"
#include "ptycho/forward.hpp"

namespace ptycho {

// Two on-disk formats:
//
//  * binary PGM (P5, maxval 255), square images only.  Loading maps bytes to
//    [0, 1]; saving min-max rescales to [0, 255] (lossy, for viewing).
//  * PTYF, a raw little-endian float64 container for lossless round-trips:
//      bytes 0..3   magic "PTYF"
//      bytes 4..7   u32 grid side n
//      bytes 8..11  u32 channel count (1 real grid, 2 complex field
//                   as real then imaginary plane, k >= 1 pattern stack)
//      bytes 12..15 u32 reserved, zero
//    followed by channel-major row-major float64 samples.

RealGrid loadPgm(const std::string& path);
void savePgm(const RealGrid& image, const std::string& path);

RealGrid loadRawGrid(const std::string& path);
void saveRawGrid(const RealGrid& grid, const std::string& path);

ComplexField loadRawField(const std::string& path);
void saveRawField(const ComplexField& field, const std::string& path);

DiffractionStack loadRawStack(const std::string& path);
void saveRawStack(const DiffractionStack& stack, const std::string& path);

// Dispatches on the magic bytes: P5 -> loadPgm, PTYF (1 channel) -> loadRawGrid.
RealGrid loadImage(const std::string& path);

}  // namespace ptycho
