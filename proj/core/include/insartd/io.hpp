#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "insartd/simulate.hpp"
#include "insartd/tensor.hpp"

namespace insartd {

// "CT3" v1 container: magic 43 54 33 00, three little-endian u64 dims
// (I1, I2, I3), then I1*I2*I3 interleaved (real, imag) little-endian
// doubles in storage order.

/// Rejects non-finite entries before touching the file.
void write_ct3(const std::string& path, const ComplexTensor3& t);

/// Throws std::runtime_error on wrong magic, truncated or oversized
/// payload, and rejects non-finite entries.
ComplexTensor3 read_ct3(const std::string& path);

/// Grid CSV: one comment header line "# rows=<R> cols=<C> units=<units>",
/// then R comma-separated rows. Numbers are locale-independent and
/// round-trip exactly.
void write_grid_csv(const std::string& path, const RealGrid& g, const std::string& units);
RealGrid read_grid_csv(const std::string& path);

void write_mask_csv(const std::string& path, std::size_t rows, std::size_t cols,
                    const std::vector<std::uint8_t>& mask);
std::vector<std::uint8_t> read_mask_csv(const std::string& path, std::size_t* rows = nullptr,
                                        std::size_t* cols = nullptr);

void write_geometry_json(const std::string& path, const InSARGeometry& geom);
InSARGeometry read_geometry_json(const std::string& path);

/// zlib CRC-32 of the file contents, with the byte size; used for the
/// run-manifest artifact table.
struct FileChecksum {
    std::uint32_t crc32 = 0;
    std::uint64_t bytes = 0;
};
FileChecksum checksum_file(const std::string& path);

}  // namespace insartd
