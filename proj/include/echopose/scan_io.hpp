#pragma once

#include <string>
#include <vector>

#include "echopose/phantom.hpp"

namespace echopose::scan_io {

// Scan container format (little-endian):
//   bytes 0..7   magic "EPSCAN01"
//   bytes 8..15  uint64 header length in bytes
//   header       JSON text: scan_id, subject_id, protocol, geometry, seeds, N
//   payload      N frames, each H*W float32 row-major,
//                then N world poses, each 6 float64 [rz, ry, rx, tx, ty, tz]
void write_scan(const std::string& path, const phantom::ScanRecord& scan);
phantom::ScanRecord read_scan(const std::string& path);

}  // namespace echopose::scan_io
