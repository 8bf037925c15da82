#pragma once

#include "srtt/htucker.hpp"

#include <iosfwd>
#include <string>

namespace srtt {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Dense tensor container ("SRTT"): magic bytes, format version u32 LE = 1,
// order as u64 LE, the dimensions as u64 LE, then the elements as IEEE-754
// binary64 LE in linearization order. No padding, no compression.
void write_tensor(const std::string& path, const DenseTensor<double>& x);
DenseTensor<double> read_tensor(const std::string& path);
void write_tensor(std::ostream& os, const DenseTensor<double>& x);
DenseTensor<double> read_tensor(std::istream& is);

// Hierarchical decomposition container ("SRHT"): the tree as a node list in
// heap order (mode count, 0-based modes, child links with 0 meaning none,
// both u64 LE), then per node in the same order a dimension-prefixed
// binary64 block: leaves carry their factor (rows, cols, column-major
// values), internal nodes their transfer tensor (three extents, values in
// linearization order). Same endianness rules as the tensor container.
void write_htucker(const std::string& path, const HTuckerDecomposition<double>& h);
HTuckerDecomposition<double> read_htucker(const std::string& path);
void write_htucker(std::ostream& os, const HTuckerDecomposition<double>& h);
HTuckerDecomposition<double> read_htucker(std::istream& is);

}  // namespace srtt
