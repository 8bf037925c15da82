#include "srtt/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace srtt {

namespace {

constexpr char kTensorMagic[4] = {'S', 'R', 'T', 'T'};
constexpr char kHtMagic[4] = {'S', 'R', 'H', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf, 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::istream& is) {
  unsigned char buf[4];
  is.read(reinterpret_cast<char*>(buf), 4);
  if (!is) throw IoError("unexpected end of stream");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw IoError("unexpected end of stream");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

void put_values(std::ostream& os, const double* data, Index count) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data),
             static_cast<std::streamsize>(count) * static_cast<std::streamsize>(sizeof(double)));
  } else {
    for (Index i = 0; i < count; ++i) put_f64(os, data[i]);
  }
}

void get_values(std::istream& is, double* data, Index count) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(data),
            static_cast<std::streamsize>(count) * static_cast<std::streamsize>(sizeof(double)));
    if (!is) throw IoError("unexpected end of stream");
  } else {
    for (Index i = 0; i < count; ++i) data[i] = get_f64(is);
  }
}

void check_magic(std::istream& is, const char (&magic)[4], const char* what) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0)
    throw IoError(std::string(what) + ": bad magic bytes");
  const std::uint32_t version = get_u32(is);
  if (version != kFormatVersion)
    throw IoError(std::string(what) + ": unsupported format version " + std::to_string(version));
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path);
  return is;
}

}  // namespace

void write_tensor(std::ostream& os, const DenseTensor<double>& x) {
  os.write(kTensorMagic, 4);
  put_u32(os, kFormatVersion);
  put_u64(os, static_cast<std::uint64_t>(x.order()));
  for (Index k = 0; k < x.order(); ++k) put_u64(os, static_cast<std::uint64_t>(x.dim(k)));
  put_values(os, x.data(), x.size());
  if (!os) throw IoError("tensor write failed");
}

void write_tensor(const std::string& path, const DenseTensor<double>& x) {
  auto os = open_out(path);
  write_tensor(os, x);
}

DenseTensor<double> read_tensor(std::istream& is) {
  check_magic(is, kTensorMagic, "tensor file");
  const std::uint64_t order = get_u64(is);
  if (order == 0 || order > 64) throw IoError("tensor file: implausible order");
  std::vector<Index> dims;
  for (std::uint64_t k = 0; k < order; ++k) dims.push_back(static_cast<Index>(get_u64(is)));
  Shape shape{dims};
  DenseTensor<double> x{shape};
  get_values(is, x.data(), x.size());
  return x;
}

DenseTensor<double> read_tensor(const std::string& path) {
  auto is = open_in(path);
  return read_tensor(is);
}

void write_htucker(std::ostream& os, const HTuckerDecomposition<double>& h) {
  const DimensionTree& tree = h.tree;
  os.write(kHtMagic, 4);
  put_u32(os, kFormatVersion);
  put_u64(os, static_cast<std::uint64_t>(tree.order()));
  put_u64(os, static_cast<std::uint64_t>(tree.num_nodes()));
  for (Index i = 0; i < tree.num_nodes(); ++i) {
    const TreeNode& n = tree.node(i);
    put_u64(os, static_cast<std::uint64_t>(n.modes.size()));
    for (Index m : n.modes) put_u64(os, static_cast<std::uint64_t>(m));
    put_u64(os, n.is_leaf() ? 0 : static_cast<std::uint64_t>(n.left) + 1);
    put_u64(os, n.is_leaf() ? 0 : static_cast<std::uint64_t>(n.right) + 1);
  }
  for (Index i = 0; i < tree.num_nodes(); ++i) {
    const TreeNode& n = tree.node(i);
    if (n.is_leaf()) {
      const Matrix<double>& u = h.leaf_factors[static_cast<std::size_t>(n.modes[0])];
      put_u64(os, static_cast<std::uint64_t>(u.rows()));
      put_u64(os, static_cast<std::uint64_t>(u.cols()));
      put_values(os, u.data(), u.size());
    } else {
      const DenseTensor<double>& b = h.transfers[static_cast<std::size_t>(i)];
      for (Index k = 0; k < 3; ++k) put_u64(os, static_cast<std::uint64_t>(b.dim(k)));
      put_values(os, b.data(), b.size());
    }
  }
  if (!os) throw IoError("hierarchical container write failed");
}

void write_htucker(const std::string& path, const HTuckerDecomposition<double>& h) {
  auto os = open_out(path);
  write_htucker(os, h);
}

HTuckerDecomposition<double> read_htucker(std::istream& is) {
  check_magic(is, kHtMagic, "hierarchical container");
  const std::uint64_t order = get_u64(is);
  const std::uint64_t num_nodes = get_u64(is);
  if (order < 2 || num_nodes < 3 || num_nodes > 4 * order)
    throw IoError("hierarchical container: implausible tree size");

  std::vector<TreeNode> nodes;
  for (std::uint64_t i = 0; i < num_nodes; ++i) {
    const std::uint64_t nmodes = get_u64(is);
    if (nmodes == 0 || nmodes > order) throw IoError("hierarchical container: bad mode set");
    std::vector<Index> modes;
    for (std::uint64_t k = 0; k < nmodes; ++k) modes.push_back(static_cast<Index>(get_u64(is)));
    const std::uint64_t left = get_u64(is);
    const std::uint64_t right = get_u64(is);
    TreeNode n{ModeSet{modes}, left == 0 ? -1 : static_cast<Index>(left - 1),
               right == 0 ? -1 : static_cast<Index>(right - 1), -1, 0};
    nodes.push_back(std::move(n));
  }
  // Recover parent links and levels from the child links.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].left < 0) continue;
    if (nodes[i].left >= static_cast<Index>(nodes.size()) ||
        nodes[i].right >= static_cast<Index>(nodes.size()))
      throw IoError("hierarchical container: child link out of range");
    nodes[static_cast<std::size_t>(nodes[i].left)].parent = static_cast<Index>(i);
    nodes[static_cast<std::size_t>(nodes[i].right)].parent = static_cast<Index>(i);
  }
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i].parent < 0) throw IoError("hierarchical container: disconnected node");
    if (nodes[i].parent >= static_cast<Index>(i))
      throw IoError("hierarchical container: nodes must come after their parent");
    nodes[i].level = nodes[static_cast<std::size_t>(nodes[i].parent)].level + 1;
  }

  HTuckerDecomposition<double> h{DimensionTree{nodes}, {}, {}};
  h.leaf_factors.resize(static_cast<std::size_t>(order));
  h.transfers.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) {
      const auto rows = static_cast<Index>(get_u64(is));
      const auto cols = static_cast<Index>(get_u64(is));
      if (rows < 1 || cols < 1) throw IoError("hierarchical container: bad factor extents");
      Matrix<double> u(rows, cols);
      get_values(is, u.data(), u.size());
      h.leaf_factors[static_cast<std::size_t>(nodes[i].modes[0])] = std::move(u);
    } else {
      std::vector<Index> dims;
      for (int k = 0; k < 3; ++k) dims.push_back(static_cast<Index>(get_u64(is)));
      DenseTensor<double> b{Shape{dims}};
      get_values(is, b.data(), b.size());
      h.transfers[i] = std::move(b);
    }
  }
  return h;
}

HTuckerDecomposition<double> read_htucker(const std::string& path) {
  auto is = open_in(path);
  return read_htucker(is);
}

}  // namespace srtt
