#include "hardylab/io.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

namespace hardylab {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::string& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::string_view in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw InvalidArgument("snapshot: truncated data");
  unsigned char b[sizeof(T)];
  std::memcpy(b, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

constexpr char kMagic[8] = {'H', 'L', 'S', 'N', 'A', 'P', '0', '1'};

}  // namespace

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
  return s;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  static std::atomic<unsigned> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ostringstream tag;
  tag << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "." << counter++;
  fs::path tmp = path;
  tmp += tag.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string encode_snapshot(const Field& f) {
  const Grid& g = f.grid();
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.dim()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.points_per_axis()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.components()));
  put_le<std::uint32_t>(out, kSnapshotComplex128);
  put_le<double>(out, g.half_width());
  put_le<double>(out, f.time());
  out.reserve(out.size() + f.values().size() * 16);
  for (const cplx& z : f.values()) {
    put_le<double>(out, z.real());
    put_le<double>(out, z.imag());
  }
  return out;
}

Field decode_snapshot(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw InvalidArgument("snapshot: bad magic");
  std::size_t pos = sizeof(kMagic);
  const auto dim = get_le<std::uint32_t>(bytes, pos);
  const auto m = get_le<std::uint32_t>(bytes, pos);
  const auto n = get_le<std::uint32_t>(bytes, pos);
  const auto dtype = get_le<std::uint32_t>(bytes, pos);
  if (dtype != kSnapshotComplex128) throw InvalidArgument("snapshot: unsupported dtype " + std::to_string(dtype));
  const double L = get_le<double>(bytes, pos);
  const double t = get_le<double>(bytes, pos);
  const Grid g = Grid::make(static_cast<int>(dim), static_cast<int>(m), L, static_cast<int>(n));
  const std::size_t count = g.point_count() * g.components();
  if (bytes.size() - pos != count * 16) throw InvalidArgument("snapshot: payload size does not match the header");
  std::vector<cplx> vals(count);
  for (auto& z : vals) {
    const double re = get_le<double>(bytes, pos);
    const double im = get_le<double>(bytes, pos);
    z = {re, im};
  }
  return Field(g, std::move(vals), t);
}

void write_snapshot(const fs::path& path, const Field& f) { write_file_atomic(path, encode_snapshot(f)); }

Field read_snapshot(const fs::path& path) { return decode_snapshot(read_file(path)); }

std::vector<std::string> list_tree(const fs::path& root) {
  std::vector<std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).generic_string());
  std::sort(out.begin(), out.end());
  return out;
}

TreeDiff compare_trees(const fs::path& left, const fs::path& right) {
  const auto a = list_tree(left), b = list_tree(right);
  TreeDiff d;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(d.only_left));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(d.only_right));
  std::vector<std::string> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  for (const auto& rel : both)
    if (read_file(left / rel) != read_file(right / rel)) d.differing.push_back(rel);
  return d;
}

}  // namespace hardylab
