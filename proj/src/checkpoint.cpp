#include "dialsel/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace dialsel {

namespace {

constexpr char kMagic[8] = {'D', 'S', 'E', 'L', 'C', 'K', 'P', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is, const std::string& path) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8))
    throw Error(path + ": truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }

double get_f64(std::istream& is, const std::string& path) {
  return std::bit_cast<double>(get_u64(is, path));
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor*>>& entries) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(path + ": cannot open for writing");
  os.write(kMagic, 8);
  put_u64(os, entries.size());
  for (const auto& [name, t] : entries) {
    put_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(os, t->rank());
    for (std::size_t d : t->shape()) put_u64(os, d);
  }
  for (const auto& [name, t] : entries)
    for (std::size_t i = 0; i < t->size(); ++i) put_f64(os, t->at(i));
  if (!os) throw Error(path + ": write failed");
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(path + ": cannot open");
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw Error(path + ": not a checkpoint file");
  const std::uint64_t n = get_u64(is, path);
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(n);
  for (std::uint64_t e = 0; e < n; ++e) {
    const std::uint64_t name_len = get_u64(is, path);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(name_len)))
      throw Error(path + ": truncated checkpoint");
    const std::uint64_t rank = get_u64(is, path);
    if (rank > 2) throw Error(path + ": unsupported tensor rank in checkpoint");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = get_u64(is, path);
    out.emplace_back(std::move(name), Tensor::zeros(std::move(shape)));
  }
  for (auto& [name, t] : out)
    for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = get_f64(is, path);
  return out;
}

}  // namespace dialsel
