#include "editvec/checkpoint.hpp"

#include <cstdint>
#include <fstream>

namespace editvec::checkpoint {

namespace {
constexpr char kMagic[8] = {'E', 'V', 'C', 'P', '0', '0', '0', '1'};

template <typename T>
void write_pod(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw CheckpointError("truncated checkpoint");
  return value;
}
}  // namespace

void write_arrays(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, const nn::Tensor*>>& arrays) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& [name, tensor] : arrays) {
    write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(tensor->shape.size()));
    for (std::size_t d : tensor->shape) write_pod<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(tensor->v.data()),
              static_cast<std::streamsize>(tensor->v.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("write failed for " + path.string());
}

std::map<std::string, nn::Tensor> read_arrays(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::string_view(magic, 8) != std::string_view(kMagic, 8))
    throw CheckpointError("bad checkpoint magic");
  auto count = read_pod<std::uint32_t>(in);
  std::map<std::string, nn::Tensor> out;
  for (std::uint32_t a = 0; a < count; ++a) {
    auto name_len = read_pod<std::uint16_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    auto ndim = read_pod<std::uint8_t>(in);
    std::vector<std::size_t> shape;
    for (std::uint8_t d = 0; d < ndim; ++d)
      shape.push_back(static_cast<std::size_t>(read_pod<std::uint64_t>(in)));
    nn::Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.v.data()),
            static_cast<std::streamsize>(t.v.size() * sizeof(double)));
    if (!in) throw CheckpointError("truncated checkpoint array " + name);
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

namespace {
std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename Map>
std::uint64_t hash_map(const Map& vocab) {
  std::map<std::string, int> sorted(vocab.begin(), vocab.end());
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& [k, v] : sorted) {
    h = fnv1a(h, k.data(), k.size());
    std::int64_t id = v;
    h = fnv1a(h, &id, sizeof(id));
  }
  return h;
}
}  // namespace

std::uint64_t vocab_hash(const std::map<std::string, int>& vocab) {
  return hash_map(vocab);
}
std::uint64_t vocab_hash(const std::unordered_map<std::string, int>& vocab) {
  return hash_map(vocab);
}

}  // namespace editvec::checkpoint
