#include "gasgraph/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "gasgraph/errors.hpp"

namespace gasgraph {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 8> kMagic{'G', 'G', 'C', 'K', 'P', 'T', '\0', '\0'};

template <class T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void put_string(std::ofstream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  Reader(std::ifstream& in, std::filesystem::path path) : in_(in), path_(std::move(path)) {}

  template <class T>
  T get(const char* what) {
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in_) fail(std::string("truncated while reading ") + what);
    return value;
  }

  std::string get_string(const char* what) {
    const auto n = get<std::uint64_t>(what);
    if (n > (1ULL << 32)) fail(std::string("implausible length for ") + what);
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) fail(std::string("truncated while reading ") + what);
    return s;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(path_.string() + ": " + msg);
  }

 private:
  std::ifstream& in_;
  std::filesystem::path path_;
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, ckpt.format_version);
  put<std::uint64_t>(out, ckpt.seed);
  put<std::uint64_t>(out, ckpt.epoch);
  put_string(out, ckpt.architecture.dump());
  put<std::uint64_t>(out, ckpt.parameters.size());
  for (const auto& [name, t] : ckpt.parameters.items()) {
    put_string(out, name);
    put<std::uint64_t>(out, t.rank());
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    const auto data = t.data();
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  Reader r(in, path);
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) r.fail("not a checkpoint file (bad magic)");

  Checkpoint ckpt;
  ckpt.format_version = r.get<std::uint32_t>("version");
  if (ckpt.format_version != Checkpoint::kFormatVersion) {
    r.fail("unsupported checkpoint version " + std::to_string(ckpt.format_version));
  }
  ckpt.seed = r.get<std::uint64_t>("seed");
  ckpt.epoch = r.get<std::uint64_t>("epoch");
  try {
    ckpt.architecture = nlohmann::json::parse(r.get_string("config"));
  } catch (const nlohmann::json::parse_error& e) {
    r.fail(std::string("architecture config is not valid JSON: ") + e.what());
  }
  const auto count = r.get<std::uint64_t>("tensor count");
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.get_string("tensor name");
    const auto rank = r.get<std::uint64_t>("rank");
    if (rank == 0 || rank > 8) r.fail("tensor '" + name + "' has invalid rank " + std::to_string(rank));
    Shape shape;
    for (std::uint64_t d = 0; d < rank; ++d) shape.push_back(r.get<std::uint64_t>("extent"));
    const std::size_t n = shape_numel(shape);
    if (n == 0 || n > (1ULL << 31)) r.fail("tensor '" + name + "' has invalid shape " + shape_to_string(shape));
    std::vector<double> data(n);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) r.fail("truncated tensor data for '" + name + "'");
    ckpt.parameters.add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  in.peek();
  if (!in.eof()) r.fail("trailing bytes after last tensor");
  return ckpt;
}

}  // namespace gasgraph
