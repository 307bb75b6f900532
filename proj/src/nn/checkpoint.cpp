#include "wadapt/nn/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <iterator>

#include "wadapt/audit.hpp"
#include "wadapt/error.hpp"

namespace wadapt::nn {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'W', 'A', 'D', 'P'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 8 * 4;

template <typename Fn>
void visit_groups(const ModelParams& p, Fn&& fn) {
  const auto v = [&](const char* name, const auto& m) { fn(name, m.data(), static_cast<std::size_t>(m.size())); };
  v("conv1_w", p.conv1_w);
  v("conv1_b", p.conv1_b);
  v("bn1.gamma", p.bn1.gamma);
  v("bn1.beta", p.bn1.beta);
  v("bn1.run_mean", p.bn1.run_mean);
  v("bn1.run_var", p.bn1.run_var);
  v("conv2_w", p.conv2_w);
  v("conv2_b", p.conv2_b);
  v("bn2.gamma", p.bn2.gamma);
  v("bn2.beta", p.bn2.beta);
  v("bn2.run_mean", p.bn2.run_mean);
  v("bn2.run_var", p.bn2.run_var);
  v("fc1_w", p.fc1_w);
  v("fc1_b", p.fc1_b);
  v("fc2_w", p.fc2_w);
  v("fc2_b", p.fc2_b);
}

template <typename UInt>
void put(std::vector<std::uint8_t>& out, UInt value) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename UInt>
  UInt get(const char* what) {
    if (bytes_.size() - pos_ < sizeof(UInt)) {
      throw Error(Errc::Truncated, std::string("checkpoint ends inside ") + what);
    }
    UInt value = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= static_cast<UInt>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(UInt);
    return value;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const ModelParams& params) {
  const Architecture& a = params.arch;
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put<std::uint32_t>(out, kCheckpointVersion);
  for (int d : {a.window, a.features, a.kernel, a.conv1, a.conv2, a.hidden, a.classes, a.conv_out_len()}) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  }
  visit_groups(params, [&](const char*, const double* data, std::size_t n) {
    put<std::uint64_t>(out, n);
    for (std::size_t i = 0; i < n; ++i) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(data[i]));
  });
  return out;
}

ModelParams deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kMagic.size()) throw Error(Errc::Truncated, "checkpoint shorter than its magic bytes");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(Errc::BadMagic, "not a checkpoint (magic bytes differ from WADP)");
  }
  Reader r(bytes);
  r.get<std::uint32_t>("magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw Error(Errc::VersionMismatch, "checkpoint version " + std::to_string(version) + ", expected " +
                                           std::to_string(kCheckpointVersion));
  }
  std::array<std::uint32_t, 8> dims{};
  for (auto& d : dims) d = r.get<std::uint32_t>("architecture header");
  ModelParams p;
  Architecture& a = p.arch;
  a.window = static_cast<int>(dims[0]);
  a.features = static_cast<int>(dims[1]);
  a.kernel = static_cast<int>(dims[2]);
  a.conv1 = static_cast<int>(dims[3]);
  a.conv2 = static_cast<int>(dims[4]);
  a.hidden = static_cast<int>(dims[5]);
  a.classes = static_cast<int>(dims[6]);
  try {
    a.validate();
  } catch (const Error& e) {
    throw Error(Errc::DimensionMismatch, std::string("checkpoint architecture invalid: ") + e.what());
  }
  if (static_cast<int>(dims[7]) != a.conv_out_len()) {
    throw Error(Errc::DimensionMismatch, "checkpoint W' does not match W under same padding");
  }

  p = init_params(a, 0);
  visit_groups(p, [&](const char* name, const double* data, std::size_t n) {
    const auto count = r.get<std::uint64_t>(name);
    if (count != n) {
      throw Error(Errc::DimensionMismatch, std::string(name) + " has " + std::to_string(count) +
                                               " elements, architecture implies " + std::to_string(n));
    }
    if (r.remaining() / 8 < count) throw Error(Errc::Truncated, std::string("checkpoint payload ends inside ") + name);
    auto* dst = const_cast<double*>(data);
    for (std::size_t i = 0; i < n; ++i) dst[i] = std::bit_cast<double>(r.get<std::uint64_t>(name));
  });
  if (r.remaining() != 0) throw Error(Errc::DimensionMismatch, "checkpoint has trailing bytes after fc2_b");
  if (!(p.bn1.run_var.array() > 0.0).all() || !(p.bn2.run_var.array() > 0.0).all()) {
    throw Error(Errc::DimensionMismatch, "checkpoint has non-positive batch-norm running variance");
  }
  return p;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  const auto bytes = serialize(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::Io, "write to '" + path.string() + "' failed");
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in = audit::open_input(path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::vector<GroupRegion> checkpoint_layout(const Architecture& arch) {
  std::vector<GroupRegion> regions;
  std::size_t offset = kHeaderBytes;
  visit_groups(init_params(arch, 0), [&](const char* name, const double*, std::size_t n) {
    const std::size_t length = 8 + 8 * n;
    regions.push_back({name, offset, length});
    offset += length;
  });
  return regions;
}

}  // namespace wadapt::nn
