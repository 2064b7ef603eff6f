#include "lumi/checkpoint.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "lumi/errors.hpp"

namespace lumi {

namespace {

constexpr char kMagic[8] = {'L', 'S', 'P', 'L', 'A', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

struct Writer {
  std::vector<unsigned char> bytes;

  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  template <typename T>
  void scalar(T v) {
    raw(&v, sizeof v);
  }
  void array(const std::vector<float>& v) {
    scalar<std::uint64_t>(v.size());
    raw(v.data(), v.size() * sizeof(float));
  }
};

struct Reader {
  const unsigned char* p;
  const unsigned char* end;

  void raw(void* out, std::size_t n) {
    if (std::size_t(end - p) < n) throw IoError("checkpoint: truncated file");
    std::memcpy(out, p, n);
    p += n;
  }
  template <typename T>
  T scalar() {
    T v;
    raw(&v, sizeof v);
    return v;
  }
  std::vector<float> array() {
    const auto n = scalar<std::uint64_t>();
    if (n > std::size_t(end - p) / sizeof(float)) throw IoError("checkpoint: truncated array");
    std::vector<float> v(n);
    raw(v.data(), n * sizeof(float));
    return v;
  }
};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const GaussianCloud& cloud, const PdmWeights& pdm,
                     std::uint64_t step) {
  Writer w;
  w.scalar(kVersion);
  w.scalar(step);
  w.scalar<std::int32_t>(cloud.sh_degree);
  w.scalar<std::uint64_t>(cloud.size());
  w.array(cloud.positions);
  w.array(cloud.rotations);
  w.array(cloud.log_scales);
  w.array(cloud.opacity_logits);
  w.array(cloud.sh_coeffs);
  w.array(cloud.structure_logits);
  w.array(cloud.illum_raw);
  w.array(cloud.depth_logits);
  w.array(cloud.noise_raw);
  w.array(pdm.w1);
  w.array(pdm.b1);
  w.array(pdm.w2);
  w.array(pdm.b2);
  w.array(pdm.w3);
  w.array(pdm.b3);

  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, w.bytes.data(), static_cast<uInt>(w.bytes.size())));

  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path);
  if (std::fwrite(kMagic, 1, sizeof kMagic, fp.get()) != sizeof kMagic ||
      std::fwrite(w.bytes.data(), 1, w.bytes.size(), fp.get()) != w.bytes.size() ||
      std::fwrite(&crc, sizeof crc, 1, fp.get()) != 1)
    throw IoError("short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path);
  std::fseek(fp.get(), 0, SEEK_END);
  const long size = std::ftell(fp.get());
  std::fseek(fp.get(), 0, SEEK_SET);
  if (size < long(sizeof kMagic + sizeof(std::uint32_t)))
    throw IoError(path + ": not a checkpoint file");

  std::vector<unsigned char> bytes(size);
  if (std::fread(bytes.data(), 1, bytes.size(), fp.get()) != bytes.size())
    throw IoError("short read from " + path);
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw IoError(path + ": bad magic number");

  const std::size_t payload = bytes.size() - sizeof kMagic - sizeof(std::uint32_t);
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + sizeof kMagic + payload, sizeof stored_crc);
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, bytes.data() + sizeof kMagic, static_cast<uInt>(payload)));
  if (crc != stored_crc) throw IoError(path + ": checksum failure");

  Reader r{bytes.data() + sizeof kMagic, bytes.data() + sizeof kMagic + payload};
  const auto version = r.scalar<std::uint32_t>();
  if (version != kVersion)
    throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));

  Checkpoint ck;
  ck.step = r.scalar<std::uint64_t>();
  ck.cloud.sh_degree = r.scalar<std::int32_t>();
  const auto n = r.scalar<std::uint64_t>();
  ck.cloud.positions = r.array();
  ck.cloud.rotations = r.array();
  ck.cloud.log_scales = r.array();
  ck.cloud.opacity_logits = r.array();
  ck.cloud.sh_coeffs = r.array();
  ck.cloud.structure_logits = r.array();
  ck.cloud.illum_raw = r.array();
  ck.cloud.depth_logits = r.array();
  ck.cloud.noise_raw = r.array();
  ck.pdm.w1 = r.array();
  ck.pdm.b1 = r.array();
  ck.pdm.w2 = r.array();
  ck.pdm.b2 = r.array();
  ck.pdm.w3 = r.array();
  ck.pdm.b3 = r.array();

  if (ck.cloud.opacity_logits.size() != n || ck.cloud.positions.size() != n * 3 ||
      ck.cloud.rotations.size() != n * 4 ||
      ck.cloud.sh_coeffs.size() != n * GaussianCloud::kShCoeffCount * 3)
    throw IoError(path + ": inconsistent array sizes");
  return ck;
}

}  // namespace lumi
