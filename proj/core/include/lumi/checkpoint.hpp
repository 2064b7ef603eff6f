#pragma once

#include <cstdint>
#include <string>

#include "lumi/gaussian_cloud.hpp"
#include "lumi/pdm.hpp"

namespace lumi {

struct Checkpoint {
  GaussianCloud cloud;
  PdmWeights pdm;
  std::uint64_t step = 0;
};

/// Versioned binary container (magic + version header, CRC32 trailer). Float
/// arrays round-trip bit-exactly; saving the result of a load reproduces the
/// file byte for byte.
void save_checkpoint(const std::string& path, const GaussianCloud& cloud,
                     const PdmWeights& pdm, std::uint64_t step);

/// Throws IoError on unreadable/truncated files, version mismatch or checksum
/// failure.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lumi
