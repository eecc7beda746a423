#pragma once

#include "lrbm/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace lrbm {

struct Provenance {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::uint32_t epoch = 0;
};

struct ModelFile {
  RbmParams params;
  Provenance provenance;
};

/*
 * Binary model file, all fields little-endian:
 *
 *   "LRBM"            4 bytes
 *   format_version    u32 (currently 1)
 *   hidden_kind       u8  (0 = leaky ReLU, 1 = Bernoulli)
 *   I, J              u32, u32
 *   c                 f64
 *   W                 I*J f64, row-major
 *   a, b              I f64, J f64
 *   config_hash       u64
 *   seed              u64
 *   epoch             u32
 */
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::string encode_model(const RbmParams& params, const Provenance& provenance);
ModelFile decode_model(const std::string& bytes, const std::string& source = "<memory>");

void save_model(const std::filesystem::path& path, const RbmParams& params, const Provenance& provenance = {});
ModelFile load_model(const std::filesystem::path& path);

}  // namespace lrbm
