#pragma once

#include "lrbm/partition.hpp"
#include "lrbm/training.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace lrbm {

/// Flat `key = value` settings; `#` starts a comment.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::string_view text, const std::string& source = "<config>");
ConfigMap load_config(const std::filesystem::path& path);

struct ModelSettings {
  int hidden = 16;
  double leakiness = 0.1;
  HiddenKind kind = HiddenKind::LeakyRelu;
};

struct PathSettings {
  PathKind kind = PathKind::Leaky;
  int levels = 1000;
  std::size_t particles = 1000;
  int sweeps_per_level = 1;
};

struct RunSettings {
  ModelSettings model;
  TrainConfig train;
  PathSettings path;
};

/**
 * Overwrites the fields named in `values`. Recognized keys:
 *
 *   hidden, leakiness, hidden_kind (leaky|bernoulli)
 *   cd_steps, learning_rate, momentum, batch_size, epochs,
 *   neg_sampler (cd|leaky|mix), c_start, epsilon, weight_decay,
 *   projection (true|false), learning_rate_decay, update_visible_bias, seed, threads
 *   path (energy|leaky|one-sided), levels, particles, sweeps_per_level
 *
 * Unknown keys and malformed values throw InvalidArgument.
 */
void apply_config(const ConfigMap& values, RunSettings& settings);

PathKind parse_path_kind(std::string_view name);
std::string path_kind_name(PathKind kind);
NegativeSampler parse_negative_sampler(std::string_view name);
std::string negative_sampler_name(NegativeSampler sampler);
HiddenKind parse_hidden_kind(std::string_view name);
std::string hidden_kind_name(HiddenKind kind);

/// FNV-1a over a canonical rendering of the training configuration.
std::uint64_t config_hash(const TrainConfig& config);

}  // namespace lrbm
