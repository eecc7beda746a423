#include "lrbm/config.hpp"

#include "lrbm/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace lrbm {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw InvalidArgument("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw InvalidArgument("config key '" + key + "': expected a boolean, got '" + value + "'");
}

}  // namespace

ConfigMap parse_config(std::string_view text, const std::string& source) {
  ConfigMap out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw InvalidArgument(source + ":" + std::to_string(line_no) + ": empty key");
    out[key] = value;
  }
  return out;
}

ConfigMap load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

PathKind parse_path_kind(std::string_view name) {
  if (name == "energy") return PathKind::Energy;
  if (name == "leaky") return PathKind::Leaky;
  if (name == "one-sided") return PathKind::OneSided;
  throw InvalidArgument("unknown path '" + std::string(name) + "' (expected energy, leaky or one-sided)");
}

std::string path_kind_name(PathKind kind) {
  switch (kind) {
    case PathKind::Energy: return "energy";
    case PathKind::Leaky: return "leaky";
    case PathKind::OneSided: return "one-sided";
  }
  return "?";
}

NegativeSampler parse_negative_sampler(std::string_view name) {
  if (name == "cd") return NegativeSampler::CD;
  if (name == "leaky") return NegativeSampler::LeakyAnneal;
  if (name == "mix") return NegativeSampler::Mix;
  throw InvalidArgument("unknown negative sampler '" + std::string(name) + "' (expected cd, leaky or mix)");
}

std::string negative_sampler_name(NegativeSampler sampler) {
  switch (sampler) {
    case NegativeSampler::CD: return "cd";
    case NegativeSampler::LeakyAnneal: return "leaky";
    case NegativeSampler::Mix: return "mix";
  }
  return "?";
}

HiddenKind parse_hidden_kind(std::string_view name) {
  if (name == "leaky") return HiddenKind::LeakyRelu;
  if (name == "bernoulli") return HiddenKind::Bernoulli;
  throw InvalidArgument("unknown hidden kind '" + std::string(name) + "' (expected leaky or bernoulli)");
}

std::string hidden_kind_name(HiddenKind kind) {
  return kind == HiddenKind::LeakyRelu ? "leaky" : "bernoulli";
}

void apply_config(const ConfigMap& values, RunSettings& s) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"hidden", [&](auto& k, auto& v) { s.model.hidden = parse_number<int>(k, v); }},
      {"leakiness", [&](auto& k, auto& v) { s.model.leakiness = parse_number<double>(k, v); }},
      {"hidden_kind", [&](auto&, auto& v) { s.model.kind = parse_hidden_kind(v); }},
      {"cd_steps", [&](auto& k, auto& v) { s.train.cd_steps = parse_number<int>(k, v); }},
      {"learning_rate", [&](auto& k, auto& v) { s.train.learning_rate = parse_number<double>(k, v); }},
      {"momentum", [&](auto& k, auto& v) { s.train.momentum = parse_number<double>(k, v); }},
      {"batch_size", [&](auto& k, auto& v) { s.train.batch_size = parse_number<int>(k, v); }},
      {"epochs", [&](auto& k, auto& v) { s.train.epochs = parse_number<int>(k, v); }},
      {"neg_sampler", [&](auto&, auto& v) { s.train.neg_sampler = parse_negative_sampler(v); }},
      {"c_start", [&](auto& k, auto& v) { s.train.anneal.c_start = parse_number<double>(k, v); }},
      {"epsilon", [&](auto& k, auto& v) { s.train.anneal.epsilon = parse_number<double>(k, v); }},
      {"weight_decay", [&](auto& k, auto& v) { s.train.weight_decay = parse_number<double>(k, v); }},
      {"projection", [&](auto& k, auto& v) { s.train.projection_enabled = parse_bool(k, v); }},
      {"learning_rate_decay", [&](auto& k, auto& v) { s.train.learning_rate_decay = parse_number<double>(k, v); }},
      {"update_visible_bias", [&](auto& k, auto& v) { s.train.update_visible_bias = parse_bool(k, v); }},
      {"seed", [&](auto& k, auto& v) { s.train.seed = parse_number<std::uint64_t>(k, v); }},
      {"threads", [&](auto& k, auto& v) { s.train.threads = parse_number<int>(k, v); }},
      {"path", [&](auto&, auto& v) { s.path.kind = parse_path_kind(v); }},
      {"levels", [&](auto& k, auto& v) { s.path.levels = parse_number<int>(k, v); }},
      {"particles", [&](auto& k, auto& v) { s.path.particles = parse_number<std::size_t>(k, v); }},
      {"sweeps_per_level", [&](auto& k, auto& v) { s.path.sweeps_per_level = parse_number<int>(k, v); }},
  };
  for (const auto& [key, value] : values) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw InvalidArgument("unknown config key '" + key + "'");
    it->second(key, value);
  }
}

std::uint64_t config_hash(const TrainConfig& c) {
  std::ostringstream ss;
  ss.precision(17);
  ss << c.cd_steps << '|' << c.learning_rate << '|' << c.momentum << '|' << c.batch_size << '|' << c.epochs << '|'
     << negative_sampler_name(c.neg_sampler) << '|' << c.anneal.c_start << '|' << c.anneal.epsilon << '|'
     << c.weight_decay << '|' << c.projection_enabled << '|' << c.learning_rate_decay << '|'
     << c.update_visible_bias << '|' << c.seed;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : ss.str()) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace lrbm
