#include "lrbm/model_io.hpp"

#include "lrbm/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lrbm {

namespace {

class Writer {
 public:
  void bytes(const char* p, std::size_t n) { out_.append(p, n); }
  template <typename T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  template <typename T>
  T uint(const char* field) {
    need(sizeof(T), field);
    T v = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) {
      v = static_cast<T>((v << 8) | static_cast<unsigned char>(bytes_[pos_ + i]));
    }
    pos_ += sizeof(T);
    return v;
  }
  double f64(const char* field) { return std::bit_cast<double>(uint<std::uint64_t>(field)); }
  void expect(const char* magic, std::size_t n) {
    need(n, "magic");
    if (std::memcmp(bytes_.data() + pos_, magic, n) != 0) {
      throw IoError(source_ + ": not a model file (bad magic at offset 0)");
    }
    pos_ += n;
  }
  void finish() const {
    if (pos_ != bytes_.size()) {
      throw IoError(source_ + ": " + std::to_string(bytes_.size() - pos_) + " trailing bytes after model");
    }
  }

 private:
  void need(std::size_t n, const char* field) const {
    if (pos_ + n > bytes_.size()) {
      throw IoError(source_ + ": truncated while reading " + field + " at offset " + std::to_string(pos_));
    }
  }

  const std::string& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_model(const RbmParams& params, const Provenance& provenance) {
  Writer w;
  w.bytes("LRBM", 4);
  w.uint<std::uint32_t>(kModelFormatVersion);
  w.uint<std::uint8_t>(static_cast<std::uint8_t>(params.kind()));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(params.num_visible()));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(params.num_hidden()));
  w.f64(params.leakiness());
  for (Eigen::Index i = 0; i < params.num_visible(); ++i) {
    for (Eigen::Index j = 0; j < params.num_hidden(); ++j) w.f64(params.weights()(i, j));
  }
  for (Eigen::Index i = 0; i < params.num_visible(); ++i) w.f64(params.visible_bias()(i));
  for (Eigen::Index j = 0; j < params.num_hidden(); ++j) w.f64(params.hidden_bias()(j));
  w.uint<std::uint64_t>(provenance.config_hash);
  w.uint<std::uint64_t>(provenance.seed);
  w.uint<std::uint32_t>(provenance.epoch);
  return w.take();
}

ModelFile decode_model(const std::string& bytes, const std::string& source) {
  Reader r(bytes, source);
  r.expect("LRBM", 4);
  const auto version = r.uint<std::uint32_t>("format_version");
  if (version != kModelFormatVersion) {
    throw IoError(source + ": unsupported model format version " + std::to_string(version));
  }
  const auto kind_byte = r.uint<std::uint8_t>("hidden_kind");
  if (kind_byte > 1) throw IoError(source + ": unknown hidden kind " + std::to_string(kind_byte));
  const auto rows = r.uint<std::uint32_t>("I");
  const auto cols = r.uint<std::uint32_t>("J");
  const double c = r.f64("c");
  Matrix w(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) w(i, j) = r.f64("W");
  }
  Vector a(rows);
  for (std::uint32_t i = 0; i < rows; ++i) a(i) = r.f64("a");
  Vector b(cols);
  for (std::uint32_t j = 0; j < cols; ++j) b(j) = r.f64("b");
  Provenance prov;
  prov.config_hash = r.uint<std::uint64_t>("config_hash");
  prov.seed = r.uint<std::uint64_t>("seed");
  prov.epoch = r.uint<std::uint32_t>("epoch");
  r.finish();
  try {
    return {RbmParams(std::move(w), std::move(a), std::move(b), c, static_cast<HiddenKind>(kind_byte)), prov};
  } catch (const Error& e) {
    throw IoError(source + ": invalid model parameters: " + e.what());
  }
}

void save_model(const std::filesystem::path& path, const RbmParams& params, const Provenance& provenance) {
  const std::string bytes = encode_model(params, provenance);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing model file " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("model file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_model(ss.str(), path.string());
}

}  // namespace lrbm
