#include "lrbm/dataset.hpp"

#include "lrbm/error.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace lrbm {

namespace {

constexpr std::array<char, 4> kDataMagic{'L', 'R', 'B', 'D'};

std::uint64_t read_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Matrix parse_raw_f32(const std::string& bytes, const std::filesystem::path& path) {
  if (bytes.size() < 20) {
    throw IoError(path.string() + ": truncated header (" + std::to_string(bytes.size()) + " bytes, need 20)");
  }
  if (std::memcmp(bytes.data(), kDataMagic.data(), 4) != 0) {
    throw IoError(path.string() + ": bad magic at offset 0 (expected \"LRBD\")");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t rows = read_u64_le(p + 4);
  const std::uint64_t cols = read_u64_le(p + 12);
  const std::uint64_t expected = 20 + 4 * rows * cols;
  if (bytes.size() != expected) {
    throw IoError(path.string() + ": header declares " + std::to_string(rows) + "x" + std::to_string(cols) +
                  " floats (" + std::to_string(expected) + " bytes), file has " + std::to_string(bytes.size()));
  }
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t offset = 20;
  for (std::uint64_t r = 0; r < rows; ++r) {
    for (std::uint64_t c = 0; c < cols; ++c, offset += 4) {
      std::uint32_t bits = 0;
      for (int i = 3; i >= 0; --i) bits = (bits << 8) | p[offset + i];
      float f;
      std::memcpy(&f, &bits, 4);
      if (!std::isfinite(f)) {
        throw IoError(path.string() + ": non-finite value at byte offset " + std::to_string(offset));
      }
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = f;
    }
  }
  return out;
}

Matrix parse_csv(const std::string& text, const std::filesystem::path& path) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    std::size_t field = 1;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      const auto first = cell.find_first_not_of(" \t");
      const auto last = cell.find_last_not_of(" \t");
      cell = first == std::string::npos ? "" : cell.substr(first, last - first + 1);
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": field " + std::to_string(field) +
                      " is not a finite number: '" + cell + "'");
      }
      row.push_back(value);
      if (comma == std::string::npos) break;
      pos = comma + 1;
      ++field;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(rows.front().size()) + " fields, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path.string() + ": no data rows");
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return out;
}

void write_csv_rows(std::ostream& out, const Matrix& data) {
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      if (c > 0) out << ',';
      out << data(r, c);
    }
    out << '\n';
  }
}

}  // namespace

DataFormat parse_data_format(std::string_view name) {
  if (name == "raw-f32") return DataFormat::RawF32;
  if (name == "csv") return DataFormat::Csv;
  throw InvalidArgument("unknown data format '" + std::string(name) + "' (expected raw-f32 or csv)");
}

Normalization compute_normalization(const Matrix& data) {
  Normalization norm;
  norm.mean = data.colwise().mean().transpose();
  norm.std.resize(data.cols());
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const double var = (data.col(c).array() - norm.mean(c)).square().mean();
    const double sd = std::sqrt(var);
    norm.std(c) = sd > 1e-12 * std::max(1.0, std::abs(norm.mean(c))) ? sd : 1.0;
  }
  return norm;
}

Matrix apply_normalization(const Matrix& data, const Normalization& norm) {
  if (norm.mean.size() != data.cols() || norm.std.size() != data.cols()) {
    throw DimensionError("normalization has " + std::to_string(norm.mean.size()) + " columns, data has " +
                         std::to_string(data.cols()));
  }
  Matrix out = data.rowwise() - norm.mean.transpose();
  return out.array().rowwise() / norm.std.transpose().array();
}

Matrix undo_normalization(const Matrix& data, const Normalization& norm) {
  if (norm.mean.size() != data.cols() || norm.std.size() != data.cols()) {
    throw DimensionError("normalization has " + std::to_string(norm.mean.size()) + " columns, data has " +
                         std::to_string(data.cols()));
  }
  Matrix out = data.array().rowwise() * norm.std.transpose().array();
  return out.rowwise() + norm.mean.transpose();
}

Matrix read_matrix(const std::filesystem::path& path, DataFormat format) {
  const std::string bytes = read_file(path);
  return format == DataFormat::RawF32 ? parse_raw_f32(bytes, path) : parse_csv(bytes, path);
}

void write_matrix(const std::filesystem::path& path, const Matrix& data, DataFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  if (format == DataFormat::Csv) {
    write_csv_rows(out, data);
  } else {
    std::string bytes(kDataMagic.begin(), kDataMagic.end());
    put_u64_le(bytes, static_cast<std::uint64_t>(data.rows()));
    put_u64_le(bytes, static_cast<std::uint64_t>(data.cols()));
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
      for (Eigen::Index c = 0; c < data.cols(); ++c) {
        const auto f = static_cast<float>(data(r, c));
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xffU));
      }
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Dataset ingest(const std::filesystem::path& path, DataFormat format, const std::optional<Normalization>& stored) {
  if (!std::filesystem::exists(path)) throw IoError("data file not found: " + path.string());
  Matrix raw = read_matrix(path, format);
  Dataset out;
  out.normalization = stored ? *stored : compute_normalization(raw);
  out.matrix = apply_normalization(raw, out.normalization);
  return out;
}

void write_normalization(const std::filesystem::path& path, const Normalization& norm) {
  Matrix m(2, norm.mean.size());
  m.row(0) = norm.mean.transpose();
  m.row(1) = norm.std.transpose();
  write_matrix(path, m, DataFormat::Csv);
}

Normalization read_normalization(const std::filesystem::path& path) {
  const Matrix m = read_matrix(path, DataFormat::Csv);
  if (m.rows() != 2) throw IoError(path.string() + ": normalization file must have exactly 2 rows");
  Normalization norm{m.row(0).transpose(), m.row(1).transpose()};
  if ((norm.std.array() <= 0.0).any()) throw IoError(path.string() + ": standard deviations must be positive");
  return norm;
}

}  // namespace lrbm
