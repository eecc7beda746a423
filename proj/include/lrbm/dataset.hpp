#pragma once

#include "lrbm/model.hpp"

#include <filesystem>
#include <optional>
#include <string_view>

namespace lrbm {

/// raw-f32: "LRBD" magic, uint64 N, uint64 I (little-endian), then N*I
/// row-major float32. csv: numeric rows, no header.
enum class DataFormat { RawF32, Csv };

DataFormat parse_data_format(std::string_view name);

struct Normalization {
  Vector mean;
  /// Population standard deviation; constant columns store 1.
  Vector std;
};

struct Dataset {
  Matrix matrix;
  Normalization normalization;
};

Normalization compute_normalization(const Matrix& data);
Matrix apply_normalization(const Matrix& data, const Normalization& norm);
/// Inverse of apply_normalization().
Matrix undo_normalization(const Matrix& data, const Normalization& norm);

/// Reads a matrix without transforming it. Throws IoError with a line or
/// byte-offset diagnostic on malformed input.
Matrix read_matrix(const std::filesystem::path& path, DataFormat format);

void write_matrix(const std::filesystem::path& path, const Matrix& data, DataFormat format);

/**
 * Loads `path` and standardizes each column. With `stored`, those statistics
 * are applied instead of freshly computed ones.
 */
Dataset ingest(const std::filesystem::path& path, DataFormat format,
               const std::optional<Normalization>& stored = std::nullopt);

/// Two-row CSV: means then standard deviations.
void write_normalization(const std::filesystem::path& path, const Normalization& norm);
Normalization read_normalization(const std::filesystem::path& path);

}  // namespace lrbm
