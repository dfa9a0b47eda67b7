#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "fine/dataset.hpp"
#include "fine/detector.hpp"

namespace fine::io {

// Feature file, little-endian:
//   magic "FINEF" | u16 version | u32 n | u32 d | u32 k | u16 flags
//   n*d f32 features (row-major) | n u32 observed labels | [n u32 true labels]
// flags bit 0: true labels present.
inline constexpr std::string_view kFeatureMagic = "FINEF";
inline constexpr std::uint16_t kFeatureVersion = 1;
inline constexpr std::size_t kFeatureHeaderSize = 5 + 2 + 4 + 4 + 4 + 2;
inline constexpr std::uint16_t kFlagTrueLabels = 1;

/// Features are narrowed to float32 here; everything in memory is double.
std::vector<std::uint8_t> encode_features(const Dataset& dataset);
Dataset decode_features(std::span<const std::uint8_t> bytes);

void write_features(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_features(const std::filesystem::path& path);

// Selection file: one 21-byte record per sample,
//   u32 index | f64 fine_score | f64 clean_prob | u8 clean
inline constexpr std::size_t kSelectionRecordSize = 4 + 8 + 8 + 1;

struct SelectionRecord {
  std::uint32_t index = 0;
  double fine_score = 0.0;
  double clean_prob = 0.0;
  bool clean = false;

  bool operator==(const SelectionRecord&) const = default;
};

std::vector<std::uint8_t> encode_selection(const SelectionResult& result);
std::vector<SelectionRecord> decode_selection(std::span<const std::uint8_t> bytes);

void write_selection(const SelectionResult& result, const std::filesystem::path& path);
std::vector<SelectionRecord> read_selection(const std::filesystem::path& path);

/// CSV with header "f0,...,f{d-1},label[,true_label]".
Dataset read_csv_features(const std::filesystem::path& path, bool has_true_labels);
Dataset parse_csv_features(std::string_view text, bool has_true_labels);
void write_csv_features(const Dataset& dataset, const std::filesystem::path& path);

/// Shortest round-tripping decimal text for a double ("inf"/"-inf"/"nan" for
/// non-finite values).
std::string format_double(double value);

/// Minimal CSV table writer: header row, '.' decimals, '\n' line ends.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(const std::vector<double>& values);

  std::size_t rows() const noexcept { return rows_.size(); }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace fine::io
