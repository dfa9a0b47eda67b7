#include "fine/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "fine/error.hpp"

namespace fine::io {
namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }

  void put_bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    need(sizeof(U));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(static_cast<U>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }

  std::span<const std::uint8_t> get_bytes(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(ErrorCode::TruncatedFile, "unexpected end of data");
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t value, const char* what) {
  if (value > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " does not fit in 32 bits");
  }
  return static_cast<std::uint32_t>(value);
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  while (true) {
    const auto comma = line.find(',');
    cells.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return cells;
}

}  // namespace

std::vector<std::uint8_t> encode_features(const Dataset& dataset) {
  dataset.validate();
  const std::size_t n = dataset.size();
  std::vector<std::uint8_t> out;
  out.reserve(kFeatureHeaderSize + 4 * n * (dataset.dim + 2));
  Writer w(out);
  w.put_bytes(kFeatureMagic);
  w.put(kFeatureVersion);
  w.put(checked_u32(n, "sample count"));
  w.put(checked_u32(dataset.dim, "dimension"));
  w.put(checked_u32(dataset.num_classes, "class count"));
  w.put(static_cast<std::uint16_t>(dataset.true_labels ? kFlagTrueLabels : 0));
  for (double f : dataset.features) w.put(static_cast<float>(f));
  for (Label l : dataset.observed_labels) w.put(l);
  if (dataset.true_labels) {
    for (Label l : *dataset.true_labels) w.put(l);
  }
  return out;
}

Dataset decode_features(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFeatureHeaderSize) throw Error(ErrorCode::TruncatedFile, "feature file shorter than its header");
  Reader r(bytes);
  const auto magic = r.get_bytes(kFeatureMagic.size());
  if (std::memcmp(magic.data(), kFeatureMagic.data(), kFeatureMagic.size()) != 0) {
    throw Error(ErrorCode::FormatError, "bad magic, not a FINEF feature file");
  }
  const auto version = r.get<std::uint16_t>();
  if (version != kFeatureVersion) {
    throw Error(ErrorCode::FormatError, "unsupported feature file version " + std::to_string(version));
  }
  const auto n = r.get<std::uint32_t>();
  const auto d = r.get<std::uint32_t>();
  const auto k = r.get<std::uint32_t>();
  const auto flags = r.get<std::uint16_t>();
  if ((flags & ~kFlagTrueLabels) != 0) throw Error(ErrorCode::FormatError, "unknown flag bits set");
  if (d == 0) throw Error(ErrorCode::FormatError, "dimension 0");
  const bool has_true = (flags & kFlagTrueLabels) != 0;
  const std::uint64_t payload = 4ull * n * d + 4ull * n * (has_true ? 2 : 1);
  if (r.remaining() < payload) throw Error(ErrorCode::TruncatedFile, "payload shorter than header declares");
  if (r.remaining() > payload) throw Error(ErrorCode::FormatError, "trailing bytes after payload");

  Dataset ds;
  ds.dim = d;
  ds.num_classes = k;
  ds.features.resize(static_cast<std::size_t>(n) * d);
  for (auto& f : ds.features) f = static_cast<double>(r.get<float>());
  ds.observed_labels.resize(n);
  for (auto& l : ds.observed_labels) l = r.get<std::uint32_t>();
  if (has_true) {
    ds.true_labels.emplace(n);
    for (auto& l : *ds.true_labels) l = r.get<std::uint32_t>();
  }
  auto check = [&](const std::vector<Label>& labels) {
    for (Label l : labels) {
      if (l >= k) throw Error(ErrorCode::CorruptLabels, "label " + std::to_string(l) + " >= k = " + std::to_string(k));
    }
  };
  check(ds.observed_labels);
  if (ds.true_labels) check(*ds.true_labels);
  for (double f : ds.features) {
    if (!std::isfinite(f)) throw Error(ErrorCode::FormatError, "non-finite feature value");
  }
  return ds;
}

void write_features(const Dataset& dataset, const std::filesystem::path& path) {
  write_file(path, encode_features(dataset));
}

Dataset read_features(const std::filesystem::path& path) { return decode_features(read_file(path)); }

std::vector<std::uint8_t> encode_selection(const SelectionResult& result) {
  const std::size_t n = result.fine_scores.size();
  if (result.clean_prob.size() != n || result.clean_mask.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "selection result arrays differ in length");
  }
  std::vector<std::uint8_t> out;
  out.reserve(n * kSelectionRecordSize);
  Writer w(out);
  for (std::size_t i = 0; i < n; ++i) {
    w.put(checked_u32(i, "sample index"));
    w.put(result.fine_scores[i]);
    w.put(result.clean_prob[i]);
    w.put(static_cast<std::uint8_t>(result.clean_mask[i] ? 1 : 0));
  }
  return out;
}

std::vector<SelectionRecord> decode_selection(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kSelectionRecordSize != 0) {
    throw Error(ErrorCode::TruncatedFile, "selection file length is not a whole number of records");
  }
  Reader r(bytes);
  std::vector<SelectionRecord> out(bytes.size() / kSelectionRecordSize);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& rec = out[i];
    rec.index = r.get<std::uint32_t>();
    if (rec.index != i) throw Error(ErrorCode::FormatError, "selection indices must run 0..N-1 in order");
    rec.fine_score = r.get<double>();
    rec.clean_prob = r.get<double>();
    const auto flag = r.get<std::uint8_t>();
    if (flag > 1) throw Error(ErrorCode::FormatError, "clean flag must be 0 or 1");
    rec.clean = flag == 1;
  }
  return out;
}

void write_selection(const SelectionResult& result, const std::filesystem::path& path) {
  write_file(path, encode_selection(result));
}

std::vector<SelectionRecord> read_selection(const std::filesystem::path& path) {
  return decode_selection(read_file(path));
}

Dataset parse_csv_features(std::string_view text, bool has_true_labels) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = trim_cr(text.substr(0, nl));
    if (!line.empty()) lines.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  if (lines.empty()) throw Error(ErrorCode::FormatError, "CSV has no header");

  const auto header = split_commas(lines.front());
  const std::size_t label_cols = has_true_labels ? 2 : 1;
  if (header.size() < label_cols + 1) throw Error(ErrorCode::FormatError, "CSV header has no feature columns");
  const std::size_t d = header.size() - label_cols;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "f" + std::to_string(j)) {
      throw Error(ErrorCode::FormatError, "CSV column " + std::to_string(j) + " should be named f" + std::to_string(j));
    }
  }
  if (header[d] != "label" || (has_true_labels && header[d + 1] != "true_label")) {
    throw Error(ErrorCode::FormatError, "CSV header must end with label" +
                                            std::string(has_true_labels ? ",true_label" : ""));
  }

  Dataset ds;
  ds.dim = d;
  if (has_true_labels) ds.true_labels.emplace();
  std::size_t max_label = 0;
  auto parse_label = [&](std::string_view cell, std::size_t line_no) {
    Label value = 0;
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
    if (cell.empty() || ec != std::errc{} || ptr != end) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad label '" + std::string(cell) + "'");
    }
    max_label = std::max<std::size_t>(max_label, value);
    return value;
  };
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto cells = split_commas(lines[li]);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::FormatError, "line " + std::to_string(li + 1) + " has " + std::to_string(cells.size()) +
                                              " cells, header has " + std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      double value = 0.0;
      const auto cell = cells[j];
      const auto* end = cell.data() + cell.size();
      const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
      if (cell.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(li + 1) + ": bad feature value '" +
                                               std::string(cell) + "'");
      }
      ds.features.push_back(value);
    }
    ds.observed_labels.push_back(parse_label(cells[d], li + 1));
    if (has_true_labels) ds.true_labels->push_back(parse_label(cells[d + 1], li + 1));
  }
  ds.num_classes = ds.empty() ? 0 : max_label + 1;
  return ds;
}

Dataset read_csv_features(const std::filesystem::path& path, bool has_true_labels) {
  const auto bytes = read_file(path);
  return parse_csv_features(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                            has_true_labels);
}

void write_csv_features(const Dataset& dataset, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t j = 0; j < dataset.dim; ++j) out += "f" + std::to_string(j) + ",";
  out += dataset.true_labels ? "label,true_label\n" : "label\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double f : dataset.row(i)) out += format_double(f) + ",";
    out += std::to_string(dataset.observed_labels[i]);
    if (dataset.true_labels) out += "," + std::to_string((*dataset.true_labels)[i]);
    out += '\n';
  }
  write_text(path, out);
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void CsvTable::add_row(const std::vector<double>& values) {
  if (values.size() != header_.size()) throw Error(ErrorCode::LengthMismatch, "CSV row width differs from header");
  rows_.push_back(values);
}

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t j = 0; j < header_.size(); ++j) out += (j ? "," : "") + header_[j];
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t j = 0; j < row.size(); ++j) out += (j ? "," : "") + format_double(row[j]);
    out += '\n';
  }
  return out;
}

void CsvTable::write(const std::filesystem::path& path) const { write_text(path, str()); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace fine::io
