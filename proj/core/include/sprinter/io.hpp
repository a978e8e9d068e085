#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sprinter/errors.hpp"
#include "sprinter/matrix.hpp"
#include "sprinter/pipeline.hpp"
#include "sprinter/screen.hpp"

namespace sprinter {

/// Unreadable or unwritable file.
class FileError : public Error {
 public:
  using Error::Error;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Locale-independent parse of a full token; throws InputError otherwise.
double parse_double(std::string_view token);

struct CsvData {
  std::vector<std::string> header;  // predictor names
  Matrix x;
  std::vector<double> y;            // empty when there is no response column
};

/// Reads a comma-separated table with a header row. The column named `y`
/// (or, when `response_last` is set and no such column exists, the last
/// column) is the response. Ragged rows, empty cells and unparsable or
/// non-finite cells are rejected with the offending line number.
CsvData parse_csv(std::string_view text, bool response_last = true);
CsvData read_csv(const std::string& path, bool response_last = true);

/// Header x1..xp,y; y omitted when empty.
std::string format_csv(MatrixView x, std::span<const double> y);
void write_csv(const std::string& path, MatrixView x, std::span<const double> y);

std::string read_text(const std::string& path);
void write_text(const std::string& path, std::string_view text);

struct Provenance {
  std::uint64_t seed = 0;
  std::string config_hash;              // 16 hex digits
  std::optional<std::string> created;   // ISO-8601 UTC, only when requested
};

/// 64-bit FNV-1a digest as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

/// Canonical text of every tuning setting that influences a fit.
std::string config_fingerprint(const SprinterConfig& cfg, std::string_view family);

/// Current UTC time as YYYY-MM-DDThh:mm:ssZ.
std::string utc_timestamp();

constexpr int kModelFormatVersion = 1;

struct ModelFile {
  int format_version = kModelFormatVersion;
  LinearModel model;
  std::string family;  // gaussian, binomial, poisson or ordinal
  bool degenerate = false;
  double lambda1 = 0.0;
  double lambda4 = 0.0;
  Provenance provenance;
};

std::string model_to_json(const ModelFile& m);
ModelFile model_from_json(std::string_view text);
void save_model(const std::string& path, const ModelFile& m);
ModelFile load_model(const std::string& path);

/// a,b,gamma_hat rows (0-based column indices) in selection order.
std::string format_screen_csv(const ScreenResult& screen);

/// One column `mean`, or prob_1..prob_K for ordinal models.
std::string format_predictions(const ModelFile& m, MatrixView x);

}  // namespace sprinter
