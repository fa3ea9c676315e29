#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "divkit/rng.hpp"

namespace divkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Json = nlohmann::json;

/// n x d sample embeddings, one row per sample in load order. Immutable.
class EmbeddingSet {
 public:
  /// Throws EmptySet for n == 0 or d == 0 and NonFiniteEntry on NaN/Inf.
  explicit EmbeddingSet(Matrix data, std::string label = {});

  const Matrix& data() const noexcept { return data_; }
  Eigen::Index n() const noexcept { return data_.rows(); }
  Eigen::Index d() const noexcept { return data_.cols(); }
  const std::string& label() const noexcept { return label_; }
  auto row(Eigen::Index i) const { return data_.row(i); }

 private:
  Matrix data_;
  std::string label_;
};

enum class EmbeddingFormat { csv, binary };

EmbeddingFormat parse_format(std::string_view name);
/// csv unless the extension is .emb/.bin/.gram.
EmbeddingFormat format_from_extension(const std::filesystem::path& path);

EmbeddingSet load_embeddings(const std::filesystem::path& path, EmbeddingFormat format);
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path, EmbeddingFormat format);

/// Binary container: 4-byte magic, u32 version = 1, u64 rows, u64 cols, then
/// rows*cols little-endian float64 values in row-major order.
inline constexpr std::string_view kEmbeddingMagic = "EMBD";
inline constexpr std::string_view kGramMagic = "GRAM";

Matrix read_matrix_binary(const std::filesystem::path& path, std::string_view magic);
void write_matrix_binary(const Matrix& m, const std::filesystem::path& path, std::string_view magic);

/// m rows drawn uniformly without replacement (partial Fisher-Yates).
EmbeddingSet subsample(const EmbeddingSet& x, Eigen::Index m, const RunSeed& seed);
std::vector<Eigen::Index> sample_without_replacement(Eigen::Index n, Eigen::Index m, const RunSeed& seed);

enum class RecordKind { score, curve, projection, guidance, bias };

const char* to_string(RecordKind kind) noexcept;
RecordKind parse_record_kind(std::string_view name);

struct ResultRecord {
  RecordKind kind = RecordKind::score;
  Json payload = Json::object();
  std::string config_hash;
  std::int64_t timestamp = 0;

  Json to_json() const;
  static ResultRecord from_json(const Json& j);

  friend bool operator==(const ResultRecord& a, const ResultRecord& b) {
    return a.kind == b.kind && a.config_hash == b.config_hash && a.timestamp == b.timestamp &&
           a.payload == b.payload;
  }
};

/// Canonical JSON: keys sorted, no whitespace, floats with 17 significant
/// digits. Non-finite floats are rejected.
std::string canonical_dump(const Json& j);

/// 16 hex digits of FNV-1a 64 over canonical_dump(config).
std::string config_hash(const Json& config);

void save_record(const ResultRecord& record, const std::filesystem::path& path);
ResultRecord load_record(const std::filesystem::path& path);

/// Whitespace-separated columns with a '#' header naming them.
void write_plot_data(const std::filesystem::path& path, const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows);

void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace divkit
