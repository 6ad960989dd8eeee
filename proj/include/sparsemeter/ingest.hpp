#pragma once

// Activation interchange files and interpretation reports.
//
// Binary layout (all integers and floats little-endian):
//
//   offset  size  field
//   0       4     magic "ACTV"
//   4       4     u32 version (1)
//   8       4     u32 dtype (1 = float32)
//   12      8     u64 n
//   20      8     u64 d
//   28      4*n*d row-major float32 payload
//
// Optional siblings: "<path>.labels" (UTF-8, one label per line) and
// "<path>.meta.json" (flat JSON object; unknown keys are preserved).

#include "sparsemeter/core.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsemeter {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kActivationMagic[4] = {'A', 'C', 'T', 'V'};
inline constexpr std::uint32_t kActivationVersion = 1;
inline constexpr std::uint32_t kDtypeFloat32 = 1;
inline constexpr std::size_t kActivationHeaderSize = 28;

std::filesystem::path labels_path(const std::filesystem::path& path);
std::filesystem::path metadata_path(const std::filesystem::path& path);

/// Encodes the header and float32 payload (labels are not part of the byte stream).
std::vector<std::uint8_t> encode_activations(const RowMatrix& data);
RowMatrix decode_activations(const std::vector<std::uint8_t>& bytes);

/// Writes the binary file, the label sibling (if labeled; removes a stale one
/// otherwise), and the metadata sibling when `metadata` is a non-empty object.
/// Every file is written to a temporary name and renamed into place.
void write_activations(const std::filesystem::path& path, const ActivationSet& x,
                       const nlohmann::json& metadata = nlohmann::json::object());

ActivationSet read_activations(const std::filesystem::path& path);

/// Sidecar metadata, or an empty object when there is none.
nlohmann::json read_metadata(const std::filesystem::path& path);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

/// Dictionaries are stored as activation files with one feature per row (m x d).
void write_dictionary(const std::filesystem::path& path, const Dictionary& phi);
/// Re-normalizes columns after the float32 round trip.
Dictionary read_dictionary(const std::filesystem::path& path);

/// Sparse triplet text:
///   sparse_coefficients 1 <m> <n> <nnz>
///   <column> <feature> <value>      (one line per stored entry)
void write_coefficients(const std::filesystem::path& path, const CoefficientSet& alpha);
CoefficientSet read_coefficients(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Interpretation reports

/// How "maximally activating" tokens are ranked for a feature.
enum class ActivationRanking { coefficient, dot_product };

struct TokenActivation {
  std::string label;
  Index row = 0;
  double value = 0.0;
};

struct ReportedFeature {
  Index feature = 0;
  double coefficient = 0.0;
  std::vector<TokenActivation> top_tokens;
};

struct FeatureReport {
  std::string query;
  std::vector<ReportedFeature> features;  ///< coefficient descending

  nlohmann::json to_json() const;
};

/// Decomposes the query token's activation, keeps its `k_features` largest
/// coefficients, and lists for each such feature the `k_tokens` rows of `x`
/// that activate it most. Ties break by ascending index.
FeatureReport feature_report(const Dictionary& phi, const ActivationSet& x, double lambda, const std::string& token,
                             Index k_features = 3, Index k_tokens = 20,
                             ActivationRanking ranking = ActivationRanking::coefficient);

struct NearestToken {
  std::string label;
  Index row = 0;
  double cosine = 0.0;
};

/// The `k` rows most cosine-similar to the query token's row (the query row itself excluded).
std::vector<NearestToken> nearest_embedding_report(const ActivationSet& x, const std::string& token, Index k = 30);

}  // namespace sparsemeter
