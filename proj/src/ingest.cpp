#include "sparsemeter/ingest.hpp"

#include "sparsemeter/solver.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <unistd.h>

namespace sparsemeter {

namespace fs = std::filesystem;

namespace {

static_assert(std::numeric_limits<float>::is_iec559, "float32 payload requires IEEE-754 floats");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(p[k]) << (8 * k);
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(p[k]) << (8 * k);
  return v;
}

fs::path temp_sibling(const fs::path& path) {
  static std::atomic<unsigned> counter{0};
  fs::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  return tmp;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_bytes_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

std::vector<std::string> parse_labels(const std::string& text) {
  std::vector<std::string> labels;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string::npos) {
      labels.push_back(text.substr(start));
      break;
    }
    labels.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return labels;
}

const std::string& query_label(const ActivationSet& x, const std::string& token, Index& row) {
  if (!x.has_labels()) throw InvalidArgument("activation set has no labels");
  const auto& labels = *x.labels();
  const auto it = std::find(labels.begin(), labels.end(), token);
  if (it == labels.end()) throw InvalidArgument("token '" + token + "' not found among labels");
  row = static_cast<Index>(it - labels.begin());
  return *it;
}

// Indices of the k largest values (descending, ties by ascending index).
std::vector<Index> top_k(const std::vector<std::pair<Index, double>>& candidates, Index k,
                         std::vector<std::pair<Index, double>>& out) {
  out = candidates;
  const auto by_value = [](const auto& a, const auto& b) {
    return a.second > b.second || (a.second == b.second && a.first < b.first);
  };
  const auto keep = std::min<std::size_t>(out.size(), static_cast<std::size_t>(std::max<Index>(k, 0)));
  std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(keep), out.end(), by_value);
  out.resize(keep);
  std::vector<Index> idx;
  for (const auto& [i, v] : out) idx.push_back(i);
  return idx;
}

}  // namespace

fs::path labels_path(const fs::path& path) {
  fs::path p = path;
  p += ".labels";
  return p;
}

fs::path metadata_path(const fs::path& path) {
  fs::path p = path;
  p += ".meta.json";
  return p;
}

std::vector<std::uint8_t> encode_activations(const RowMatrix& data) {
  std::vector<std::uint8_t> out;
  const auto count = static_cast<std::size_t>(data.size());
  out.reserve(kActivationHeaderSize + 4 * count);
  out.insert(out.end(), std::begin(kActivationMagic), std::end(kActivationMagic));
  put_u32(out, kActivationVersion);
  put_u32(out, kDtypeFloat32);
  put_u64(out, static_cast<std::uint64_t>(data.rows()));
  put_u64(out, static_cast<std::uint64_t>(data.cols()));
  for (Index j = 0; j < data.rows(); ++j)
    for (Index k = 0; k < data.cols(); ++k) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(data(j, k))));
  return out;
}

RowMatrix decode_activations(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kActivationHeaderSize)
    throw FormatError("truncated activation file: " + std::to_string(bytes.size()) + " bytes, header needs " +
                      std::to_string(kActivationHeaderSize));
  if (std::memcmp(bytes.data(), kActivationMagic, 4) != 0) throw FormatError("bad magic: not an ACTV file");
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kActivationVersion) throw FormatError("unsupported activation file version " + std::to_string(version));
  const std::uint32_t dtype = get_u32(bytes.data() + 8);
  if (dtype != kDtypeFloat32) throw FormatError("unsupported activation dtype " + std::to_string(dtype));
  const std::uint64_t n = get_u64(bytes.data() + 12);
  const std::uint64_t d = get_u64(bytes.data() + 20);
  if (n == 0 || d == 0) throw FormatError("activation file declares an empty matrix");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / 4;
  if (n > limit / d) throw FormatError("activation file header overflows (n * d too large)");
  const std::uint64_t payload = 4 * n * d;
  const std::uint64_t available = bytes.size() - kActivationHeaderSize;
  if (available < payload)
    throw FormatError("truncated activation payload: expected " + std::to_string(payload) + " bytes, found " +
                      std::to_string(available));
  if (available > payload) throw FormatError("activation file has " + std::to_string(available - payload) +
                                             " unexpected trailing bytes");
  RowMatrix data(static_cast<Index>(n), static_cast<Index>(d));
  const std::uint8_t* p = bytes.data() + kActivationHeaderSize;
  for (Index j = 0; j < data.rows(); ++j)
    for (Index k = 0; k < data.cols(); ++k, p += 4) data(j, k) = std::bit_cast<float>(get_u32(p));
  return data;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size)))
    throw FormatError("failed reading " + path.string());
  return bytes;
}

void write_bytes_atomic(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  const fs::path tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw FormatError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw FormatError("cannot move temporary file into place at " + path.string());
  }
}

void write_activations(const fs::path& path, const ActivationSet& x, const nlohmann::json& metadata) {
  if (!metadata.is_object()) throw InvalidArgument("activation metadata must be a JSON object");
  if (x.has_labels()) {
    std::string text;
    for (const auto& label : *x.labels()) {
      if (label.find_first_of("\r\n") != std::string::npos)
        throw InvalidArgument("labels may not contain line breaks: '" + label + "'");
      text += label;
      text += '\n';
    }
    write_text_atomic(labels_path(path), text);
  } else {
    std::error_code ignored;
    fs::remove(labels_path(path), ignored);
  }
  if (!metadata.empty()) write_text_atomic(metadata_path(path), metadata.dump(2) + "\n");
  write_bytes_atomic(path, encode_activations(x.data()));
}

ActivationSet read_activations(const fs::path& path) {
  RowMatrix data = decode_activations(read_bytes(path));
  std::optional<std::vector<std::string>> labels;
  if (fs::exists(labels_path(path))) {
    labels = parse_labels(read_text(labels_path(path)));
    if (static_cast<Index>(labels->size()) != data.rows())
      throw FormatError("label count mismatch: " + std::to_string(labels->size()) + " labels for " +
                        std::to_string(data.rows()) + " rows");
  }
  if (!data.allFinite()) throw FormatError("activation payload contains non-finite values");
  return ActivationSet(std::move(data), std::move(labels));
}

nlohmann::json read_metadata(const fs::path& path) {
  const fs::path meta = metadata_path(path);
  if (!fs::exists(meta)) return nlohmann::json::object();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(meta));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("invalid metadata JSON in " + meta.string() + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError("metadata in " + meta.string() + " is not a JSON object");
  return j;
}

void write_dictionary(const fs::path& path, const Dictionary& phi) {
  RowMatrix rows = phi.features().transpose();
  write_activations(path, ActivationSet(std::move(rows)), nlohmann::json{{"kind", "dictionary"}});
}

Dictionary read_dictionary(const fs::path& path) {
  const ActivationSet rows = read_activations(path);
  return normalize_dictionary(rows.data().transpose());
}

void write_coefficients(const fs::path& path, const CoefficientSet& alpha) {
  std::ostringstream out;
  out.precision(17);
  out << "sparse_coefficients 1 " << alpha.m() << ' ' << alpha.n() << ' ' << alpha.nonzeros() << '\n';
  const auto& s = alpha.matrix();
  for (Index j = 0; j < s.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(s, j); it; ++it) out << j << ' ' << it.index() << ' ' << it.value() << '\n';
  write_text_atomic(path, out.str());
}

CoefficientSet read_coefficients(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string tag;
  int version = 0;
  Index m = 0, n = 0, nnz = 0;
  if (!(in >> tag >> version >> m >> n >> nnz) || tag != "sparse_coefficients")
    throw FormatError("bad coefficient file header in " + path.string());
  if (version != 1) throw FormatError("unsupported coefficient file version " + std::to_string(version));
  std::vector<std::vector<CoefficientEntry>> columns(static_cast<std::size_t>(n));
  for (Index k = 0; k < nnz; ++k) {
    Index j = 0, i = 0;
    double v = 0.0;
    if (!(in >> j >> i >> v)) throw FormatError("truncated coefficient file " + path.string());
    if (j < 0 || j >= n) throw FormatError("coefficient column index out of range");
    columns[static_cast<std::size_t>(j)].push_back({i, v});
  }
  try {
    return CoefficientSet::from_columns(m, columns);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid coefficient file: ") + e.what());
  }
}

nlohmann::json FeatureReport::to_json() const {
  nlohmann::json j;
  j["query"] = query;
  j["features"] = nlohmann::json::array();
  for (const auto& f : features) {
    nlohmann::json jf{{"feature", f.feature}, {"coefficient", f.coefficient}, {"tokens", nlohmann::json::array()}};
    for (const auto& t : f.top_tokens) jf["tokens"].push_back({{"label", t.label}, {"row", t.row}, {"value", t.value}});
    j["features"].push_back(std::move(jf));
  }
  return j;
}

FeatureReport feature_report(const Dictionary& phi, const ActivationSet& x, double lambda, const std::string& token,
                             Index k_features, Index k_tokens, ActivationRanking ranking) {
  Index query_row = 0;
  query_label(x, token, query_row);
  const auto& labels = *x.labels();
  const CoefficientSet alpha = infer_coefficients(x, phi, lambda);
  const auto query = alpha.column(query_row);
  if (query.empty()) throw NumericalError("token '" + token + "' decomposes to all-zero coefficients");

  std::vector<std::pair<Index, double>> candidates;
  for (const auto& e : query) candidates.emplace_back(e.feature, e.value);
  std::vector<std::pair<Index, double>> chosen;
  top_k(candidates, k_features, chosen);

  // Row-major view of the coefficients: for each feature, (row, value) pairs.
  const SparseMatrix by_feature = alpha.matrix().transpose();
  FeatureReport report;
  report.query = token;
  for (const auto& [feature, coeff] : chosen) {
    std::vector<std::pair<Index, double>> rows;
    if (ranking == ActivationRanking::coefficient) {
      for (SparseMatrix::InnerIterator it(by_feature, feature); it; ++it) rows.emplace_back(it.index(), it.value());
    } else {
      const Vector dots = x.data() * phi.feature(feature);
      for (Index j = 0; j < x.n(); ++j) rows.emplace_back(j, dots[j]);
    }
    std::vector<std::pair<Index, double>> best;
    top_k(rows, k_tokens, best);
    ReportedFeature rf{feature, coeff, {}};
    for (const auto& [row, value] : best) rf.top_tokens.push_back({labels[static_cast<std::size_t>(row)], row, value});
    report.features.push_back(std::move(rf));
  }
  return report;
}

std::vector<NearestToken> nearest_embedding_report(const ActivationSet& x, const std::string& token, Index k) {
  Index query_row = 0;
  query_label(x, token, query_row);
  const auto& labels = *x.labels();
  const Vector query = x.row(query_row);
  const double query_norm = query.norm();
  const Vector norms = x.data().rowwise().norm();
  const Vector dots = x.data() * query;
  std::vector<std::pair<Index, double>> candidates;
  for (Index j = 0; j < x.n(); ++j) {
    if (j == query_row) continue;
    const double denom = norms[j] * query_norm;
    candidates.emplace_back(j, denom > 0.0 ? dots[j] / denom : 0.0);
  }
  std::vector<std::pair<Index, double>> best;
  top_k(candidates, k, best);
  std::vector<NearestToken> out;
  for (const auto& [row, cosine] : best) out.push_back({labels[static_cast<std::size_t>(row)], row, cosine});
  return out;
}

}  // namespace sparsemeter
