#include "sparsemeter/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sparsemeter {

namespace {

std::string shape_str(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

ActivationSet::ActivationSet(RowMatrix data, std::optional<std::vector<std::string>> labels)
    : data_(std::move(data)), labels_(std::move(labels)) {
  if (data_.rows() < 1 || data_.cols() < 1)
    throw InvalidArgument("activation set must have n >= 1 and d >= 1, got " + shape_str(data_.rows(), data_.cols()));
  if (!data_.allFinite()) throw InvalidArgument("activation set contains non-finite values");
  if (labels_ && static_cast<Index>(labels_->size()) != data_.rows())
    throw InvalidArgument("label count " + std::to_string(labels_->size()) + " does not match n = " +
                          std::to_string(data_.rows()));
}

ActivationSet ActivationSet::subset(const std::vector<Index>& rows) const {
  RowMatrix out(static_cast<Index>(rows.size()), d());
  std::optional<std::vector<std::string>> out_labels;
  if (labels_) out_labels.emplace();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index r = rows[k];
    if (r < 0 || r >= n()) throw InvalidArgument("row index out of range");
    out.row(static_cast<Index>(k)) = data_.row(r);
    if (labels_) out_labels->push_back((*labels_)[static_cast<std::size_t>(r)]);
  }
  return ActivationSet(std::move(out), std::move(out_labels));
}

ActivationSet ActivationSet::scaled(double factor) const { return ActivationSet(data_ * factor, labels_); }

Dictionary::Dictionary(Matrix features) : features_(std::move(features)) {
  if (features_.rows() < 1 || features_.cols() < 1) throw InvalidArgument("dictionary must have d >= 1 and m >= 1");
  if (!features_.allFinite()) throw InvalidArgument("dictionary contains non-finite values");
  for (Index i = 0; i < features_.cols(); ++i) {
    const double norm = features_.col(i).norm();
    if (std::abs(norm - 1.0) > kUnitTolerance)
      throw InvalidArgument("dictionary column " + std::to_string(i) + " has norm " + std::to_string(norm) +
                            ", expected 1");
  }
}

CoefficientSet::CoefficientSet(Index m, Index n) : coeffs_(m, n) {
  if (m < 1 || n < 1) throw InvalidArgument("coefficient set must have m >= 1 and n >= 1");
  coeffs_.makeCompressed();
}

CoefficientSet::CoefficientSet(SparseMatrix coeffs) : coeffs_(std::move(coeffs)) {
  coeffs_.makeCompressed();
  for (Index j = 0; j < coeffs_.outerSize(); ++j) {
    Index previous = -1;
    for (SparseMatrix::InnerIterator it(coeffs_, j); it; ++it) {
      if (!(it.value() > 0.0) || !std::isfinite(it.value()))
        throw InvalidArgument("coefficient values must be finite and strictly positive");
      // Eigen keeps inner indices sorted, so strict increase means unique.
      if (it.index() <= previous) throw InvalidArgument("duplicate feature index in coefficient column");
      previous = it.index();
    }
  }
}

CoefficientSet CoefficientSet::from_columns(Index m, const std::vector<std::vector<CoefficientEntry>>& columns) {
  const auto n = static_cast<Index>(columns.size());
  if (m < 1 || n < 1) throw InvalidArgument("coefficient set must have m >= 1 and n >= 1");
  std::vector<Eigen::Triplet<double>> triplets;
  for (Index j = 0; j < n; ++j) {
    auto column = columns[static_cast<std::size_t>(j)];
    std::sort(column.begin(), column.end(), [](const auto& a, const auto& b) { return a.feature < b.feature; });
    for (std::size_t k = 0; k < column.size(); ++k) {
      const auto& e = column[k];
      if (e.feature < 0 || e.feature >= m) throw InvalidArgument("coefficient feature index out of range");
      if (k > 0 && column[k - 1].feature == e.feature)
        throw InvalidArgument("duplicate feature index in coefficient column");
      if (!(e.value > 0.0) || !std::isfinite(e.value))
        throw InvalidArgument("coefficient values must be finite and strictly positive");
      triplets.emplace_back(e.feature, j, e.value);
    }
  }
  SparseMatrix s(m, n);
  s.setFromTriplets(triplets.begin(), triplets.end());
  return CoefficientSet(std::move(s));
}

std::vector<CoefficientEntry> CoefficientSet::column(Index j) const {
  std::vector<CoefficientEntry> out;
  for (SparseMatrix::InnerIterator it(coeffs_, j); it; ++it) out.push_back({it.index(), it.value()});
  return out;
}

CoefficientSet CoefficientSet::scaled(double factor) const {
  if (!(factor > 0.0)) throw InvalidArgument("coefficient scale factor must be positive");
  return CoefficientSet(SparseMatrix(coeffs_ * factor));
}

CoefficientSet CoefficientSet::select_columns(const std::vector<Index>& cols) const {
  SparseMatrix out(m(), static_cast<Index>(cols.size()));
  Eigen::VectorXi reserve(static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const Index c = cols[k];
    if (c < 0 || c >= n()) throw InvalidArgument("coefficient column index out of range");
    reserve[static_cast<Index>(k)] =
        static_cast<int>(coeffs_.outerIndexPtr()[c + 1] - coeffs_.outerIndexPtr()[c]);
  }
  out.reserve(reserve);
  for (std::size_t k = 0; k < cols.size(); ++k)
    for (SparseMatrix::InnerIterator it(coeffs_, cols[k]); it; ++it)
      out.insert(it.index(), static_cast<Index>(k)) = it.value();
  out.makeCompressed();
  CoefficientSet result;
  result.coeffs_ = std::move(out);
  return result;
}

Centered center(const ActivationSet& x) {
  Vector mean = x.data().colwise().mean().transpose();
  RowMatrix centered = x.data().rowwise() - mean.transpose();
  return {ActivationSet(std::move(centered), x.labels()), std::move(mean)};
}

Dictionary normalize_dictionary(Matrix candidate) {
  for (Index i = 0; i < candidate.cols(); ++i) {
    const double norm = candidate.col(i).norm();
    if (!(norm >= 1e-12))
      throw InvalidArgument("dictionary column " + std::to_string(i) + " has (near-)zero norm");
    candidate.col(i) /= norm;
  }
  return Dictionary(std::move(candidate));
}

RowMatrix reconstruct(const Dictionary& phi, const CoefficientSet& alpha) {
  if (phi.m() != alpha.m())
    throw InvalidArgument("dictionary has " + std::to_string(phi.m()) + " features but coefficients have " +
                          std::to_string(alpha.m()) + " rows");
  // (Phi alpha)^T = alpha^T Phi^T
  RowMatrix out = (alpha.matrix().transpose() * phi.features().transpose());
  return out;
}

double residual_norm_sq(const ActivationSet& x, const Dictionary& phi, const CoefficientSet& alpha) {
  if (x.d() != phi.d())
    throw InvalidArgument("activation dimension " + std::to_string(x.d()) + " does not match dictionary dimension " +
                          std::to_string(phi.d()));
  if (x.n() != alpha.n())
    throw InvalidArgument("activation count " + std::to_string(x.n()) + " does not match coefficient columns " +
                          std::to_string(alpha.n()));
  return (x.data() - reconstruct(phi, alpha)).squaredNorm();
}

double l1_norm(const CoefficientSet& alpha) {
  const auto& s = alpha.matrix();
  double total = 0.0;
  for (Index k = 0; k < s.nonZeros(); ++k) total += s.valuePtr()[k];
  return total;
}

double objective(const ActivationSet& x, const Dictionary& phi, const CoefficientSet& alpha, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
  const double residual = residual_norm_sq(x, phi, alpha);
  return (residual + lambda * l1_norm(alpha)) / static_cast<double>(x.n());
}

double mean_column_max(const CoefficientSet& alpha) {
  const auto& s = alpha.matrix();
  double total = 0.0;
  for (Index j = 0; j < s.outerSize(); ++j) {
    double best = 0.0;
    for (SparseMatrix::InnerIterator it(s, j); it; ++it) best = std::max(best, it.value());
    total += best;
  }
  return total / static_cast<double>(s.cols());
}

double mean_row_norm(const ActivationSet& x) { return x.data().rowwise().norm().mean(); }

}  // namespace sparsemeter
