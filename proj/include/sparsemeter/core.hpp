#pragma once

// Shared data model: activations, dictionaries, sparse coefficients, and the
// sparse coding objective
//
//   L(Phi; alpha) = (1/n) * ( ||X - Phi alpha||_F^2 + lambda * ||alpha||_1 ).
//
// Activations are stored one per row (n x d). The dictionary holds one unit
// feature per column (d x m). Coefficients are an m x n column-compressed
// sparse matrix: column j is the decomposition of activation j.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sparsemeter {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/// Bad shapes, invalid configuration values, unknown lookups.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Divergence, degenerate data, or a decomposition that carries no signal.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A set of n activation vectors in R^d with optional per-row labels.
class ActivationSet {
 public:
  ActivationSet() = default;
  explicit ActivationSet(RowMatrix data, std::optional<std::vector<std::string>> labels = std::nullopt);

  const RowMatrix& data() const noexcept { return data_; }
  const std::optional<std::vector<std::string>>& labels() const noexcept { return labels_; }
  bool has_labels() const noexcept { return labels_.has_value(); }

  Index n() const noexcept { return data_.rows(); }
  Index d() const noexcept { return data_.cols(); }

  /// Row j as a d-vector.
  Vector row(Index j) const { return data_.row(j).transpose(); }

  /// Rows selected by index, labels carried along.
  ActivationSet subset(const std::vector<Index>& rows) const;

  /// Returns a copy whose data is multiplied by `factor`.
  ActivationSet scaled(double factor) const;

 private:
  RowMatrix data_;
  std::optional<std::vector<std::string>> labels_;
};

/// d x m matrix of unit-norm feature columns.
class Dictionary {
 public:
  static constexpr double kUnitTolerance = 1e-6;

  Dictionary() = default;
  /// Validates that every column already has unit norm.
  explicit Dictionary(Matrix features);

  const Matrix& features() const noexcept { return features_; }
  Index d() const noexcept { return features_.rows(); }
  Index m() const noexcept { return features_.cols(); }
  auto feature(Index i) const { return features_.col(i); }

 private:
  Matrix features_;
};

struct CoefficientEntry {
  Index feature;
  double value;
};

/// Nonnegative sparse m x n coefficients. Zeros are never stored.
class CoefficientSet {
 public:
  CoefficientSet() = default;
  /// All-zero coefficients.
  CoefficientSet(Index m, Index n);
  /// Validates positivity, index range and per-column uniqueness; drops nothing.
  explicit CoefficientSet(SparseMatrix coeffs);

  static CoefficientSet from_columns(Index m, const std::vector<std::vector<CoefficientEntry>>& columns);

  const SparseMatrix& matrix() const noexcept { return coeffs_; }
  Index m() const noexcept { return coeffs_.rows(); }
  Index n() const noexcept { return coeffs_.cols(); }
  Index nonzeros() const noexcept { return coeffs_.nonZeros(); }

  std::vector<CoefficientEntry> column(Index j) const;
  /// Returns a copy with every value multiplied by `factor` > 0.
  CoefficientSet scaled(double factor) const;
  /// Columns selected by index, in the given order.
  CoefficientSet select_columns(const std::vector<Index>& cols) const;

 private:
  SparseMatrix coeffs_;
};

/// Result of `center`: the centered set and the subtracted column mean.
struct Centered {
  ActivationSet activations;
  Vector mean;
};

Centered center(const ActivationSet& x);

/// Scales every column to unit L2 norm; throws on columns with norm < 1e-12.
Dictionary normalize_dictionary(Matrix candidate);

/// Phi * alpha as an n x d matrix (one reconstruction per row).
RowMatrix reconstruct(const Dictionary& phi, const CoefficientSet& alpha);

/// Sum over samples of ||x_j - Phi alpha_j||^2, accumulated in double.
double residual_norm_sq(const ActivationSet& x, const Dictionary& phi, const CoefficientSet& alpha);

/// Sum of all coefficient values (entrywise L1; all values are positive).
double l1_norm(const CoefficientSet& alpha);

double objective(const ActivationSet& x, const Dictionary& phi, const CoefficientSet& alpha, double lambda);

/// Mean over columns of the per-column maximum coefficient. All-zero columns contribute 0.
double mean_column_max(const CoefficientSet& alpha);

/// Mean L2 norm of the rows of `x`.
double mean_row_norm(const ActivationSet& x);

}  // namespace sparsemeter
