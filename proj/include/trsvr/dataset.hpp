#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "trsvr/types.hpp"

namespace trsvr {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Binary classification data: one sparse feature row and one +-1 label per
/// sample. Rows are compressed, indices strictly increasing, no stored zeros.
struct Dataset {
  SparseRows rows;
  Vector labels;

  Index size() const { return rows.rows(); }
  Index dim() const { return rows.cols(); }

  /// Throws std::invalid_argument when any invariant is broken.
  void validate() const;

  double row_squared_norm(Index i) const;
  double max_row_squared_norm() const;
};

bool operator==(const Dataset& a, const Dataset& b);

using SparseEntry = std::pair<Index, double>;

/// Builds a dataset from per-row (0-based index, value) lists. Zero values are
/// dropped; indices must already be strictly increasing.
Dataset make_dataset(Index dim, const std::vector<std::vector<SparseEntry>>& rows,
                     const std::vector<double>& labels);

Dataset make_dense_dataset(const Matrix& features, const Vector& labels);

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads LIBSVM text (`label idx:val ...`, 1-based ascending indices).
/// Labels 0 are mapped to -1. Blank lines and `#` comments are skipped.
/// `min_dim` lets a test split share the training dimension.
Dataset parse_libsvm(std::istream& in, Index min_dim = 0);
Dataset parse_libsvm_string(const std::string& text, Index min_dim = 0);
Dataset load_libsvm(const std::string& path, Index min_dim = 0);

/// Writes values with 17 significant digits so a reparse is exact.
void write_libsvm(std::ostream& out, const Dataset& data);
std::string to_libsvm_string(const Dataset& data);

}  // namespace trsvr
