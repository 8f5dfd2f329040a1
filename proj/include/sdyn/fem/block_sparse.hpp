#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "sdyn/types.hpp"

namespace sdyn {

// Square matrix of 3x3 blocks in compressed sparse row form. Column indices of
// each block row are sorted.
class BlockSparseMatrix {
 public:
  BlockSparseMatrix() = default;

  // Pattern = adjacency plus the diagonal.
  static BlockSparseMatrix from_adjacency(const std::vector<std::vector<std::uint32_t>>& adjacency);
  static BlockSparseMatrix diagonal(const Eigen::VectorXd& values);

  std::size_t block_rows() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t dimension() const { return 3 * block_rows(); }
  std::size_t block_count() const { return cols_.size(); }

  std::optional<std::size_t> find(std::size_t row, std::size_t col) const;
  Mat3& block(std::size_t k) { return blocks_[k]; }
  const Mat3& block(std::size_t k) const { return blocks_[k]; }
  std::size_t row_begin(std::size_t row) const { return row_ptr_[row]; }
  std::size_t row_end(std::size_t row) const { return row_ptr_[row + 1]; }
  std::uint32_t col(std::size_t k) const { return cols_[k]; }

  void set_zero();
  bool same_pattern(const BlockSparseMatrix& other) const;
  // this += scale * other; patterns must match.
  void add_scaled(double scale, const BlockSparseMatrix& other);
  void scale(double s);

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
  void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  Eigen::VectorXd diagonal_entries() const;

  // Largest |A_ij - A_ji| over max |A_ij|.
  double relative_asymmetry() const;
  Eigen::MatrixXd to_dense() const;

 private:
  std::vector<std::uint32_t> row_ptr_;
  std::vector<std::uint32_t> cols_;
  std::vector<Mat3> blocks_;
};

}  // namespace sdyn
