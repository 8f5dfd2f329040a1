#include "sdyn/fem/block_sparse.hpp"

#include <algorithm>
#include <cmath>

#include "sdyn/error.hpp"

namespace sdyn {

BlockSparseMatrix BlockSparseMatrix::from_adjacency(
    const std::vector<std::vector<std::uint32_t>>& adjacency) {
  BlockSparseMatrix m;
  const std::size_t n = adjacency.size();
  m.row_ptr_.reserve(n + 1);
  m.row_ptr_.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint32_t> row = adjacency[i];
    row.push_back(static_cast<std::uint32_t>(i));
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    m.cols_.insert(m.cols_.end(), row.begin(), row.end());
    m.row_ptr_.push_back(static_cast<std::uint32_t>(m.cols_.size()));
  }
  m.blocks_.assign(m.cols_.size(), Mat3::Zero());
  return m;
}

BlockSparseMatrix BlockSparseMatrix::diagonal(const Eigen::VectorXd& values) {
  const std::size_t n = static_cast<std::size_t>(values.size()) / 3;
  BlockSparseMatrix m = from_adjacency(std::vector<std::vector<std::uint32_t>>(n));
  for (std::size_t i = 0; i < n; ++i) {
    m.blocks_[i] = values.segment<3>(3 * i).asDiagonal();
  }
  return m;
}

std::optional<std::size_t> BlockSparseMatrix::find(std::size_t row, std::size_t col) const {
  const auto first = cols_.begin() + row_ptr_[row];
  const auto last = cols_.begin() + row_ptr_[row + 1];
  const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(col));
  if (it == last || *it != col) return std::nullopt;
  return static_cast<std::size_t>(it - cols_.begin());
}

void BlockSparseMatrix::set_zero() {
  std::fill(blocks_.begin(), blocks_.end(), Mat3::Zero());
}

bool BlockSparseMatrix::same_pattern(const BlockSparseMatrix& other) const {
  return row_ptr_ == other.row_ptr_ && cols_ == other.cols_;
}

void BlockSparseMatrix::add_scaled(double scale, const BlockSparseMatrix& other) {
  if (same_pattern(other)) {
    for (std::size_t k = 0; k < blocks_.size(); ++k) blocks_[k] += scale * other.blocks_[k];
    return;
  }
  // Subset patterns (e.g. a diagonal added to a stiffness pattern).
  if (other.block_rows() != block_rows()) {
    throw Error(Errc::ShapeMismatch, "block matrices differ in size");
  }
  for (std::size_t i = 0; i < other.block_rows(); ++i) {
    for (std::size_t k = other.row_begin(i); k < other.row_end(i); ++k) {
      const auto target = find(i, other.cols_[k]);
      if (!target) throw Error(Errc::ShapeMismatch, "pattern is not a superset", i);
      blocks_[*target] += scale * other.blocks_[k];
    }
  }
}

void BlockSparseMatrix::scale(double s) {
  for (Mat3& b : blocks_) b *= s;
}

Eigen::VectorXd BlockSparseMatrix::multiply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(x.size());
  multiply(x, y);
  return y;
}

void BlockSparseMatrix::multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  const std::size_t n = block_rows();
  y.resize(static_cast<Eigen::Index>(3 * n));
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 acc = Vec3::Zero();
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      acc.noalias() += blocks_[k] * x.segment<3>(3 * cols_[k]);
    }
    y.segment<3>(3 * i) = acc;
  }
}

Eigen::VectorXd BlockSparseMatrix::diagonal_entries() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()));
  for (std::size_t i = 0; i < block_rows(); ++i) {
    if (auto k = find(i, i)) d.segment<3>(3 * i) = blocks_[*k].diagonal();
  }
  return d;
}

double BlockSparseMatrix::relative_asymmetry() const {
  double max_entry = 0.0, max_diff = 0.0;
  for (std::size_t i = 0; i < block_rows(); ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      max_entry = std::max(max_entry, blocks_[k].cwiseAbs().maxCoeff());
      const auto mirror = find(cols_[k], i);
      const Mat3 other = mirror ? blocks_[*mirror] : Mat3::Zero();
      max_diff = std::max(max_diff, (blocks_[k] - other.transpose()).cwiseAbs().maxCoeff());
    }
  }
  return max_entry > 0.0 ? max_diff / max_entry : 0.0;
}

Eigen::MatrixXd BlockSparseMatrix::to_dense() const {
  const auto dim = static_cast<Eigen::Index>(dimension());
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t i = 0; i < block_rows(); ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      dense.block<3, 3>(3 * i, 3 * cols_[k]) = blocks_[k];
    }
  }
  return dense;
}

}  // namespace sdyn
