#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "mkv/order.hpp"

namespace mkv {

MatrixOrder matrix_partial_order(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ParameterError("matrix_partial_order: shapes differ (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
  }
  if (a.size() == 0) return MatrixOrder::ordered;
  Eigen::MatrixXd s = b * b.transpose() - a * a.transpose();
  s = 0.5 * (s + s.transpose());
  if (tol < 0.0) tol = 1e-10 * s.norm();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw NumericError("symmetric eigensolver did not converge", 0, 0);
  }
  return eig.eigenvalues().minCoeff() >= -tol ? MatrixOrder::ordered : MatrixOrder::not_ordered;
}

Eigen::MatrixXd assemble_block_matrix(const std::vector<Eigen::MatrixXd>& blocks, double common) {
  if (blocks.empty()) throw ParameterError("block matrix needs at least one block");
  const Eigen::Index d = blocks.front().rows();
  const auto n = static_cast<Eigen::Index>(blocks.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * d, (n + 1) * d);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& blk = blocks[static_cast<std::size_t>(k)];
    if (blk.rows() != d || blk.cols() != d) {
      throw ParameterError("block matrix entries must all be d x d");
    }
    out.block(k * d, k * d, d, d) = blk;
    out.block(k * d, n * d, d, d) = common * Eigen::MatrixXd::Identity(d, d);
  }
  return out;
}

MatrixOrder block_matrix_order_check(const std::vector<Eigen::MatrixXd>& a_blocks,
                                     const std::vector<Eigen::MatrixXd>& b_blocks,
                                     double sigma0, double theta0, double tol) {
  if (a_blocks.size() != b_blocks.size() || a_blocks.empty()) {
    throw ParameterError("block lists must be nonempty and of equal length");
  }
  if (std::abs(sigma0) > std::abs(theta0)) {
    throw PreconditionViolation("block order check needs |sigma0| <= |theta0|");
  }
  for (std::size_t k = 0; k < a_blocks.size(); ++k) {
    if (matrix_partial_order(a_blocks[k], b_blocks[k]) != MatrixOrder::ordered) {
      throw PreconditionViolation("block " + std::to_string(k) + " violates A_n <= B_n");
    }
  }
  return matrix_partial_order(assemble_block_matrix(a_blocks, sigma0),
                              assemble_block_matrix(b_blocks, theta0), tol);
}

}  // namespace mkv
