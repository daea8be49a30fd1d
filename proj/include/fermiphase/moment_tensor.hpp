#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fermiphase {

/// Rank-(p,p) tensor of canonical-ordered moments over composite indices:
///   M(m_1..m_p | l_1..l_p) = E[ψ_{m_p}…ψ_{m_1} ψ⁺_{l_1}…ψ⁺_{l_p}].
/// Storage is dense row-major with the p ψ indices first.
class MomentTensor {
 public:
  MomentTensor() = default;
  MomentTensor(int order, int dimension);

  int order() const { return order_; }
  int dimension() const { return dimension_; }
  std::size_t size() const { return data_.size(); }

  std::complex<double>& operator[](std::size_t flat) { return data_[flat]; }
  std::complex<double> operator[](std::size_t flat) const { return data_[flat]; }

  std::size_t flat_index(std::span<const int> psi, std::span<const int> psi_plus) const;
  std::complex<double> at(std::span<const int> psi, std::span<const int> psi_plus) const {
    return data_[flat_index(psi, psi_plus)];
  }
  std::complex<double>& at(std::span<const int> psi, std::span<const int> psi_plus) {
    return data_[flat_index(psi, psi_plus)];
  }

  std::span<std::complex<double>> data() { return data_; }
  std::span<const std::complex<double>> data() const { return data_; }

  double max_abs() const;

 private:
  int order_ = 0;
  int dimension_ = 0;
  std::vector<std::complex<double>> data_;
};

/// Contracts `matrix` (rows × dimension) into one axis of a dense row-major tensor with the
/// given per-axis extents; returns the new data and updates `extents[axis]` to matrix.rows().
std::vector<std::complex<double>> apply_along_axis(std::span<const std::complex<double>> data,
                                                   std::vector<int>& extents, int axis,
                                                   const Eigen::MatrixXcd& matrix);

}  // namespace fermiphase
