#include "fermiphase/moment_tensor.hpp"

#include <algorithm>
#include <string>

#include "fermiphase/error.hpp"

namespace fermiphase {

MomentTensor::MomentTensor(int order, int dimension) : order_(order), dimension_(dimension) {
  if (order < 1 || dimension < 1) throw ConfigurationError("moment tensor needs order >= 1 and dimension >= 1");
  std::size_t size = 1;
  for (int k = 0; k < 2 * order; ++k) size *= static_cast<std::size_t>(dimension);
  data_.assign(size, {});
}

std::size_t MomentTensor::flat_index(std::span<const int> psi, std::span<const int> psi_plus) const {
  if (psi.size() != static_cast<std::size_t>(order_) || psi_plus.size() != static_cast<std::size_t>(order_)) {
    throw ConfigurationError("moment tensor of order " + std::to_string(order_) + " indexed with " +
                             std::to_string(psi.size()) + "+" + std::to_string(psi_plus.size()) + " indices");
  }
  std::size_t flat = 0;
  auto push = [&](int i) {
    if (i < 0 || i >= dimension_) throw ConfigurationError("moment tensor index out of range");
    flat = flat * static_cast<std::size_t>(dimension_) + static_cast<std::size_t>(i);
  };
  for (int i : psi) push(i);
  for (int i : psi_plus) push(i);
  return flat;
}

double MomentTensor::max_abs() const {
  double m = 0.0;
  for (const auto& v : data_) m = std::max(m, std::abs(v));
  return m;
}

std::vector<std::complex<double>> apply_along_axis(std::span<const std::complex<double>> data,
                                                   std::vector<int>& extents, int axis,
                                                   const Eigen::MatrixXcd& matrix) {
  const auto a = static_cast<std::size_t>(axis);
  if (a >= extents.size() || matrix.cols() != extents[a]) {
    throw ConfigurationError("axis contraction dimension mismatch");
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t k = 0; k < a; ++k) outer *= static_cast<std::size_t>(extents[k]);
  for (std::size_t k = a + 1; k < extents.size(); ++k) inner *= static_cast<std::size_t>(extents[k]);
  const auto n_in = static_cast<std::size_t>(extents[a]);
  const auto n_out = static_cast<std::size_t>(matrix.rows());
  std::vector<std::complex<double>> out(outer * n_out * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    const auto* src = data.data() + o * n_in * inner;
    auto* dst = out.data() + o * n_out * inner;
    for (std::size_t i = 0; i < n_out; ++i) {
      auto* row = dst + i * inner;
      for (std::size_t j = 0; j < n_in; ++j) {
        const std::complex<double> w = matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (w == std::complex<double>{}) continue;
        const auto* col = src + j * inner;
        for (std::size_t k = 0; k < inner; ++k) row[k] += w * col[k];
      }
    }
  }
  extents[a] = static_cast<int>(n_out);
  return out;
}

}  // namespace fermiphase
