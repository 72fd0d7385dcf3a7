#pragma once

#include <vector>

#include "evolab/linalg.hpp"

namespace evolab {

/// serial keeps the reference loop; parallel uses OpenMP and must agree bit for bit.
enum class ExecutionPolicy { serial, parallel };

struct ContourNode {
  cplx lambda;
  /// quadrature weight including orientation and 1/(2 pi i)
  cplx weight;
};

/// sum_k fvals[k] weight_k (lambda_k G - A)^{-1} X, accumulated in node order
Mat contour_sum(const Mat& A, const Mat& G, const std::vector<ContourNode>& nodes, const std::vector<cplx>& fvals,
                const Mat& X, ExecutionPolicy policy);

void set_thread_count(int threads);
int thread_count();

} // namespace evolab
