#include "evolab/kernels.hpp"

#include <algorithm>

#include <omp.h>

namespace evolab {

namespace {

constexpr size_t kContourBlock = 32;

Mat node_term(const Mat& A, const Mat& G, const ContourNode& node, cplx f, const Mat& X) {
  Eigen::PartialPivLU<Mat> lu(node.lambda * G - A);
  return (f * node.weight) * lu.solve(X);
}

} // namespace

Mat contour_sum(const Mat& A, const Mat& G, const std::vector<ContourNode>& nodes, const std::vector<cplx>& fvals,
                const Mat& X, ExecutionPolicy policy) {
  Mat acc = Mat::Zero(A.rows(), X.cols());
  if (policy == ExecutionPolicy::serial) {
    for (size_t k = 0; k < nodes.size(); ++k)
      if (fvals[k] != cplx(0.0)) acc += node_term(A, G, nodes[k], fvals[k], X);
    return acc;
  }
  std::vector<Mat> buf(kContourBlock);
  for (size_t b0 = 0; b0 < nodes.size(); b0 += kContourBlock) {
    const size_t b1 = std::min(nodes.size(), b0 + kContourBlock);
    const long cnt = static_cast<long>(b1 - b0);
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < cnt; ++k) {
      const size_t idx = b0 + static_cast<size_t>(k);
      if (fvals[idx] != cplx(0.0)) buf[static_cast<size_t>(k)] = node_term(A, G, nodes[idx], fvals[idx], X);
    }
    for (size_t k = b0; k < b1; ++k)
      if (fvals[k] != cplx(0.0)) acc += buf[k - b0];
  }
  return acc;
}

void set_thread_count(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

} // namespace evolab
