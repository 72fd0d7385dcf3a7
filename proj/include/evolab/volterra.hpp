#pragma once

#include <vector>

#include "evolab/form_family.hpp"
#include "evolab/kernels.hpp"

namespace evolab {

struct VolterraOptions {
  /// Gauss-Lobatto points per collocation panel
  int lobatto_points = 9;
  /// collocation panels shrink geometrically toward s
  double panel_ratio = 0.5;
  /// product-integration sub-intervals shrink geometrically toward r = tau
  double aux_ratio = 0.7;
  /// innermost panel width, in units of T
  double min_panel = 1e-7;
  /// widest panel, in units of T
  double max_panel = 0.125;
  int aux_points = 8;
  int far_points = 24;
  ExecutionPolicy policy = ExecutionPolicy::parallel;
};

/// Product-integration discretization of
/// (P_s h)(tau) = int_s^tau e^{-(tau - r) A(tau)} (A(tau) - A(r)) h(r) dr
/// on Gauss-Lobatto panels, using the eigendecomposition of A(tau) at every node.
class VolterraDiscretization {
public:
  VolterraDiscretization(const NonAutonomousForm& form, double s, const std::vector<double>& outputs,
                         const VolterraOptions& options = {});

  /// Same mesh and eigenvectors for the form shifted by mu.
  VolterraDiscretization with_shift(double mu) const;

  const NonAutonomousForm& form() const { return form_; }
  double start() const { return s_; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& panel_edges() const { return edges_; }
  /// node index of every requested output time
  const std::vector<int>& output_index() const { return out_idx_; }
  const std::vector<double>& outputs() const { return outputs_; }

  /// e^{-(tau_i - s) A(tau_i)} X at every node, X primal
  std::vector<Mat> frozen_term(const Mat& X) const;
  std::vector<Mat> apply(const std::vector<Mat>& h) const;
  std::vector<Mat> apply(const std::vector<Mat>& h, ExecutionPolicy policy) const;
  /// max_i sum_j ||W_ij||_{L(V)}, an upper bound for the discrete operator on sup-V-norm
  double norm_bound() const;

  /// max over nodes of the L(C^m -> V) norm of h_i, C^m carrying the V-norm induced by X
  double sup_norm(const std::vector<Mat>& h, const Mat& X) const;
  /// max over nodes of ||h_i||_{L(C^m, V)}, Euclidean C^m
  double sup_norm(const std::vector<Mat>& h) const;

private:
  void build_weights();

  NonAutonomousForm form_;
  double s_ = 0.0;
  VolterraOptions opt_;
  std::vector<double> outputs_;
  std::vector<double> nodes_, edges_;
  std::vector<int> out_idx_;
  int p_ = 0;
  std::vector<Vec> lam_;
  std::vector<Mat> phi_, phi_inv_, vphi_;
  std::vector<std::vector<Mat>> z_;
  std::vector<Mat> rw_;
  Eigen::MatrixXd coef_;
  std::vector<Mat> omega_;
};

} // namespace evolab
