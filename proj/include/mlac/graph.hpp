#pragma once

#include "mlac/fastsum.hpp"
#include "mlac/kernel.hpp"
#include "mlac/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mlac {

/// Symmetric, nonnegative weight matrix with zero diagonal, in one of three
/// representations. Immutable; shared between layers that differ only in shift.
class WeightOperator {
 public:
  struct Dense {
    MatrixXd w;
  };
  struct Sparse {
    SparseMatrix w;
  };
  /// W_ij = K(x_i - x_j) for i != j inside the same component, 0 otherwise.
  /// Rows of `points` are grouped into contiguous components given by `offsets`
  /// (size C + 1, offsets[0] = 0, offsets[C] = n).
  struct Kernel {
    MatrixXd points;
    KernelSpec kernel;
    std::vector<Index> offsets;
    std::vector<std::shared_ptr<const FastsumOperator>> fastsum;  // one per component, or empty
  };

  static WeightOperator dense(MatrixXd w);
  static WeightOperator sparse(SparseMatrix w);
  /// Kernel weights evaluated directly in O(d n^2) per product.
  static WeightOperator kernel(MatrixXd points, KernelSpec kernel,
                               std::vector<Index> offsets = {});
  /// Kernel weights through NFFT fast summation; points must lie in the
  /// fastsum ball ||x|| <= 1/4 - eps_B/2.
  static WeightOperator kernel_fastsum(MatrixXd points, KernelSpec kernel, FastsumParams params,
                                       std::vector<Index> offsets = {});

  Index size() const;
  bool is_dense() const { return std::holds_alternative<Dense>(repr_); }
  bool is_sparse() const { return std::holds_alternative<Sparse>(repr_); }
  bool is_kernel() const { return std::holds_alternative<Kernel>(repr_); }
  bool uses_fastsum() const;
  const Kernel* kernel_data() const { return std::get_if<Kernel>(&repr_); }
  std::string describe() const;

  /// W v.
  VectorXd apply(const ConstVectorRef& v) const;
  /// Exact W v; kernel layers bypass fast summation.
  VectorXd apply_exact(const ConstVectorRef& v) const;
  /// Explicit n x n matrix (exact entries).
  MatrixXd to_dense() const;

 private:
  using Repr = std::variant<Dense, Sparse, Kernel>;
  explicit WeightOperator(Repr r) : repr_(std::move(r)) {}
  Repr repr_;
};

/// One graph layer: weights, cached degrees deg_i = sum_j W_ij > 0, and the
/// diagonal shift delta of L_sym + delta I.
class Layer {
 public:
  Layer(std::shared_ptr<const WeightOperator> weights, VectorXd degrees, double shift);

  Index size() const { return degrees_.size(); }
  const WeightOperator& weights() const { return *weights_; }
  const std::shared_ptr<const WeightOperator>& weights_ptr() const { return weights_; }
  const VectorXd& degrees() const { return degrees_; }
  const VectorXd& inv_sqrt_degrees() const { return inv_sqrt_deg_; }
  double shift() const { return shift_; }

  /// Same weights and degrees, different shift.
  Layer with_shift(double shift) const;

 private:
  std::shared_ptr<const WeightOperator> weights_;
  VectorXd degrees_;
  VectorXd inv_sqrt_deg_;
  double shift_;
};

/// Validates `weights` and caches its degree vector. Throws InvalidArgument on
/// asymmetric, negative, or non-finite weights, nonzero diagonal, or a node of
/// zero degree.
Layer build_layer(WeightOperator weights, double shift = 0.0);

/// W v.
VectorXd apply_weight(const Layer& layer, const ConstVectorRef& v);

/// (1 + delta) v - D^{-1/2} W D^{-1/2} v.
VectorXd apply_sym_laplacian(const Layer& layer, const ConstVectorRef& v);

/// Explicit L_sym + delta I.
MatrixXd dense_sym_laplacian(const Layer& layer);

class MultilayerGraph {
 public:
  explicit MultilayerGraph(std::vector<Layer> layers);

  Index size() const { return n_; }
  std::size_t layer_count() const { return layers_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(std::size_t t) const { return layers_.at(t); }

  MultilayerGraph with_shift(double shift) const;
  /// Graph made of the listed layers, in the given order.
  MultilayerGraph subset(const std::vector<std::size_t>& which) const;

 private:
  std::vector<Layer> layers_;
  Index n_;
};

/// Reads a whitespace-separated edge list "i j w" (0-based, '#' comments) into a
/// symmetric sparse matrix, symmetrized entrywise by max(w_ij, w_ji).
/// `node_count` of 0 infers n from the largest index.
SparseMatrix load_edge_list(const std::string& path, Index node_count = 0);

}  // namespace mlac
