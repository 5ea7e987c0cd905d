#include "mlac/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace mlac {

namespace {

std::vector<Index> default_offsets(std::vector<Index> offsets, Index n) {
  if (offsets.empty()) return {0, n};
  if (offsets.front() != 0 || offsets.back() != n)
    throw InvalidArgument("kernel component offsets must start at 0 and end at n");
  for (std::size_t c = 1; c < offsets.size(); ++c)
    if (offsets[c] < offsets[c - 1]) throw InvalidArgument("kernel component offsets must be sorted");
  return offsets;
}

void check_dense(const MatrixXd& w) {
  if (w.rows() != w.cols()) throw InvalidArgument("weight matrix must be square");
  for (Index j = 0; j < w.cols(); ++j) {
    for (Index i = 0; i < w.rows(); ++i) {
      const double x = w(i, j);
      if (!std::isfinite(x) || x < 0.0)
        throw InvalidArgument("weight (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") is negative or non-finite");
      if (i == j && x != 0.0)
        throw InvalidArgument("weight matrix has nonzero diagonal at node " + std::to_string(i));
      if (x != w(j, i))
        throw InvalidArgument("weight matrix is not symmetric at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
    }
  }
}

void check_sparse(const SparseMatrix& w) {
  if (w.rows() != w.cols()) throw InvalidArgument("weight matrix must be square");
  for (Index k = 0; k < w.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(w, k); it; ++it) {
      const double x = it.value();
      if (!std::isfinite(x) || x < 0.0)
        throw InvalidArgument("weight (" + std::to_string(it.row()) + ", " +
                              std::to_string(it.col()) + ") is negative or non-finite");
      if (it.row() == it.col() && x != 0.0)
        throw InvalidArgument("weight matrix has nonzero diagonal at node " +
                              std::to_string(it.row()));
    }
  }
  const SparseMatrix t = w.transpose();
  const SparseMatrix diff = w - t;
  for (Index k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it)
      if (it.value() != 0.0)
        throw InvalidArgument("weight matrix is not symmetric at (" + std::to_string(it.row()) +
                              ", " + std::to_string(it.col()) + ")");
}

}  // namespace

WeightOperator WeightOperator::dense(MatrixXd w) {
  check_dense(w);
  return WeightOperator(Dense{std::move(w)});
}

WeightOperator WeightOperator::sparse(SparseMatrix w) {
  w.makeCompressed();
  check_sparse(w);
  return WeightOperator(Sparse{std::move(w)});
}

WeightOperator WeightOperator::kernel(MatrixXd points, KernelSpec kernel,
                                      std::vector<Index> offsets) {
  kernel.validate();
  if (!points.allFinite()) throw InvalidArgument("kernel layer points must be finite");
  const Index n = points.rows();
  return WeightOperator(Kernel{std::move(points), kernel, default_offsets(std::move(offsets), n), {}});
}

WeightOperator WeightOperator::kernel_fastsum(MatrixXd points, KernelSpec kernel,
                                              FastsumParams params, std::vector<Index> offsets) {
  kernel.validate();
  const Index n = points.rows();
  offsets = default_offsets(std::move(offsets), n);
  auto plan = std::make_shared<const FastsumPlan>(kernel, static_cast<int>(points.cols()), params);
  std::vector<std::shared_ptr<const FastsumOperator>> ops;
  for (std::size_t c = 0; c + 1 < offsets.size(); ++c) {
    const Index begin = offsets[c], len = offsets[c + 1] - offsets[c];
    ops.push_back(std::make_shared<const FastsumOperator>(
        plan, PointSet(points.middleRows(begin, len), params.boundary_eps)));
  }
  return WeightOperator(Kernel{std::move(points), kernel, std::move(offsets), std::move(ops)});
}

Index WeightOperator::size() const {
  return std::visit(
      [](const auto& r) -> Index {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Kernel>)
          return r.points.rows();
        else
          return r.w.rows();
      },
      repr_);
}

bool WeightOperator::uses_fastsum() const {
  const auto* k = kernel_data();
  return k != nullptr && !k->fastsum.empty();
}

std::string WeightOperator::describe() const {
  std::ostringstream os;
  if (const auto* d = std::get_if<Dense>(&repr_)) {
    os << "dense(n=" << d->w.rows() << ")";
  } else if (const auto* s = std::get_if<Sparse>(&repr_)) {
    os << "sparse(n=" << s->w.rows() << ", nnz=" << s->w.nonZeros() << ")";
  } else {
    const auto& k = std::get<Kernel>(repr_);
    os << "kernel(" << to_string(k.kernel.family) << ", sigma=" << k.kernel.sigma
       << ", n=" << k.points.rows() << ", d=" << k.points.cols()
       << ", components=" << k.offsets.size() - 1 << (k.fastsum.empty() ? ", direct" : ", fastsum")
       << ")";
  }
  return os.str();
}

VectorXd WeightOperator::apply(const ConstVectorRef& v) const {
  if (v.size() != size())
    throw InvalidArgument("weight product: vector length " + std::to_string(v.size()) +
                          " does not match n = " + std::to_string(size()));
  if (const auto* k = kernel_data(); k != nullptr && !k->fastsum.empty()) {
    VectorXd out(v.size());
    for (std::size_t c = 0; c + 1 < k->offsets.size(); ++c) {
      const Index begin = k->offsets[c], len = k->offsets[c + 1] - k->offsets[c];
      out.segment(begin, len) = k->fastsum[c]->apply(v.segment(begin, len));
    }
    return out;
  }
  return apply_exact(v);
}

VectorXd WeightOperator::apply_exact(const ConstVectorRef& v) const {
  if (v.size() != size())
    throw InvalidArgument("weight product: vector length " + std::to_string(v.size()) +
                          " does not match n = " + std::to_string(size()));
  if (const auto* d = std::get_if<Dense>(&repr_)) return d->w * v;
  if (const auto* s = std::get_if<Sparse>(&repr_)) return s->w * v;
  const auto& k = std::get<Kernel>(repr_);
  VectorXd out(v.size());
  for (std::size_t c = 0; c + 1 < k.offsets.size(); ++c) {
    const Index begin = k.offsets[c], len = k.offsets[c + 1] - k.offsets[c];
    out.segment(begin, len) =
        direct_apply(k.points.middleRows(begin, len), v.segment(begin, len), k.kernel);
  }
  return out;
}

MatrixXd WeightOperator::to_dense() const {
  if (const auto* d = std::get_if<Dense>(&repr_)) return d->w;
  if (const auto* s = std::get_if<Sparse>(&repr_)) return MatrixXd(s->w);
  const auto& k = std::get<Kernel>(repr_);
  const Index n = k.points.rows();
  MatrixXd w = MatrixXd::Zero(n, n);
  for (std::size_t c = 0; c + 1 < k.offsets.size(); ++c) {
    for (Index i = k.offsets[c]; i < k.offsets[c + 1]; ++i)
      for (Index j = k.offsets[c]; j < k.offsets[c + 1]; ++j)
        if (i != j) w(i, j) = k.kernel((k.points.row(i) - k.points.row(j)).norm());
  }
  return w;
}

// ---------------------------------------------------------------------------

Layer::Layer(std::shared_ptr<const WeightOperator> weights, VectorXd degrees, double shift)
    : weights_(std::move(weights)), degrees_(std::move(degrees)), shift_(shift) {
  if (!(shift_ >= 0.0) || !std::isfinite(shift_))
    throw InvalidArgument("layer shift must be finite and >= 0");
  inv_sqrt_deg_ = degrees_.array().rsqrt();
}

Layer Layer::with_shift(double shift) const { return Layer(weights_, degrees_, shift); }

Layer build_layer(WeightOperator weights, double shift) {
  const Index n = weights.size();
  if (n < 1) throw InvalidArgument("layer needs at least one node");
  VectorXd degrees = weights.apply(VectorXd::Ones(n));
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(degrees(i)) || degrees(i) <= 0.0)
      throw InvalidArgument("zero degree: node " + std::to_string(i) + " has degree " +
                            std::to_string(degrees(i)) + " (isolated nodes are not allowed)");
  }
  return Layer(std::make_shared<const WeightOperator>(std::move(weights)), std::move(degrees),
               shift);
}

VectorXd apply_weight(const Layer& layer, const ConstVectorRef& v) {
  if (!v.allFinite()) throw InvalidArgument("weight product: input vector is not finite");
  return layer.weights().apply(v);
}

VectorXd apply_sym_laplacian(const Layer& layer, const ConstVectorRef& v) {
  const VectorXd& s = layer.inv_sqrt_degrees();
  if (v.size() != s.size()) throw InvalidArgument("Laplacian product: vector length mismatch");
  const VectorXd scaled = s.cwiseProduct(v);
  const VectorXd w = apply_weight(layer, scaled);
  return (1.0 + layer.shift()) * v - s.cwiseProduct(w);
}

MatrixXd dense_sym_laplacian(const Layer& layer) {
  const VectorXd& s = layer.inv_sqrt_degrees();
  MatrixXd l = -(s.asDiagonal() * layer.weights().to_dense() * s.asDiagonal());
  l.diagonal().array() += 1.0 + layer.shift();
  return l;
}

// ---------------------------------------------------------------------------

MultilayerGraph::MultilayerGraph(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw InvalidArgument("multilayer graph needs at least one layer");
  n_ = layers_.front().size();
  for (std::size_t t = 0; t < layers_.size(); ++t)
    if (layers_[t].size() != n_)
      throw InvalidArgument("layer " + std::to_string(t) + " has " +
                            std::to_string(layers_[t].size()) + " nodes, expected " +
                            std::to_string(n_));
}

MultilayerGraph MultilayerGraph::with_shift(double shift) const {
  std::vector<Layer> shifted;
  shifted.reserve(layers_.size());
  for (const auto& l : layers_) shifted.push_back(l.with_shift(shift));
  return MultilayerGraph(std::move(shifted));
}

MultilayerGraph MultilayerGraph::subset(const std::vector<std::size_t>& which) const {
  std::vector<Layer> picked;
  for (auto t : which) {
    if (t >= layers_.size()) throw InvalidArgument("layer index out of range");
    picked.push_back(layers_[t]);
  }
  return MultilayerGraph(std::move(picked));
}

SparseMatrix load_edge_list(const std::string& path, Index node_count) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list '" + path + "'");
  std::map<std::pair<Index, Index>, double> edges;
  Index max_index = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    long long i = 0, j = 0;
    double w = 0.0;
    if (!(ls >> i >> j >> w))
      throw IoError(path + ":" + std::to_string(line_no) + ": expected 'i j w'");
    if (i < 0 || j < 0 || !std::isfinite(w) || w < 0.0)
      throw IoError(path + ":" + std::to_string(line_no) + ": invalid index or weight");
    if (i == j) throw IoError(path + ":" + std::to_string(line_no) + ": self-loops not allowed");
    const std::pair<Index, Index> key{std::min<Index>(i, j), std::max<Index>(i, j)};
    auto [it, inserted] = edges.emplace(key, w);
    if (!inserted) it->second = std::max(it->second, w);
    max_index = std::max<Index>(max_index, std::max<Index>(i, j));
  }
  const Index n = node_count > 0 ? node_count : max_index + 1;
  if (max_index >= n)
    throw IoError(path + ": node index " + std::to_string(max_index) + " exceeds node count");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(edges.size() * 2);
  for (const auto& [key, w] : edges) {
    if (w == 0.0) continue;
    trips.emplace_back(key.first, key.second, w);
    trips.emplace_back(key.second, key.first, w);
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

}  // namespace mlac
