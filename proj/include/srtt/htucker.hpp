#pragma once

#include "srtt/dimension_tree.hpp"
#include "srtt/tucker.hpp"

namespace srtt {

// Hierarchical Tucker format. Internal-node bases are never stored: each is
// encoded by an order-3 transfer tensor B_S of shape (r_S, r_left, r_right)
// expressing its columns in the children's bases,
//
//   U_S(a + b*n_left, i) = sum_{j,k} B_S(i, j, k) U_left(a, j) U_right(b, k),
//
// i.e. column i of U_S is the left-fastest vectorization of
// U_left * B_S(i,:,:) * U_right^T. The left-fastest orientation is forced
// by the global linearization (the left child holds the lower modes) and is
// pinned by the explicit-Kronecker oracle in the test suite.

template <class Scalar>
struct HTuckerDecomposition {
  DimensionTree tree;
  std::vector<Matrix<Scalar>> leaf_factors;       // indexed by mode
  std::vector<DenseTensor<Scalar>> transfers;     // indexed by node id; internal nodes only
};

namespace detail {

// B(i, :, :) of an order-3 transfer tensor as an (r_l x r_r) matrix.
template <class Scalar>
Matrix<Scalar> transfer_slice(const DenseTensor<Scalar>& b, Index i) {
  const Index rs = b.dim(0), rl = b.dim(1), rr = b.dim(2);
  Matrix<Scalar> out(rl, rr);
  for (Index k = 0; k < rr; ++k)
    for (Index j = 0; j < rl; ++j) out(j, k) = b[i + j * rs + k * rs * rl];
  return out;
}

}  // namespace detail

/// Transfer tensor between a node basis and its children's bases:
/// B(i, j, k) = < u_i, v_j (x) w_k > computed by reshaping each u_i to an
/// (n_left x n_right) matrix and contracting, never materializing the
/// Kronecker product.
template <class Scalar>
DenseTensor<Scalar> transfer_tensor(const Eigen::Ref<const Matrix<Scalar>>& u_node,
                                    const Eigen::Ref<const Matrix<Scalar>>& u_left,
                                    const Eigen::Ref<const Matrix<Scalar>>& u_right) {
  const Index nl = u_left.rows(), nr = u_right.rows();
  if (u_node.rows() != nl * nr)
    throw std::invalid_argument("transfer_tensor: node rows must equal product of child rows");
  const Index rs = u_node.cols(), rl = u_left.cols(), rr = u_right.cols();

  DenseTensor<Scalar> b{Shape{rs, rl, rr}};
  Matrix<Scalar> small(rl, nr);
  for (Index i = 0; i < rs; ++i) {
    Eigen::Map<const Matrix<Scalar>> ui(u_node.col(i).data(), nl, nr);
    small.noalias() = u_left.transpose() * ui;
    const Matrix<Scalar> bi = small * u_right;  // rl x rr
    for (Index k = 0; k < rr; ++k)
      for (Index j = 0; j < rl; ++j) b[i + j * rs + k * rs * rl] = bi(j, k);
  }
  return b;
}

/// Root transfer: B(0, j, k) = < vec(X), v_j (x) w_k >, contracting the
/// (n_left x n_right) matricization of X against the root children's bases.
template <class Scalar>
DenseTensor<Scalar> root_transfer(const DenseTensor<Scalar>& x,
                                  const Eigen::Ref<const Matrix<Scalar>>& u_left,
                                  const Eigen::Ref<const Matrix<Scalar>>& u_right) {
  const Index nl = u_left.rows(), nr = u_right.rows();
  if (nl * nr != x.size())
    throw std::invalid_argument("root_transfer: child rows do not factor the tensor size");
  Eigen::Map<const Matrix<Scalar>> m(x.data(), nl, nr);
  const Index rl = u_left.cols(), rr = u_right.cols();

  Matrix<Scalar> small(rl, nr);
  small.noalias() = u_left.transpose() * m;
  const Matrix<Scalar> b0 = small * u_right;

  DenseTensor<Scalar> b{Shape{1, rl, rr}};
  for (Index k = 0; k < rr; ++k)
    for (Index j = 0; j < rl; ++j) b[j + k * rl] = b0(j, k);
  return b;
}

/// Expands an internal node's basis from its children and transfer tensor.
template <class Scalar>
Matrix<Scalar> expand_node_basis(const Eigen::Ref<const Matrix<Scalar>>& u_left,
                                 const Eigen::Ref<const Matrix<Scalar>>& u_right,
                                 const DenseTensor<Scalar>& b) {
  const Index rs = b.dim(0), rl = b.dim(1), rr = b.dim(2);
  if (u_left.cols() != rl || u_right.cols() != rr)
    throw std::invalid_argument("expand_node_basis: transfer/children rank mismatch");
  const Index nl = u_left.rows(), nr = u_right.rows();
  Matrix<Scalar> u(nl * nr, rs);
  Matrix<Scalar> tall(nl, rr);
  for (Index i = 0; i < rs; ++i) {
    const Matrix<Scalar> bi = detail::transfer_slice(b, i);
    tall.noalias() = u_left * bi;
    Eigen::Map<Matrix<Scalar>> ui(u.col(i).data(), nl, nr);
    ui.noalias() = tall * u_right.transpose();
  }
  return u;
}

namespace detail {

inline void validate_node_ranks(const DimensionTree& tree, const Shape& shape,
                                const NodeRanks& ranks, const char* what) {
  if (static_cast<Index>(ranks.size()) != tree.num_nodes())
    throw std::invalid_argument(std::string(what) + ": rank vector must have one entry per node");
  if (ranks[0] != 1)
    throw std::invalid_argument(std::string(what) + ": root rank must be 1");
  for (Index i = 1; i < tree.num_nodes(); ++i) {
    const Index r = ranks[static_cast<std::size_t>(i)];
    const Index max_r = std::min(tree.node_rows(i, shape), tree.node_cols(i, shape));
    if (r < 1 || r > max_r)
      throw std::invalid_argument(std::string(what) + ": rank out of range at node " +
                                  std::to_string(i));
  }
}

// Leading left singular vectors of a node's mode-set unfolding. When the
// node holds the leading modes the unfolding is a plain reshape, so the SVD
// runs on a zero-copy view of the data.
template <class Scalar>
Matrix<Scalar> node_unfolding_basis(const DenseTensor<Scalar>& x, const DimensionTree& tree,
                                    Index id, Index rank, std::int64_t cap_bytes) {
  const ModeSet& modes = tree.node(id).modes;
  if (is_leading_block(modes)) {
    const Index rows = tree.node_rows(id, x.shape());
    Eigen::Map<const Matrix<Scalar>> view(x.data(), rows, x.size() / rows);
    return leading_left_singular_vectors<Scalar>(view, rank);
  }
  if (modes.size() == 1)
    return leading_left_singular_vectors<Scalar>(unfold(x, modes[0], cap_bytes), rank);
  return leading_left_singular_vectors<Scalar>(unfold_set(x, modes, cap_bytes), rank);
}

}  // namespace detail

/// Deterministic root-to-leaves hierarchical Tucker: every node basis comes
/// from a truncated SVD of the input tensor's own mode-set unfolding (the
/// Tucker core is never formed), then transfer tensors tie each internal
/// node to its children and the root transfer closes the format.
template <class Scalar>
HTuckerDecomposition<Scalar> rtl_ht(const DenseTensor<Scalar>& x, const DimensionTree& tree,
                                    const NodeRanks& ranks,
                                    std::int64_t cap_bytes = kDefaultUnfoldCapBytes) {
  const Shape& shape = x.shape();
  if (tree.order() != shape.order())
    throw std::invalid_argument("rtl_ht: tree and tensor order mismatch");
  detail::validate_node_ranks(tree, shape, ranks, "rtl_ht");

  std::vector<Matrix<Scalar>> bases(static_cast<std::size_t>(tree.num_nodes()));

  // The root children split the modes into a leading and a trailing block,
  // so their unfoldings are one zero-copy reshape and its transpose: one
  // SVD yields both bases.
  {
    const TreeNode& root = tree.node(0);
    const Index rows = tree.node_rows(root.left, shape);
    Eigen::Map<const Matrix<Scalar>> m(x.data(), rows, x.size() / rows);
    Eigen::BDCSVD<Matrix<Scalar>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    bases[static_cast<std::size_t>(root.left)] =
        svd.matrixU().leftCols(ranks[static_cast<std::size_t>(root.left)]);
    bases[static_cast<std::size_t>(root.right)] =
        svd.matrixV().leftCols(ranks[static_cast<std::size_t>(root.right)]);
  }
  for (Index id = 3; id < tree.num_nodes(); ++id)
    bases[static_cast<std::size_t>(id)] = detail::node_unfolding_basis(
        x, tree, id, ranks[static_cast<std::size_t>(id)], cap_bytes);

  HTuckerDecomposition<Scalar> out{tree, {}, {}};
  out.leaf_factors.resize(static_cast<std::size_t>(tree.order()));
  for (Index id : tree.leaves())
    out.leaf_factors[static_cast<std::size_t>(tree.node(id).modes[0])] =
        bases[static_cast<std::size_t>(id)];

  out.transfers.resize(static_cast<std::size_t>(tree.num_nodes()));
  for (Index id : tree.internal_nodes_bottom_up()) {
    const TreeNode& n = tree.node(id);
    out.transfers[static_cast<std::size_t>(id)] =
        transfer_tensor<Scalar>(bases[static_cast<std::size_t>(id)],
                                bases[static_cast<std::size_t>(n.left)],
                                bases[static_cast<std::size_t>(n.right)]);
  }
  const TreeNode& root = tree.node(0);
  out.transfers[0] = root_transfer<Scalar>(x, bases[static_cast<std::size_t>(root.left)],
                                   bases[static_cast<std::size_t>(root.right)]);
  return out;
}

/// Per-node diagnostics of the subsampled hierarchical decomposition.
struct HtSubsampleReport {
  NodeRanks sample_counts;
  NodeRanks achieved_ranks;
  std::vector<std::string> warnings;
  StageTimings timings;
};

/// Subsampled randomized root-to-leaves hierarchical Tucker: each node
/// basis is built from w_S sampled fibers of the input followed by a
/// Gaussian range finder, so no mode-set unfolding is ever materialized.
/// All node jobs read only the input tensor, making every basis at any
/// tree level computable concurrently; transfer tensors wait for the
/// involved bases, and the root transfer fires when the root children are
/// done (or after every basis when the policy emulates a serial root).
template <class Scalar>
HTuckerDecomposition<Scalar> sub_r_rtl_ht(const DenseTensor<Scalar>& x,
                                          const DimensionTree& tree, const NodeRanks& ranks,
                                          const NodeRanks& samples, Index oversampling,
                                          std::uint64_t seed,
                                          const std::optional<ExecPolicy>& exec = std::nullopt,
                                          HtSubsampleReport* report = nullptr) {
  const Shape& shape = x.shape();
  if (tree.order() != shape.order())
    throw std::invalid_argument("sub_r_rtl_ht: tree and tensor order mismatch");
  detail::validate_node_ranks(tree, shape, ranks, "sub_r_rtl_ht");
  if (static_cast<Index>(samples.size()) != tree.num_nodes())
    throw std::invalid_argument("sub_r_rtl_ht: samples vector must have one entry per node");
  for (Index id = 1; id < tree.num_nodes(); ++id) {
    const Index r = ranks[static_cast<std::size_t>(id)];
    const Index w = samples[static_cast<std::size_t>(id)];
    const Index cols = tree.node_cols(id, shape);
    if (w < r + oversampling)
      throw std::invalid_argument("sub_r_rtl_ht: samples below rank + oversampling at node " +
                                  std::to_string(id));
    if (w > cols)
      throw std::invalid_argument("sub_r_rtl_ht: more samples than fibers at node " +
                                  std::to_string(id));
  }

  HtSubsampleReport local_report;
  HtSubsampleReport& rep = report ? *report : local_report;
  rep.sample_counts = samples;
  rep.achieved_ranks.assign(static_cast<std::size_t>(tree.num_nodes()), 0);
  rep.achieved_ranks[0] = 1;
  if (oversampling < 4)
    rep.warnings.push_back("oversampling below the recommended minimum of 4");

  const ExecPolicy policy = exec.value_or(ExecPolicy{});
  const Index partitions = policy.index_partitions;

  std::vector<RangeBasis<Scalar>> bases(static_cast<std::size_t>(tree.num_nodes()));
  std::vector<DenseTensor<Scalar>> transfers(static_cast<std::size_t>(tree.num_nodes()));

  // One basis job per non-root node, one transfer job per internal node,
  // one root-transfer job. Randomness binds to the node id.
  std::vector<TreeJob> jobs;
  std::vector<std::size_t> basis_job(static_cast<std::size_t>(tree.num_nodes()));
  for (Index id = 1; id < tree.num_nodes(); ++id) {
    const TreeNode& n = tree.node(id);
    basis_job[static_cast<std::size_t>(id)] = jobs.size();
    const Index rows = tree.node_rows(id, shape);
    const Index w = samples[static_cast<std::size_t>(id)];
    const Index r = ranks[static_cast<std::size_t>(id)];
    TreeJob job;
    job.stage = stage::kSvd;
    job.sim_cost = static_cast<double>(rows) * static_cast<double>(w) *
                   static_cast<double>(r + oversampling);
    job.run = [&, id, w, r, n](int worker, StageTimings& timings) {
      RngStream rng(seed, static_cast<std::uint64_t>(id));
      const Index cols = tree.node_cols(id, shape);

      double t0 = StageClock::now();
      std::vector<Index> picked = (partitions > 1)
                                      ? sample_indices_partitioned(cols, w, partitions, rng)
                                      : sample_indices(cols, w, rng);
      timings.add(stage::kSampling, worker, StageClock::now() - t0);

      t0 = StageClock::now();
      const Matrix<Scalar> y = n.is_leaf() ? extract_fibers(x, n.modes[0], picked)
                                           : extract_group_fibers(x, n.modes, picked);
      timings.add(stage::kExtract, worker, StageClock::now() - t0);

      t0 = StageClock::now();
      const Matrix<Scalar> omega = gaussian_matrix<Scalar>(y.cols(), r + oversampling, rng);
      Matrix<Scalar> sketch(y.rows(), r + oversampling);
      sketch.noalias() = y * omega;
      timings.add(stage::kSketch, worker, StageClock::now() - t0);

      t0 = StageClock::now();
      bases[static_cast<std::size_t>(id)] = range_basis_of_sketch<Scalar>(sketch, r, rng);
      timings.add(stage::kSvd, worker, StageClock::now() - t0);
    };
    jobs.push_back(std::move(job));
  }
  for (Index id : tree.internal_nodes_bottom_up()) {
    const TreeNode& n = tree.node(id);
    TreeJob job;
    job.stage = stage::kTransfer;
    job.sim_cost = 1.0;
    job.deps = {basis_job[static_cast<std::size_t>(id)],
                basis_job[static_cast<std::size_t>(n.left)],
                basis_job[static_cast<std::size_t>(n.right)]};
    job.run = [&, id, n](int worker, StageTimings& timings) {
      const double t0 = StageClock::now();
      transfers[static_cast<std::size_t>(id)] =
          transfer_tensor<Scalar>(bases[static_cast<std::size_t>(id)].q,
                                  bases[static_cast<std::size_t>(n.left)].q,
                                  bases[static_cast<std::size_t>(n.right)].q);
      timings.add(stage::kTransfer, worker, StageClock::now() - t0);
    };
    jobs.push_back(std::move(job));
  }
  {
    const TreeNode& root = tree.node(0);
    TreeJob job;
    job.stage = "root_transfer";
    job.sim_cost = 1.0;
    job.deps = {basis_job[static_cast<std::size_t>(root.left)],
                basis_job[static_cast<std::size_t>(root.right)]};
    job.run = [&, root](int worker, StageTimings& timings) {
      const double t0 = StageClock::now();
      transfers[0] = root_transfer<Scalar>(x, bases[static_cast<std::size_t>(root.left)].q,
                                   bases[static_cast<std::size_t>(root.right)].q);
      timings.add(stage::kSerialTail, worker, StageClock::now() - t0);
    };
    jobs.push_back(std::move(job));
  }

  rep.timings.merge(tree_schedule(jobs, policy));

  for (Index id = 1; id < tree.num_nodes(); ++id) {
    rep.achieved_ranks[static_cast<std::size_t>(id)] =
        bases[static_cast<std::size_t>(id)].numerical_rank;
    if (bases[static_cast<std::size_t>(id)].numerical_rank < ranks[static_cast<std::size_t>(id)])
      rep.warnings.push_back("node " + std::to_string(id) + ": sketch revealed rank " +
                             std::to_string(bases[static_cast<std::size_t>(id)].numerical_rank) +
                             " < target; basis padded");
  }

  HTuckerDecomposition<Scalar> out{tree, {}, std::move(transfers)};
  out.leaf_factors.resize(static_cast<std::size_t>(tree.order()));
  for (Index id : tree.leaves())
    out.leaf_factors[static_cast<std::size_t>(tree.node(id).modes[0])] =
        std::move(bases[static_cast<std::size_t>(id)].q);
  return out;
}

/// Expands a hierarchical decomposition back to the dense tensor: node
/// bases are rebuilt bottom-up from the leaves, then the root transfer
/// contracts the two root-children bases.
template <class Scalar>
DenseTensor<Scalar> ht_reconstruct(const HTuckerDecomposition<Scalar>& h) {
  const DimensionTree& tree = h.tree;
  std::vector<Matrix<Scalar>> bases(static_cast<std::size_t>(tree.num_nodes()));
  for (Index id : tree.leaves())
    bases[static_cast<std::size_t>(id)] =
        h.leaf_factors[static_cast<std::size_t>(tree.node(id).modes[0])];

  auto ordered = tree.internal_nodes_bottom_up();
  for (Index id : ordered) {
    const TreeNode& n = tree.node(id);
    bases[static_cast<std::size_t>(id)] =
        expand_node_basis<Scalar>(bases[static_cast<std::size_t>(n.left)],
                                  bases[static_cast<std::size_t>(n.right)],
                                  h.transfers[static_cast<std::size_t>(id)]);
  }

  const TreeNode& root = tree.node(0);
  const Matrix<Scalar>& ul = bases[static_cast<std::size_t>(root.left)];
  const Matrix<Scalar>& ur = bases[static_cast<std::size_t>(root.right)];
  const Matrix<Scalar> b0 = detail::transfer_slice(h.transfers[0], 0);
  Matrix<Scalar> flat(ul.rows(), ur.rows());
  flat.noalias() = ul * (b0 * ur.transpose());

  // The (n_left x n_right) matrix is exactly the vectorized tensor.
  std::vector<Index> dims(static_cast<std::size_t>(tree.order()));
  for (Index id : tree.leaves()) {
    const Index mode = tree.node(id).modes[0];
    dims[static_cast<std::size_t>(mode)] = h.leaf_factors[static_cast<std::size_t>(mode)].rows();
  }
  Vector<Scalar> data = Eigen::Map<const Vector<Scalar>>(flat.data(), flat.size());
  return DenseTensor<Scalar>(Shape(dims), std::move(data));
}

/// Exact element count of the compressed representation: leaf factors plus
/// every transfer tensor (including the root's 1 x r x r block).
template <class Scalar>
Index ht_storage_count(const HTuckerDecomposition<Scalar>& h) {
  Index count = 0;
  for (const auto& u : h.leaf_factors) count += u.size();
  for (const auto& b : h.transfers) count += b.size();
  return count;
}

}  // namespace srtt
