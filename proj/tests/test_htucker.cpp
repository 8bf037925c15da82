#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "srtt/generators.hpp"
#include "srtt/unfolding.hpp"

#include <algorithm>

using namespace srtt;

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

Matrix<double> random_orthonormal(Index rows, Index cols, std::uint64_t seed) {
  RngStream rng(seed, 0);
  const Matrix<double> g = gaussian_matrix(rows, cols, rng);
  Eigen::HouseholderQR<Matrix<double>> qr(g);
  Matrix<double> q = Matrix<double>::Identity(rows, cols);
  q = qr.householderQ() * q;
  return q;
}

}  // namespace

TEST_CASE("balanced tree for two modes is a root with two leaves") {
  const auto tree = DimensionTree::balanced(2);
  CHECK(tree.num_nodes() == 3);
  CHECK(tree.node(0).modes == ModeSet{0, 1});
  CHECK(tree.node(1).modes == ModeSet{0});
  CHECK(tree.node(2).modes == ModeSet{1});
  CHECK(tree.depth() == 1);
  CHECK_THROWS_AS(DimensionTree::balanced(1), std::invalid_argument);
}

TEST_CASE("balanced tree for eight modes matches the complete layout") {
  const auto tree = DimensionTree::balanced(8);
  CHECK(tree.num_nodes() == 15);
  CHECK(tree.depth() == 3);
  // Level 1 and level 2 internal nodes in heap order.
  CHECK(tree.node(1).modes == ModeSet{0, 1, 2, 3});
  CHECK(tree.node(2).modes == ModeSet{4, 5, 6, 7});
  CHECK(tree.node(3).modes == ModeSet{0, 1});
  CHECK(tree.node(4).modes == ModeSet{2, 3});
  CHECK(tree.node(5).modes == ModeSet{4, 5});
  CHECK(tree.node(6).modes == ModeSet{6, 7});
  CHECK(tree.leaves().size() == 8);
}

TEST_CASE("balanced tree for five modes splits by halving") {
  const auto tree = DimensionTree::balanced(5);
  CHECK(tree.node(1).modes == ModeSet{0, 1, 2});
  CHECK(tree.node(2).modes == ModeSet{3, 4});
  CHECK(tree.depth() == 3);
  CHECK(tree.leaves().size() == 5);
}

TEST_CASE("tree validation rejects broken structures") {
  // Non-contiguous split: left child holding modes {0, 2}.
  std::vector<TreeNode> nodes;
  nodes.push_back(TreeNode{ModeSet{0, 1, 2}, 1, 2, -1, 0});
  nodes.push_back(TreeNode{ModeSet{0, 2}, -1, -1, 0, 1});
  nodes.push_back(TreeNode{ModeSet{1}, -1, -1, 0, 1});
  CHECK_THROWS_AS(DimensionTree{nodes}, std::invalid_argument);
}

TEST_CASE("transfer tensor of a self-expansion is an identity selection") {
  const Index nl = 4, nr = 3, rl = 2, rr = 2;
  const Matrix<double> ul = random_orthonormal(nl, rl, 41);
  const Matrix<double> ur = random_orthonormal(nr, rr, 42);
  const Matrix<double> us = testing::kron_left_fastest(ul, ur);  // r_s = rl*rr columns

  const auto b = transfer_tensor<double>(us, ul, ur);
  CHECK(b.shape() == Shape{rl * rr, rl, rr});
  // Column i of us is u_l(:, i % rl) (x) u_r(:, i / rl) in the left-fastest
  // layout, so B(i, j, k) selects exactly that pair.
  for (Index i = 0; i < rl * rr; ++i)
    for (Index j = 0; j < rl; ++j)
      for (Index k = 0; k < rr; ++k)
        CHECK(b(i, j, k) == doctest::Approx(i == j + k * rl ? 1.0 : 0.0).epsilon(1e-12));
}

TEST_CASE("transfer tensor matches the explicit Kronecker oracle") {
  const Index nl = 3, nr = 3, rs = 2, rl = 2, rr = 2;
  const Matrix<double> us = testing::random_matrix(nl * nr, rs, 43);
  const Matrix<double> ul = testing::random_matrix(nl, rl, 44);
  const Matrix<double> ur = testing::random_matrix(nr, rr, 45);

  const auto b = transfer_tensor<double>(us, ul, ur);
  for (Index i = 0; i < rs; ++i)
    for (Index j = 0; j < rl; ++j)
      for (Index k = 0; k < rr; ++k) {
        // < u_i, v_j (x) w_k > with the left index fastest.
        double dot = 0.0;
        for (Index a = 0; a < nl; ++a)
          for (Index c = 0; c < nr; ++c) dot += us(a + c * nl, i) * ul(a, j) * ur(c, k);
        CHECK(b(i, j, k) == doctest::Approx(dot).epsilon(1e-13));
      }
  CHECK_THROWS_AS(transfer_tensor<double>(us, testing::random_matrix(2, 2, 46), ur),
                  std::invalid_argument);
}

TEST_CASE("nested bases reproduce exactly through the transfer tensor") {
  // U_s inside Range(U_l (x) U_r) by construction.
  const Index nl = 4, nr = 5, rl = 3, rr = 2, rs = 4;
  const Matrix<double> ul = random_orthonormal(nl, rl, 47);
  const Matrix<double> ur = random_orthonormal(nr, rr, 48);
  const Matrix<double> kron = testing::kron_left_fastest(ul, ur);
  const Matrix<double> coeff = random_orthonormal(rl * rr, rs, 49);
  const Matrix<double> us = kron * coeff;

  const auto b = transfer_tensor<double>(us, ul, ur);
  const Matrix<double> rebuilt = expand_node_basis<double>(ul, ur, b);
  CHECK((us - rebuilt).norm() <= 1e-10 * us.norm());
}

TEST_CASE("root transfer picks out Kronecker coefficients") {
  const Index nl = 4, nr = 3;
  const Matrix<double> ul = random_orthonormal(nl, 2, 51);
  const Matrix<double> ur = random_orthonormal(nr, 2, 52);

  // X = v_1 (x) w_1 refolded: B(0, 0, 0) = 1, everything else 0.
  Vector<double> vec(nl * nr);
  for (Index c = 0; c < nr; ++c)
    for (Index a = 0; a < nl; ++a) vec(a + c * nl) = ul(a, 0) * ur(c, 0);
  const DenseTensor<double> x{Shape{nl, nr}, vec};
  const auto b = root_transfer<double>(x, ul, ur);
  CHECK(b.shape() == Shape{1, 2, 2});
  CHECK(b(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(b(0, 1, 0)) <= 1e-12);
  CHECK(std::abs(b(0, 0, 1)) <= 1e-12);
  CHECK(std::abs(b(0, 1, 1)) <= 1e-12);

  const DenseTensor<double> zero{Shape{nl, nr}};
  CHECK(frobenius_norm(root_transfer<double>(zero, ul, ur)) == 0.0);

  // Random small case against the explicit vec/Kronecker inner product.
  const auto y = testing::random_tensor(Shape{nl, nr}, 53);
  const auto by = root_transfer<double>(y, ul, ur);
  for (Index j = 0; j < 2; ++j)
    for (Index k = 0; k < 2; ++k) {
      double dot = 0.0;
      for (Index a = 0; a < nl; ++a)
        for (Index c = 0; c < nr; ++c) dot += y(a, c) * ul(a, j) * ur(c, k);
      CHECK(by(0, j, k) == doctest::Approx(dot).epsilon(1e-13));
    }
}

TEST_CASE("rtl-ht recovers a planted hierarchical tensor") {
  const Shape shape = Shape::uniform(4, 15);
  const auto tree = DimensionTree::balanced(4);
  const auto planted = make_planted_htucker<double>(shape, tree, uniform_node_ranks(tree, 5), 3);
  const auto h = rtl_ht(planted.tensor, tree, uniform_node_ranks(tree, 5));
  CHECK(rel_error(planted.tensor, ht_reconstruct(h)) <= 1e-10);
  for (const auto& u : h.leaf_factors) CHECK(orthonormality_defect<double>(u) <= 1e-10);

  // Implied internal bases stay orthonormal on exact-rank input.
  for (Index id : tree.internal_nodes_bottom_up()) {
    const TreeNode& n = tree.node(id);
    const Matrix<double> expanded = expand_node_basis<double>(
        h.leaf_factors[static_cast<std::size_t>(tree.node(n.left).modes[0])],
        h.leaf_factors[static_cast<std::size_t>(tree.node(n.right).modes[0])],
        h.transfers[static_cast<std::size_t>(id)]);
    CHECK(orthonormality_defect<double>(expanded) <= 1e-8);
  }
}

TEST_CASE("rtl-ht on two modes reduces to a truncated SVD factorization") {
  const auto x = testing::random_tensor(Shape{8, 9}, 55);
  const auto tree = DimensionTree::balanced(2);
  NodeRanks ranks = uniform_node_ranks(tree, 4);
  const auto h = rtl_ht(x, tree, ranks);
  const auto svd = truncated_svd<double>(unfold(x, 0), 4);
  const Matrix<double> best = svd.u * svd.singular_values.asDiagonal() * svd.v.transpose();
  const double ht_err = rel_error(x, ht_reconstruct(h)) * frobenius_norm(x);
  CHECK(ht_err == doctest::Approx((unfold(x, 0) - best).norm()).epsilon(1e-9));
}

TEST_CASE("rtl-ht nestedness holds on exact-rank input") {
  const Shape shape = Shape::uniform(4, 8);
  const auto tree = DimensionTree::balanced(4);
  const auto planted = make_planted_htucker<double>(shape, tree, uniform_node_ranks(tree, 3), 7);
  const auto h = rtl_ht(planted.tensor, tree, uniform_node_ranks(tree, 3));

  // Recompute every internal basis from the oracle unfolding and check it
  // equals the child expansion through the stored transfer tensor.
  for (Index id : tree.internal_nodes_bottom_up()) {
    const TreeNode& n = tree.node(id);
    const Matrix<double> u_s = leading_left_singular_vectors<double>(
        testing::loop_unfold_set(planted.tensor, n.modes), 3);

    Matrix<double> ul, ur;
    if (tree.node(n.left).is_leaf()) {
      ul = h.leaf_factors[static_cast<std::size_t>(tree.node(n.left).modes[0])];
    } else {
      ul = expand_node_basis<double>(
          h.leaf_factors[static_cast<std::size_t>(tree.node(tree.node(n.left).left).modes[0])],
          h.leaf_factors[static_cast<std::size_t>(tree.node(tree.node(n.left).right).modes[0])],
          h.transfers[static_cast<std::size_t>(n.left)]);
    }
    if (tree.node(n.right).is_leaf()) {
      ur = h.leaf_factors[static_cast<std::size_t>(tree.node(n.right).modes[0])];
    } else {
      ur = expand_node_basis<double>(
          h.leaf_factors[static_cast<std::size_t>(tree.node(tree.node(n.right).left).modes[0])],
          h.leaf_factors[static_cast<std::size_t>(tree.node(tree.node(n.right).right).modes[0])],
          h.transfers[static_cast<std::size_t>(n.right)]);
    }
    const Matrix<double> rebuilt =
        expand_node_basis<double>(ul, ur, h.transfers[static_cast<std::size_t>(id)]);
    // Bases agree as subspaces: the projector gap vanishes.
    const Matrix<double> gap = u_s * u_s.transpose() - rebuilt * rebuilt.transpose();
    CHECK(gap.norm() <= 1e-8 * u_s.norm());
  }
}

TEST_CASE("sub-r-rtl-ht recovers a planted hierarchical tensor") {
  const Shape shape = Shape::uniform(4, 15);
  const auto tree = DimensionTree::balanced(4);
  const auto planted = make_planted_htucker<double>(shape, tree, uniform_node_ranks(tree, 5), 11);
  const NodeRanks budget = node_sample_counts(tree, shape, 20.0);

  std::vector<double> errs;
  for (std::uint64_t seed = 0; seed < 9; ++seed) {
    HtSubsampleReport rep;
    const auto h = sub_r_rtl_ht(planted.tensor, tree, uniform_node_ranks(tree, 5), budget, 4,
                                seed, std::nullopt, &rep);
    errs.push_back(rel_error(planted.tensor, ht_reconstruct(h)));
    for (Index id = 1; id < tree.num_nodes(); ++id)
      CHECK(rep.achieved_ranks[static_cast<std::size_t>(id)] == 5);
  }
  CHECK(median_of(errs) <= 1e-7);
}

TEST_CASE("sub-r-rtl-ht handles the full depth-3 tree of eight modes") {
  // Same structure as the order-8 experiments, scaled down to fit: 15 tree
  // nodes, uniform per-node fiber budget.
  const Shape shape = Shape::uniform(8, 6);
  const auto tree = DimensionTree::balanced(8);
  const auto planted = make_planted_htucker<double>(shape, tree, uniform_node_ranks(tree, 3), 29);

  NodeRanks budget(static_cast<std::size_t>(tree.num_nodes()), 1);
  for (Index i = 1; i < tree.num_nodes(); ++i)
    budget[static_cast<std::size_t>(i)] = std::min<Index>(120, tree.node_cols(i, shape));

  std::vector<double> errs;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto h = sub_r_rtl_ht(planted.tensor, tree, uniform_node_ranks(tree, 3), budget, 4, seed);
    errs.push_back(rel_error(planted.tensor, ht_reconstruct(h)));
  }
  CHECK(median_of(errs) <= 1e-7);
}

TEST_CASE("sub-r-rtl-ht with full sampling is exact on exact-rank input") {
  const Shape shape = Shape::uniform(4, 8);
  const auto tree = DimensionTree::balanced(4);
  const auto planted = make_planted_htucker<double>(shape, tree, uniform_node_ranks(tree, 3), 13);
  NodeRanks full(static_cast<std::size_t>(tree.num_nodes()), 1);
  for (Index i = 1; i < tree.num_nodes(); ++i) full[static_cast<std::size_t>(i)] =
      tree.node_cols(i, shape);
  const auto h =
      sub_r_rtl_ht(planted.tensor, tree, uniform_node_ranks(tree, 3), full, 4, 17);
  CHECK(rel_error(planted.tensor, ht_reconstruct(h)) <= 1e-9);
}

TEST_CASE("per-node sampling rule caps at the available fibers") {
  const Shape shape = Shape::uniform(6, 15);
  const auto tree = DimensionTree::balanced(6);
  const NodeRanks budget = node_sample_counts(tree, shape, 20.0);
  for (Index i = 1; i < tree.num_nodes(); ++i) {
    const Index rows = tree.node_rows(i, shape);
    const Index cols = tree.node_cols(i, shape);
    CHECK(budget[static_cast<std::size_t>(i)] ==
          std::min(static_cast<Index>(std::ceil(20.0 * rows)), cols));
  }
}

TEST_CASE("sub-r-rtl-ht is deterministic in the seed") {
  const Shape shape = Shape::uniform(4, 9);
  const auto tree = DimensionTree::balanced(4);
  const auto planted = make_planted_htucker<double>(shape, tree, uniform_node_ranks(tree, 3), 19);
  const NodeRanks budget = node_sample_counts(tree, shape, 10.0);
  const auto a = sub_r_rtl_ht(planted.tensor, tree, uniform_node_ranks(tree, 3), budget, 4, 31);
  const auto b = sub_r_rtl_ht(planted.tensor, tree, uniform_node_ranks(tree, 3), budget, 4, 31);
  for (std::size_t k = 0; k < a.leaf_factors.size(); ++k)
    CHECK((a.leaf_factors[k] - b.leaf_factors[k]).cwiseAbs().maxCoeff() == 0.0);
  for (Index i = 0; i < tree.num_nodes(); ++i)
    if (!tree.node(i).is_leaf())
      CHECK((a.transfers[static_cast<std::size_t>(i)].vec() -
             b.transfers[static_cast<std::size_t>(i)].vec())
                .cwiseAbs()
                .maxCoeff() == 0.0);
}

TEST_CASE("serial-root emulation changes scheduling but not the numbers") {
  const Shape shape = Shape::uniform(4, 9);
  const auto tree = DimensionTree::balanced(4);
  const auto planted = make_planted_htucker<double>(shape, tree, uniform_node_ranks(tree, 3), 23);
  const NodeRanks budget = node_sample_counts(tree, shape, 10.0);

  ExecPolicy eager;
  eager.workers = 4;
  ExecPolicy serial_root = eager;
  serial_root.emulate_serial_root = true;

  const auto a =
      sub_r_rtl_ht(planted.tensor, tree, uniform_node_ranks(tree, 3), budget, 4, 13, eager);
  const auto b =
      sub_r_rtl_ht(planted.tensor, tree, uniform_node_ranks(tree, 3), budget, 4, 13, serial_root);
  CHECK((a.transfers[0].vec() - b.transfers[0].vec()).cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t k = 0; k < a.leaf_factors.size(); ++k)
    CHECK((a.leaf_factors[k] - b.leaf_factors[k]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ht reconstruction matches the explicit Kronecker oracle") {
  const Shape shape{2, 2, 2, 2};
  const auto tree = DimensionTree::balanced(4);
  const auto x = testing::random_tensor(shape, 59);
  NodeRanks full = uniform_node_ranks(tree, 4);
  for (Index i = 1; i < tree.num_nodes(); ++i)
    full[static_cast<std::size_t>(i)] =
        std::min(tree.node_rows(i, shape), tree.node_cols(i, shape));
  const auto h = rtl_ht(x, tree, full);

  // Oracle: expand every internal basis with materialized Kronecker
  // products in the left-fastest convention.
  std::vector<Matrix<double>> bases(static_cast<std::size_t>(tree.num_nodes()));
  for (Index id : tree.leaves())
    bases[static_cast<std::size_t>(id)] =
        h.leaf_factors[static_cast<std::size_t>(tree.node(id).modes[0])];
  for (Index id : tree.internal_nodes_bottom_up()) {
    const TreeNode& n = tree.node(id);
    const Matrix<double> kron =
        testing::kron_left_fastest(bases[static_cast<std::size_t>(n.left)],
                                   bases[static_cast<std::size_t>(n.right)]);
    // Mode-1 unfolding of B has entry (i, j + k*rl); expansion is kron * unfold^T.
    const auto& b = h.transfers[static_cast<std::size_t>(id)];
    Matrix<double> b1(b.dim(0), b.dim(1) * b.dim(2));
    for (Index i = 0; i < b.dim(0); ++i)
      for (Index j = 0; j < b.dim(1); ++j)
        for (Index k = 0; k < b.dim(2); ++k) b1(i, j + k * b.dim(1)) = b(i, j, k);
    bases[static_cast<std::size_t>(id)] = kron * b1.transpose();
  }
  const TreeNode& root = tree.node(0);
  const Matrix<double> kron =
      testing::kron_left_fastest(bases[static_cast<std::size_t>(root.left)],
                                 bases[static_cast<std::size_t>(root.right)]);
  const auto& br = h.transfers[0];
  Vector<double> coeff(br.dim(1) * br.dim(2));
  for (Index j = 0; j < br.dim(1); ++j)
    for (Index k = 0; k < br.dim(2); ++k) coeff(j + k * br.dim(1)) = br(0, j, k);
  const Vector<double> vec = kron * coeff;
  const DenseTensor<double> oracle{shape, vec};

  CHECK(rel_error(oracle, ht_reconstruct(h)) <= 1e-12);
  CHECK(rel_error(x, ht_reconstruct(h)) <= 1e-10);  // full hierarchical rank is exact
}

TEST_CASE("single-entry tensor round-trips through the hierarchical format") {
  DenseTensor<double> x{Shape{1, 1}};
  x[0] = 3.5;
  const auto tree = DimensionTree::balanced(2);
  const auto h = rtl_ht(x, tree, uniform_node_ranks(tree, 1));
  const auto back = ht_reconstruct(h);
  CHECK(back(0, 0) == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("rtl-ht truncation error stays within the node tail energies") {
  // On truncation problems the squared error is bounded by the sum of
  // squared node-unfolding tails, and hence by sqrt(2d-3) times any upper
  // bound on the best error at the hierarchical rank (the two root
  // children share their spectrum, so one of the 2d-2 node terms is
  // redundant).
  const Index d = 4;
  const auto tree = DimensionTree::balanced(d);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = testing::random_tensor(Shape::uniform(d, 6), 600 + seed);
    const NodeRanks ranks = uniform_node_ranks(tree, 2);
    const auto h = rtl_ht(x, tree, ranks);
    const double err = rel_error(x, ht_reconstruct(h)) * frobenius_norm(x);

    double tail_sq_sum = 0.0;
    for (Index id = 1; id < tree.num_nodes(); ++id) {
      const Matrix<double> mat = testing::loop_unfold_set(x, tree.node(id).modes);
      Eigen::BDCSVD<Matrix<double>> svd(mat);
      for (Index i = ranks[static_cast<std::size_t>(id)]; i < svd.singularValues().size(); ++i)
        tail_sq_sum += svd.singularValues()(i) * svd.singularValues()(i);
    }
    CHECK(err * err <= tail_sq_sum + 1e-10);
    CHECK(err <= std::sqrt(2.0 * d - 3.0) * std::sqrt(tail_sq_sum) + 1e-10);
  }
}

TEST_CASE("hierarchical storage counts are exact") {
  {
    const auto tree = DimensionTree::balanced(2);
    const Shape shape{4, 4};
    const auto planted = make_planted_htucker<double>(shape, tree, uniform_node_ranks(tree, 2), 1);
    // Two 4x2 leaf factors plus the 1x2x2 root transfer.
    CHECK(ht_storage_count(planted.truth) == 20);
  }
  {
    const auto tree = DimensionTree::balanced(3);
    const Shape shape{5, 5, 5};
    NodeRanks ones = uniform_node_ranks(tree, 1);
    const auto planted = make_planted_htucker<double>(shape, tree, ones, 2);
    // All ranks 1: sum of n_k plus one transfer entry per internal node.
    CHECK(ht_storage_count(planted.truth) == 15 + 2);
  }
  {
    const auto tree = DimensionTree::balanced(8);
    // d=8, n=15, r=5 everywhere: 8 leaf factors of 15x5, 6 internal 5x5x5
    // transfers, one 1x5x5 root transfer.
    NodeRanks ranks = uniform_node_ranks(tree, 5);
    Index expected = 8 * 75 + 6 * 125 + 25;
    HTuckerDecomposition<double> h{tree, {}, {}};
    h.leaf_factors.assign(8, Matrix<double>::Zero(15, 5));
    h.transfers.resize(static_cast<std::size_t>(tree.num_nodes()));
    for (Index i = 0; i < tree.num_nodes(); ++i) {
      const TreeNode& n = tree.node(i);
      if (n.is_leaf()) continue;
      h.transfers[static_cast<std::size_t>(i)] =
          DenseTensor<double>{Shape{i == 0 ? 1 : 5, 5, 5}};
    }
    CHECK(ht_storage_count(h) == expected);
  }
}
