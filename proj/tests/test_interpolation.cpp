#include <doctest.h>

#include <set>

#include "stlod/interpolation.hpp"
#include "support/fixtures.hpp"

using namespace stlod;

TEST_SUITE("interpolation") {

TEST_CASE("projectivity: interpolating a prolonged coarse function is the identity") {
  auto d = testing::make_desk();
  const int nc = d.pair.coarse.interior_count();
  const Eigen::MatrixXd product =
      Eigen::MatrixXd(d.interp.matrix * d.interp.prolongation) -
      Eigen::MatrixXd::Identity(nc, nc);
  CHECK(product.lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("zero maps to zero and dimensions are enforced") {
  auto d = testing::make_desk();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d.pair.fine.interior_count());
  CHECK(apply(d.interp, zero).norm() == 0.0);
  CHECK_THROWS_AS(apply(d.interp, Eigen::VectorXd::Zero(3)), invalid_argument);
  CHECK_THROWS_AS(apply_transpose(d.interp, Eigen::VectorXd::Zero(3)), invalid_argument);
  CHECK(apply_transpose(d.interp, Eigen::VectorXd::Zero(d.pair.coarse.interior_count()))
            .size() == d.pair.fine.interior_count());
}

TEST_CASE("prolonged hats evaluate to Kronecker deltas at coarse nodes") {
  auto d = testing::make_desk();
  for (int z = 0; z < d.pair.coarse.interior_count(); ++z) {
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(d.pair.coarse.interior_count());
    unit[z] = 1.0;
    const Eigen::VectorXd fine_vals = d.interp.prolongation * unit;
    for (int w = 0; w < d.pair.coarse.interior_count(); ++w) {
      const int fine_node = d.pair.node_embedding[d.pair.coarse.interior_nodes[w]];
      const int fine_dof = d.pair.fine.interior_index[fine_node];
      CHECK(fine_vals[fine_dof] == doctest::Approx(w == z ? 1.0 : 0.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("single fine bubble reproduces the hand-solved local projection") {
  auto d = testing::make_desk();
  const SpatialMesh& coarse = d.pair.coarse;
  const SpatialMesh& fine = d.pair.fine;

  // an interior fine node of coarse element K, away from its edges
  const int K = 18;
  int bubble = -1;
  for (int c : d.pair.element_children[K])
    for (int v : fine.elements[c]) {
      if (fine.interior_index[v] < 0) continue;
      bool inside = true;
      for (int e : fine.node_elements[v]) {
        bool child = false;
        for (int cc : d.pair.element_children[K])
          if (cc == e) child = true;
        if (!child) inside = false;
      }
      if (inside) bubble = v;
    }
  REQUIRE(bubble >= 0);

  // elementwise L2 projection of the bubble by a dense 3x3 solve
  const auto& el = coarse.elements[K];
  Eigen::Matrix3d mloc;
  const double area = coarse.element_area();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) mloc(a, b) = area / 12.0 * (a == b ? 2.0 : 1.0);

  // moments by midpoint quadrature over the children
  Eigen::Vector3d mom = Eigen::Vector3d::Zero();
  const auto& p0 = coarse.nodes[el[0]];
  const auto& p1 = coarse.nodes[el[1]];
  const auto& p2 = coarse.nodes[el[2]];
  const double det = (p1[1] - p2[1]) * (p0[0] - p2[0]) + (p2[0] - p1[0]) * (p0[1] - p2[1]);
  auto bary = [&](double x, double y) {
    Eigen::Vector3d l;
    l[0] = ((p1[1] - p2[1]) * (x - p2[0]) + (p2[0] - p1[0]) * (y - p2[1])) / det;
    l[1] = ((p2[1] - p0[1]) * (x - p0[0]) + (p0[0] - p2[0]) * (y - p0[1])) / det;
    l[2] = 1.0 - l[0] - l[1];
    return l;
  };
  for (int c : d.pair.element_children[K]) {
    const auto& fel = fine.elements[c];
    for (int a = 0; a < 3; ++a) {
      const int u = fel[a], v = fel[(a + 1) % 3];
      const double hatval = 0.5 * ((u == bubble) + (v == bubble));
      if (hatval == 0.0) continue;
      const double mx = 0.5 * (fine.nodes[u][0] + fine.nodes[v][0]);
      const double my = 0.5 * (fine.nodes[u][1] + fine.nodes[v][1]);
      mom += fine.element_area() / 3.0 * hatval * bary(mx, my);
    }
  }
  const Eigen::Vector3d local = mloc.ldlt().solve(mom);

  // averaging shares at the vertices of K
  Eigen::VectorXd bubble_vec = Eigen::VectorXd::Zero(fine.interior_count());
  bubble_vec[fine.interior_index[bubble]] = 1.0;
  const Eigen::VectorXd image = apply(d.interp, bubble_vec);
  for (int a = 0; a < 3; ++a) {
    const int dof = coarse.interior_index[el[a]];
    if (dof < 0) continue;
    const double share = 1.0 / coarse.node_elements[el[a]].size();
    CHECK(image[dof] == doctest::Approx(share * local[a]).epsilon(1e-12));
  }
  // and the image vanishes away from the vertices of K
  std::set<int> verts(el.begin(), el.end());
  for (int z = 0; z < coarse.interior_count(); ++z)
    if (!verts.count(coarse.interior_nodes[z])) CHECK(std::abs(image[z]) <= 1e-14);
}

TEST_CASE("coarse mass pairing matches fine integration through nesting") {
  auto d = testing::make_desk();
  const Sparse mass_coarse = mass_matrix(d.pair.coarse, DofSet::interior);
  const Sparse mass_fine = mass_matrix(d.pair.fine, DofSet::interior);
  SplitMix64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd v(d.pair.fine.interior_count());
    Eigen::VectorXd mu(d.pair.coarse.interior_count());
    for (int i = 0; i < v.size(); ++i) v[i] = rng.next_double() - 0.5;
    for (int i = 0; i < mu.size(); ++i) mu[i] = rng.next_double() - 0.5;
    const Eigen::VectorXd iv = apply(d.interp, v);
    const double coarse_pairing = iv.dot(mass_coarse * mu);
    const double fine_pairing =
        (d.interp.prolongation * iv).dot(mass_fine * (d.interp.prolongation * mu));
    CHECK(coarse_pairing == doctest::Approx(fine_pairing).epsilon(1e-12));
  }
}

TEST_CASE("gradient stability ratio is bounded and mesh-robust") {
  double worst[2] = {0.0, 0.0};
  int level = 0;
  for (auto [nH, nh] : {std::pair{2, 4}, std::pair{3, 5}}) {
    const SpatialMeshPair pair = build_mesh_pair(nH, nh);
    const InterpolationOperator interp = build_quasi_interpolation(pair);
    const Sparse lap_fine = unit_stiffness(pair.fine, DofSet::interior);
    const Sparse lap_coarse = unit_stiffness(pair.coarse, DofSet::interior);
    SplitMix64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd v(pair.fine.interior_count());
      for (int i = 0; i < v.size(); ++i) v[i] = rng.next_double() - 0.5;
      const Eigen::VectorXd iv = interp.matrix * v;
      const double ratio =
          std::sqrt(iv.dot(lap_coarse * iv) / v.dot(lap_fine * v));
      worst[level] = std::max(worst[level], ratio);
    }
    ++level;
  }
  CHECK(worst[0] <= 4.0);
  CHECK(worst[1] <= 4.0);
  CHECK(worst[1] <= 1.5 * worst[0]);
}

TEST_CASE("support spreads by at most one coarse layer") {
  auto d = testing::make_desk();
  const int K = 19;
  // a fine function supported strictly inside K
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d.pair.fine.interior_count());
  for (int c : d.pair.element_children[K])
    for (int node : d.pair.fine.elements[c]) {
      bool inside = true;
      for (int e : d.pair.fine.node_elements[node]) {
        bool child = false;
        for (int cc : d.pair.element_children[K])
          if (cc == e) child = true;
        if (!child) inside = false;
      }
      const int dof = d.pair.fine.interior_index[node];
      if (inside && dof >= 0) v[dof] = 1.0;
    }
  REQUIRE(v.norm() > 0.0);

  const Eigen::VectorXd image = apply(d.interp, v);
  std::set<int> kverts(d.pair.coarse.elements[K].begin(), d.pair.coarse.elements[K].end());
  for (int z = 0; z < d.pair.coarse.interior_count(); ++z)
    if (!kverts.count(d.pair.coarse.interior_nodes[z])) CHECK(std::abs(image[z]) <= 1e-14);
}

}  // TEST_SUITE
