#include "mrlab/fe_space.hpp"

#include <cstdint>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/LU>
#include <fmt/format.h>

namespace mrlab {

LagrangeBasis::LagrangeBasis(int degree) : degree_(degree) {
  if (degree < 1) throw std::invalid_argument(fmt::format("Lagrange degree must be >= 1, got {}", degree));
  const int r = degree;
  lattice_.push_back({r, 0, 0});
  lattice_.push_back({0, r, 0});
  lattice_.push_back({0, 0, r});
  for (int e = 0; e < 3; ++e) {
    const int a = e;
    const int b = (e + 1) % 3;
    for (int m = 1; m < r; ++m) {
      std::array<int, 3> alpha{0, 0, 0};
      alpha[a] = r - m;
      alpha[b] = m;
      lattice_.push_back(alpha);
    }
  }
  for (int i = 1; i < r; ++i)
    for (int j = 1; i + j < r; ++j) lattice_.push_back({r - i - j, i, j});
}

namespace {

// prod_{m < alpha} (r l - m) / (m + 1) and its derivative in l.
void lattice_factor(int r, int alpha, double l, double& value, double& derivative) {
  value = 1.0;
  derivative = 0.0;
  for (int m = 0; m < alpha; ++m) {
    const double f = (r * l - m) / (m + 1.0);
    const double df = r / (m + 1.0);
    derivative = derivative * f + value * df;
    value *= f;
  }
}

}  // namespace

void LagrangeBasis::values(const Eigen::Vector3d& bary, Eigen::Ref<Eigen::VectorXd> out) const {
  for (int i = 0; i < size(); ++i) {
    double v = 1.0;
    for (int a = 0; a < 3; ++a) {
      double f, df;
      lattice_factor(degree_, lattice_[i][a], bary[a], f, df);
      v *= f;
    }
    out[i] = v;
  }
}

void LagrangeBasis::bary_derivatives(const Eigen::Vector3d& bary, Eigen::Ref<Eigen::MatrixXd> out) const {
  for (int i = 0; i < size(); ++i) {
    double f[3], df[3];
    for (int a = 0; a < 3; ++a) lattice_factor(degree_, lattice_[i][a], bary[a], f[a], df[a]);
    out(i, 0) = df[0] * f[1] * f[2];
    out(i, 1) = f[0] * df[1] * f[2];
    out(i, 2) = f[0] * f[1] * df[2];
  }
}

Eigen::Vector3d ElementGeometry::barycentric(const Eigen::Vector2d& x) const {
  const Eigen::Vector2d xi = jacobian.inverse() * (x - origin);
  return {1.0 - xi.x() - xi.y(), xi.x(), xi.y()};
}

FESpace::FESpace(std::shared_ptr<const Mesh> mesh, int degree, int quadrature_degree)
    : mesh_(std::move(mesh)),
      degree_(degree),
      basis_(degree),
      rule_(triangle_rule(quadrature_degree < 0 ? 2 * degree + 2 : quadrature_degree)) {
  if (!mesh_) throw std::invalid_argument("FESpace needs a mesh");
  const Mesh& m = *mesh_;
  const int r = degree_;
  const auto nv = static_cast<int>(m.num_vertices());
  const auto nt = m.num_triangles();
  const int nloc = basis_.size();
  const int per_edge = r - 1;
  const int per_cell = (r - 1) * (r - 2) / 2;

  const auto edges = mesh_edges(m);
  std::unordered_map<std::uint64_t, int> edge_index;
  edge_index.reserve(edges.size());
  std::vector<int> edge_triangles(edges.size(), 0);
  for (std::size_t e = 0; e < edges.size(); ++e)
    edge_index.emplace((static_cast<std::uint64_t>(edges[e][0]) << 32) | static_cast<std::uint32_t>(edges[e][1]),
                       static_cast<int>(e));
  const auto find_edge = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    return edge_index.at((static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b));
  };
  for (const auto& tri : m.triangles)
    for (int e = 0; e < 3; ++e) ++edge_triangles[find_edge(tri[e], tri[(e + 1) % 3])];

  const std::size_t n_nodes = nv + edges.size() * per_edge + nt * per_cell;
  node_coords_.resize(n_nodes);
  node_boundary_.assign(n_nodes, false);
  for (int v = 0; v < nv; ++v) {
    node_coords_[v] = m.vertices[v];
    node_boundary_[v] = m.boundary_vertex[v];
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& p = m.vertices[edges[e][0]];
    const auto& q = m.vertices[edges[e][1]];
    for (int s = 0; s < per_edge; ++s) {
      const std::size_t node = nv + e * per_edge + s;
      node_coords_[node] = p + (static_cast<double>(s + 1) / r) * (q - p);
      node_boundary_[node] = edge_triangles[e] == 1;
    }
  }

  geometry_.resize(nt);
  element_nodes_.resize(nt * nloc);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = m.triangles[t];
    ElementGeometry& g = geometry_[t];
    g.origin = m.vertices[tri[0]];
    g.jacobian.col(0) = m.vertices[tri[1]] - g.origin;
    g.jacobian.col(1) = m.vertices[tri[2]] - g.origin;
    g.area = 0.5 * g.jacobian.determinant();
    if (!(g.area > 0.0)) throw MeshError(fmt::format("triangle {} has non-positive area", t));
    const Eigen::Matrix2d inv = g.jacobian.inverse();
    g.bary_gradients.row(1) = inv.row(0);
    g.bary_gradients.row(2) = inv.row(1);
    g.bary_gradients.row(0) = -(inv.row(0) + inv.row(1));

    int* nodes = element_nodes_.data() + t * nloc;
    for (int a = 0; a < 3; ++a) nodes[a] = tri[a];
    for (int e = 0; e < 3; ++e) {
      const int ga = tri[e];
      const int gb = tri[(e + 1) % 3];
      const int edge = find_edge(ga, gb);
      for (int s = 1; s <= per_edge; ++s) {
        const int offset = ga < gb ? s - 1 : r - 1 - s;
        nodes[3 + e * per_edge + (s - 1)] = nv + edge * per_edge + offset;
      }
    }
    for (int c = 0; c < per_cell; ++c) {
      const int local = 3 + 3 * per_edge + c;
      const std::size_t node = nv + edges.size() * per_edge + t * per_cell + c;
      nodes[local] = static_cast<int>(node);
      const auto& alpha = basis_.lattice()[local];
      node_coords_[node] = (alpha[0] * m.vertices[tri[0]] + alpha[1] * m.vertices[tri[1]] +
                            alpha[2] * m.vertices[tri[2]]) / static_cast<double>(r);
    }
  }

  node_dof_.assign(n_nodes, -1);
  for (std::size_t node = 0; node < n_nodes; ++node) {
    if (!node_boundary_[node]) {
      node_dof_[node] = static_cast<int>(dof_nodes_.size());
      dof_nodes_.push_back(static_cast<int>(node));
    }
  }

  // Quadrature tabulation.
  const std::size_t nq = rule_.size();
  std::vector<Eigen::VectorXd> ref_values(nq, Eigen::VectorXd(nloc));
  std::vector<Eigen::MatrixXd> ref_derivs(nq, Eigen::MatrixXd(nloc, 3));
  for (std::size_t q = 0; q < nq; ++q) {
    const Eigen::Vector3d bary(1.0 - rule_.points[q].x() - rule_.points[q].y(), rule_.points[q].x(),
                               rule_.points[q].y());
    basis_.values(bary, ref_values[q]);
    basis_.bary_derivatives(bary, ref_derivs[q]);
  }

  qp_coords_.resize(nt * nq);
  qp_weights_.resize(static_cast<Eigen::Index>(nt * nq));
  std::vector<Eigen::Triplet<double>> tv, tx, ty;
  tv.reserve(nt * nq * nloc);
  tx.reserve(nt * nq * nloc);
  ty.reserve(nt * nq * nloc);
  for (std::size_t t = 0; t < nt; ++t) {
    const ElementGeometry& g = geometry_[t];
    const auto nodes = element_nodes(t);
    for (std::size_t q = 0; q < nq; ++q) {
      const std::size_t row = t * nq + q;
      qp_coords_[row] = g.origin + g.jacobian * rule_.points[q];
      qp_weights_[static_cast<Eigen::Index>(row)] = rule_.weights[q] * 2.0 * g.area;
      const Eigen::MatrixXd grads = ref_derivs[q] * g.bary_gradients;
      for (int i = 0; i < nloc; ++i) {
        const auto r_ = static_cast<int>(row);
        tv.emplace_back(r_, nodes[i], ref_values[q][i]);
        tx.emplace_back(r_, nodes[i], grads(i, 0));
        ty.emplace_back(r_, nodes[i], grads(i, 1));
      }
    }
  }
  const auto rows = static_cast<Eigen::Index>(nt * nq);
  const auto cols = static_cast<Eigen::Index>(n_nodes);
  eval_.resize(rows, cols);
  eval_dx_.resize(rows, cols);
  eval_dy_.resize(rows, cols);
  eval_.setFromTriplets(tv.begin(), tv.end());
  eval_dx_.setFromTriplets(tx.begin(), tx.end());
  eval_dy_.setFromTriplets(ty.begin(), ty.end());
}

RealVector FESpace::interpolate(const ScalarFunction& f) const {
  RealVector out(static_cast<Eigen::Index>(num_nodes()));
  for (std::size_t n = 0; n < num_nodes(); ++n) out[static_cast<Eigen::Index>(n)] = f(node_coords_[n]);
  return out;
}

}  // namespace mrlab
