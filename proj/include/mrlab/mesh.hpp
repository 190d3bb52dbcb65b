#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace mrlab {

enum class DomainTag { square, lshape, custom };

std::string_view to_string(DomainTag tag);
DomainTag domain_from_string(std::string_view name);

/// Area of the built-in domains; custom domains have no reference area.
double domain_area(DomainTag tag);

class MeshError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Conforming triangulation of a polygon in the plane.
///
/// Triangles are stored counter-clockwise. `parent` is filled by
/// refine_uniform() and maps every triangle to the triangle of the coarser
/// mesh it was cut from; it is empty for generated or loaded meshes.
struct Mesh {
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<bool> boundary_vertex;
  DomainTag domain = DomainTag::custom;
  std::vector<int> parent;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }

  /// Signed area of triangle t (positive for counter-clockwise storage).
  double signed_area(std::size_t t) const;
  double total_area() const;
};

/// Unique undirected edges in order of first appearance while walking the
/// triangles, each stored as (min vertex, max vertex).
std::vector<std::array<int, 2>> mesh_edges(const Mesh& mesh);

/// Recomputes boundary_vertex from the edges that belong to one triangle.
void mark_boundary(Mesh& mesh);

Mesh generate_square_mesh(int n);

/// [0,1]^2 minus [1/2,1]^2 obtained by masking the n x n square grid.
/// n must be even so that the reentrant corner is a grid vertex.
Mesh generate_lshape_mesh(int n);

/// Splits every triangle into four congruent children through the edge
/// midpoints. Children of triangle t are stored at 4t..4t+3.
Mesh refine_uniform(const Mesh& mesh);

/// Longest edge over all triangles.
double mesh_size(const Mesh& mesh);

/// max longest edge / (min inradius * c) with c chosen so that the uniform
/// square mesh gives exactly 1.
double quasi_uniformity_ratio(const Mesh& mesh);

/// Throws MeshError when an invariant is violated: orientation, edge
/// multiplicity, boundary flags, or the reference area of built-in domains.
void validate(const Mesh& mesh);

void write_mesh(const Mesh& mesh, std::ostream& out);
Mesh read_mesh(std::istream& in);
void save_mesh(const Mesh& mesh, const std::filesystem::path& path);
Mesh load_mesh(const std::filesystem::path& path);

/// Generates the level-0 mesh for a built-in domain and refines it.
Mesh build_mesh(DomainTag domain, int n0, int refinements);

}  // namespace mrlab
