#include "mrlab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

namespace mrlab {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double triangle_signed_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                            const Eigen::Vector2d& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

struct TriangleShape {
  double longest_edge;
  double inradius;
};

TriangleShape shape_of(const Mesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const auto& a = mesh.vertices[tri[0]];
  const auto& b = mesh.vertices[tri[1]];
  const auto& c = mesh.vertices[tri[2]];
  const double ab = (b - a).norm();
  const double bc = (c - b).norm();
  const double ca = (a - c).norm();
  const double area = std::abs(triangle_signed_area(a, b, c));
  return {std::max({ab, bc, ca}), 2.0 * area / (ab + bc + ca)};
}

// Uniform right isosceles triangles: longest edge / inradius = 2 + 2 sqrt(2).
const double kUniformShapeRatio = 2.0 + 2.0 * std::sqrt(2.0);

}  // namespace

std::string_view to_string(DomainTag tag) {
  switch (tag) {
    case DomainTag::square:
      return "square";
    case DomainTag::lshape:
      return "lshape";
    case DomainTag::custom:
      return "custom";
  }
  return "custom";
}

DomainTag domain_from_string(std::string_view name) {
  if (name == "square") return DomainTag::square;
  if (name == "lshape") return DomainTag::lshape;
  if (name == "custom") return DomainTag::custom;
  throw MeshError(fmt::format("unknown domain '{}'", name));
}

double domain_area(DomainTag tag) {
  switch (tag) {
    case DomainTag::square:
      return 1.0;
    case DomainTag::lshape:
      return 0.75;
    case DomainTag::custom:
      break;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double Mesh::signed_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return triangle_signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
}

double Mesh::total_area() const {
  double sum = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) sum += signed_area(t);
  return sum;
}

std::vector<std::array<int, 2>> mesh_edges(const Mesh& mesh) {
  std::unordered_map<std::uint64_t, int> index;
  index.reserve(3 * mesh.triangles.size());
  std::vector<std::array<int, 2>> edges;
  for (const auto& tri : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const int a = tri[e];
      const int b = tri[(e + 1) % 3];
      if (index.try_emplace(edge_key(a, b), static_cast<int>(edges.size())).second) {
        edges.push_back({std::min(a, b), std::max(a, b)});
      }
    }
  }
  return edges;
}

void mark_boundary(Mesh& mesh) {
  std::unordered_map<std::uint64_t, int> count;
  count.reserve(3 * mesh.triangles.size());
  for (const auto& tri : mesh.triangles)
    for (int e = 0; e < 3; ++e) ++count[edge_key(tri[e], tri[(e + 1) % 3])];

  mesh.boundary_vertex.assign(mesh.vertices.size(), false);
  for (const auto& tri : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const int a = tri[e];
      const int b = tri[(e + 1) % 3];
      if (count[edge_key(a, b)] == 1) {
        mesh.boundary_vertex[a] = true;
        mesh.boundary_vertex[b] = true;
      }
    }
  }
}

Mesh generate_square_mesh(int n) {
  if (n < 1) throw MeshError(fmt::format("square mesh needs n >= 1, got {}", n));
  Mesh mesh;
  mesh.domain = DomainTag::square;
  mesh.vertices.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      mesh.vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);

  const auto id = [n](int i, int j) { return i + j * (n + 1); };
  mesh.triangles.reserve(2 * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  mark_boundary(mesh);
  return mesh;
}

Mesh generate_lshape_mesh(int n) {
  if (n < 1) throw MeshError(fmt::format("L-shape mesh needs n >= 1, got {}", n));
  if (n % 2 != 0)
    throw MeshError(fmt::format("L-shape mesh needs an even n so the reentrant corner is a vertex, got {}", n));

  const Mesh square = generate_square_mesh(n);
  const int half = n / 2;

  Mesh mesh;
  mesh.domain = DomainTag::lshape;
  std::vector<int> new_index(square.vertices.size(), -1);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (i >= half && j >= half) continue;
      for (int s = 0; s < 2; ++s) {
        std::array<int, 3> tri = square.triangles[2 * (i + j * n) + s];
        for (int& v : tri) {
          if (new_index[v] < 0) {
            new_index[v] = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back(square.vertices[v]);
          }
          v = new_index[v];
        }
        mesh.triangles.push_back(tri);
      }
    }
  }
  mark_boundary(mesh);
  return mesh;
}

Mesh refine_uniform(const Mesh& mesh) {
  const auto edges = mesh_edges(mesh);
  std::unordered_map<std::uint64_t, int> midpoint;
  midpoint.reserve(edges.size());

  Mesh fine;
  fine.domain = mesh.domain;
  fine.vertices = mesh.vertices;
  fine.vertices.reserve(mesh.vertices.size() + edges.size());
  for (const auto& e : edges) {
    midpoint.emplace(edge_key(e[0], e[1]), static_cast<int>(fine.vertices.size()));
    fine.vertices.push_back(0.5 * (mesh.vertices[e[0]] + mesh.vertices[e[1]]));
  }

  fine.triangles.reserve(4 * mesh.triangles.size());
  fine.parent.reserve(4 * mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto [a, b, c] = mesh.triangles[t];
    const int ab = midpoint.at(edge_key(a, b));
    const int bc = midpoint.at(edge_key(b, c));
    const int ca = midpoint.at(edge_key(c, a));
    fine.triangles.push_back({a, ab, ca});
    fine.triangles.push_back({ab, b, bc});
    fine.triangles.push_back({ca, bc, c});
    fine.triangles.push_back({ab, bc, ca});
    for (int s = 0; s < 4; ++s) fine.parent.push_back(static_cast<int>(t));
  }
  mark_boundary(fine);
  return fine;
}

double mesh_size(const Mesh& mesh) {
  double h = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) h = std::max(h, shape_of(mesh, t).longest_edge);
  return h;
}

double quasi_uniformity_ratio(const Mesh& mesh) {
  if (mesh.triangles.empty()) throw MeshError("quasi-uniformity ratio of an empty mesh");
  double max_edge = 0.0;
  double min_inradius = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto s = shape_of(mesh, t);
    if (!(s.inradius > 1e-14 * s.longest_edge))
      throw MeshError(fmt::format("degenerate triangle {}", t));
    max_edge = std::max(max_edge, s.longest_edge);
    min_inradius = std::min(min_inradius, s.inradius);
  }
  return max_edge / (min_inradius * kUniformShapeRatio);
}

void validate(const Mesh& mesh) {
  const auto nv = static_cast<int>(mesh.vertices.size());
  if (mesh.boundary_vertex.size() != mesh.vertices.size())
    throw MeshError("boundary flag count does not match vertex count");
  if (mesh.triangles.empty()) throw MeshError("mesh has no triangles");

  std::unordered_map<std::uint64_t, int> count;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int v : tri)
      if (v < 0 || v >= nv) throw MeshError(fmt::format("triangle {} references vertex {} out of range", t, v));
    if (!(mesh.signed_area(t) > 0.0))
      throw MeshError(fmt::format("triangle {} has non-positive area {}", t, mesh.signed_area(t)));
    for (int e = 0; e < 3; ++e) {
      if (++count[edge_key(tri[e], tri[(e + 1) % 3])] > 2)
        throw MeshError(fmt::format("edge ({}, {}) is shared by more than two triangles", tri[e], tri[(e + 1) % 3]));
    }
  }

  std::vector<bool> on_boundary(mesh.vertices.size(), false);
  for (const auto& [key, c] : count) {
    if (c == 1) {
      on_boundary[static_cast<int>(key >> 32)] = true;
      on_boundary[static_cast<int>(key & 0xffffffffu)] = true;
    }
  }
  for (int v = 0; v < nv; ++v) {
    if (on_boundary[v] != mesh.boundary_vertex[v])
      throw MeshError(fmt::format("vertex {} boundary flag is {} but the vertex {} on a boundary edge", v,
                                  mesh.boundary_vertex[v] ? 1 : 0, on_boundary[v] ? "lies" : "does not lie"));
  }

  const double reference = domain_area(mesh.domain);
  if (!std::isnan(reference)) {
    const double area = mesh.total_area();
    if (std::abs(area - reference) > 1e-12 * reference)
      throw MeshError(fmt::format("total area {} differs from the {} domain area {}", area,
                                  to_string(mesh.domain), reference));
  }
}

void write_mesh(const Mesh& mesh, std::ostream& out) {
  out << "# domain " << to_string(mesh.domain) << '\n';
  out << "nodes " << mesh.vertices.size() << '\n';
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    out << fmt::format("{:.17g} {:.17g} {}\n", mesh.vertices[v].x(), mesh.vertices[v].y(),
                       mesh.boundary_vertex[v] ? 1 : 0);
  }
  out << "triangles " << mesh.triangles.size() << '\n';
  for (const auto& tri : mesh.triangles) out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
}

namespace {

class LineReader {
public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-empty line with comments stripped; false at end of input.
  bool next(std::string& content) {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_;
      const auto hash = raw.find('#');
      if (hash != std::string::npos) {
        std::istringstream meta(raw.substr(hash + 1));
        std::string key, value;
        if (meta >> key >> value && key == "domain") domain_hint_ = value;
        raw.erase(hash);
      }
      if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
      content = raw;
      return true;
    }
    return false;
  }

  int line() const { return line_; }
  const std::string& domain_hint() const { return domain_hint_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw MeshError(fmt::format("line {}: {}", line_, what));
  }

private:
  std::istream& in_;
  int line_ = 0;
  std::string domain_hint_;
};

std::size_t read_header(LineReader& reader, std::string_view keyword) {
  std::string content;
  if (!reader.next(content)) reader.fail(fmt::format("expected '{} <count>' but reached end of file", keyword));
  std::istringstream ss(content);
  std::string word;
  long long count = -1;
  std::string extra;
  if (!(ss >> word >> count) || word != keyword || count < 0 || (ss >> extra))
    reader.fail(fmt::format("expected '{} <count>'", keyword));
  return static_cast<std::size_t>(count);
}

}  // namespace

Mesh read_mesh(std::istream& in) {
  LineReader reader(in);
  Mesh mesh;
  std::string content;

  const std::size_t n_nodes = read_header(reader, "nodes");
  mesh.vertices.reserve(n_nodes);
  mesh.boundary_vertex.reserve(n_nodes);
  for (std::size_t v = 0; v < n_nodes; ++v) {
    if (!reader.next(content)) reader.fail("unexpected end of file in node block");
    std::istringstream ss(content);
    double x = 0.0, y = 0.0;
    int b = -1;
    std::string extra;
    if (!(ss >> x >> y >> b) || (ss >> extra)) reader.fail("expected 'x y b'");
    if (b != 0 && b != 1) reader.fail("boundary flag must be 0 or 1");
    mesh.vertices.emplace_back(x, y);
    mesh.boundary_vertex.push_back(b == 1);
  }

  const std::size_t n_tri = read_header(reader, "triangles");
  mesh.triangles.reserve(n_tri);
  for (std::size_t t = 0; t < n_tri; ++t) {
    if (!reader.next(content)) reader.fail("unexpected end of file in triangle block");
    std::istringstream ss(content);
    long long i = -1, j = -1, k = -1;
    std::string extra;
    if (!(ss >> i >> j >> k) || (ss >> extra)) reader.fail("expected 'i j k'");
    for (long long idx : {i, j, k})
      if (idx < 0 || idx >= static_cast<long long>(n_nodes)) reader.fail(fmt::format("vertex index {} out of range", idx));
    mesh.triangles.push_back({static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)});
    if (!(mesh.signed_area(t) > 0.0))
      reader.fail(fmt::format("triangle {} has non-positive area (must be counter-clockwise)", t));
  }
  if (reader.next(content)) reader.fail("unexpected content after triangle block");

  if (!reader.domain_hint().empty()) mesh.domain = domain_from_string(reader.domain_hint());
  validate(mesh);
  return mesh;
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw MeshError(fmt::format("cannot open '{}' for writing", path.string()));
  write_mesh(mesh, out);
  if (!out) throw MeshError(fmt::format("failed writing '{}'", path.string()));
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError(fmt::format("cannot open '{}'", path.string()));
  return read_mesh(in);
}

Mesh build_mesh(DomainTag domain, int n0, int refinements) {
  Mesh mesh;
  switch (domain) {
    case DomainTag::square:
      mesh = generate_square_mesh(n0);
      break;
    case DomainTag::lshape:
      mesh = generate_lshape_mesh(n0);
      break;
    case DomainTag::custom:
      throw MeshError("custom domains must be loaded from a file");
  }
  for (int l = 0; l < refinements; ++l) mesh = refine_uniform(mesh);
  return mesh;
}

}  // namespace mrlab
