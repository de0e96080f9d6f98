#pragma once

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "nonvanish/errors.hpp"

namespace nonvanish {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr int kDim = 2;

enum class DomainKind { kDisk, kSquare };

std::string to_string(DomainKind kind);

class MeshFailure : public Error {
 public:
  using Error::Error;
};

// Conforming triangulation of the unit disk (centered at the origin) or of
// the unit square [0,1]^2. Immutable after construction; safe for
// unrestricted concurrent reads.
struct Mesh {
  DomainKind domain_kind = DomainKind::kDisk;
  double h_target = 0.0;
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;  // CCW vertex index triples
  std::vector<int> boundary_nodes;            // single CCW loop along the boundary
  std::vector<int> boundary_position;         // vertex -> index in boundary_nodes, -1 if interior

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
  int boundary_count() const { return static_cast<int>(boundary_nodes.size()); }
  bool is_boundary(int v) const { return boundary_position[v] >= 0; }

  double triangle_area(int t) const;
  Vec2 barycenter(int t) const;
  double circumdiameter(int t) const;
  double total_area() const;
  double analytic_area() const;
  double domain_diameter() const;
  double domain_radius() const;

  // Signed distance from p to the analytic domain boundary, positive inside.
  double distance_to_boundary(const Vec2& p) const;
};

std::shared_ptr<const Mesh> build_mesh(DomainKind kind, double h_target);

inline constexpr int kOutsideMesh = -1;

// Lowest-index triangle containing p (all barycentric coordinates >= -1e-12),
// or kOutsideMesh if p lies in no triangle. The lowest-index rule makes
// shared-edge queries deterministic.
int locate_point(const Mesh& mesh, const Vec2& p);

class EmptyRegion : public Error {
 public:
  using Error::Error;
};

class BoundaryContact : public Error {
 public:
  using Error::Error;
};

struct RegionDescriptor {
  enum class Kind { kDisk, kPolygon };
  Kind kind = Kind::kDisk;
  Vec2 center{0.0, 0.0};
  double radius = 0.0;
  std::vector<Vec2> polygon;

  static RegionDescriptor disk(const Vec2& center, double radius);
  static RegionDescriptor make_polygon(std::vector<Vec2> points);
  bool contains(const Vec2& p) const;
  std::string describe() const;
};

// Discretization of a compact subset K of the domain interior: the
// barycenters of all triangles whose barycenter falls inside the descriptor.
struct SampledRegion {
  std::shared_ptr<const Mesh> mesh;
  RegionDescriptor descriptor;
  std::vector<Vec2> points;
  std::vector<int> containing_triangle;
  double clearance = 0.0;  // min distance from the region to the domain boundary

  int size() const { return static_cast<int>(points.size()); }
};

SampledRegion sample_region(std::shared_ptr<const Mesh> mesh,
                            const RegionDescriptor& descriptor);

// Indices of triangles whose barycenter lies within distance r of c.
std::vector<int> triangles_in_ball(const Mesh& mesh, const Vec2& c, double r);

}  // namespace nonvanish
