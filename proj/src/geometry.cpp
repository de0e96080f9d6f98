#include "nonvanish/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace nonvanish {

namespace {

constexpr double kPi = std::numbers::pi;

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// > 0 iff p lies strictly inside the circumcircle of the CCW triangle (a,b,c).
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  const double ax = a.x() - p.x(), ay = a.y() - p.y();
  const double bx = b.x() - p.x(), by = b.y() - p.y();
  const double cx = c.x() - p.x(), cy = c.y() - p.y();
  const double a2 = ax * ax + ay * ay;
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx);
}

bool barycentric_inside(const Vec2& p0, const Vec2& p1, const Vec2& p2, const Vec2& p,
                        double tol) {
  const double area2 = orient(p0, p1, p2);
  if (area2 <= 0.0) return false;
  const double l0 = orient(p, p1, p2) / area2;
  const double l1 = orient(p0, p, p2) / area2;
  const double l2 = orient(p0, p1, p) / area2;
  return l0 >= -tol && l1 >= -tol && l2 >= -tol;
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// Incremental Bowyer-Watson over a point set whose convex hull is the leading
// polygon (indices 0..nb-1, CCW). The triangulation starts from a fan of that
// polygon, so no super-triangle bookkeeping is needed.
class Triangulator {
 public:
  Triangulator(const std::vector<Vec2>& pts, int hull_count) : pts_(pts) {
    for (int i = 1; i + 1 < hull_count; ++i)
      tris_.push_back({{0, i, i + 1}, true});
  }

  void insert(int pi) {
    const Vec2& p = pts_[pi];
    const int t0 = find_containing(p);
    if (t0 < 0) throw MeshFailure("triangulation: inserted point outside current hull");

    std::vector<char> violating(tris_.size(), 0);
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (!tris_[t].alive) continue;
      const auto& v = tris_[t].v;
      if (incircle(pts_[v[0]], pts_[v[1]], pts_[v[2]], p) > kInCircleEps) violating[t] = 1;
    }
    violating[t0] = 1;

    // connected component of violating triangles containing t0
    auto edge_owners = build_edge_map();
    std::vector<int> cavity;
    std::vector<char> in_cavity(tris_.size(), 0);
    std::vector<int> stack{t0};
    in_cavity[t0] = 1;
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      cavity.push_back(t);
      const auto& v = tris_[t].v;
      for (int e = 0; e < 3; ++e) {
        const auto key = edge_key(v[e], v[(e + 1) % 3]);
        for (int u : edge_owners[key]) {
          if (u != t && tris_[u].alive && violating[u] && !in_cavity[u]) {
            in_cavity[u] = 1;
            stack.push_back(u);
          }
        }
      }
    }

    // cavity boundary; shrink until star-shaped around p
    struct BEdge {
      int a, b, owner;
    };
    std::vector<BEdge> boundary;
    for (int repair = 0;; ++repair) {
      if (repair > static_cast<int>(tris_.size())) throw MeshFailure("triangulation: cavity repair failed");
      boundary.clear();
      bool ok = true;
      int bad_owner = -1;
      for (int t : cavity) {
        const auto& v = tris_[t].v;
        for (int e = 0; e < 3; ++e) {
          const int a = v[e], b = v[(e + 1) % 3];
          int other = -1;
          for (int u : edge_owners[edge_key(a, b)])
            if (u != t && tris_[u].alive) other = u;
          if (other >= 0 && in_cavity[other]) continue;  // interior cavity edge
          boundary.push_back({a, b, t});
          if (orient(pts_[a], pts_[b], p) <= kOrientEps) {
            ok = false;
            bad_owner = t;
          }
        }
      }
      if (ok) break;
      if (bad_owner == t0 || cavity.size() <= 1)
        throw MeshFailure("triangulation: degenerate cavity");
      in_cavity[bad_owner] = 0;
      cavity.erase(std::find(cavity.begin(), cavity.end(), bad_owner));
    }

    for (int t : cavity) tris_[t].alive = false;
    for (const auto& e : boundary) tris_.push_back({{e.a, e.b, pi}, true});
  }

  std::vector<std::array<int, 3>> extract() const {
    std::vector<std::array<int, 3>> out;
    for (const auto& t : tris_)
      if (t.alive) out.push_back(t.v);
    return out;
  }

 private:
  static constexpr double kInCircleEps = 1e-12;
  static constexpr double kOrientEps = 1e-14;

  struct Tri {
    std::array<int, 3> v;
    bool alive;
  };

  int find_containing(const Vec2& p) const {
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (!tris_[t].alive) continue;
      const auto& v = tris_[t].v;
      if (barycentric_inside(pts_[v[0]], pts_[v[1]], pts_[v[2]], p, 1e-12))
        return static_cast<int>(t);
    }
    return -1;
  }

  std::unordered_map<std::uint64_t, std::vector<int>> build_edge_map() const {
    std::unordered_map<std::uint64_t, std::vector<int>> owners;
    owners.reserve(tris_.size() * 3);
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (!tris_[t].alive) continue;
      const auto& v = tris_[t].v;
      for (int e = 0; e < 3; ++e)
        owners[edge_key(v[e], v[(e + 1) % 3])].push_back(static_cast<int>(t));
    }
    return owners;
  }

  const std::vector<Vec2>& pts_;
  std::vector<Tri> tris_;
};

std::shared_ptr<Mesh> build_square_mesh(double h) {
  int n = static_cast<int>(std::ceil(1.0 / h - 1e-12));
  n = std::max(n, 2);
  if (n % 2 != 0) ++n;  // even cell count keeps corner-cell diagonals through the corners
  const double dx = 1.0 / n;

  auto mesh = std::make_shared<Mesh>();
  mesh->domain_kind = DomainKind::kSquare;
  mesh->h_target = h;

  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      mesh->vertices.emplace_back(i * dx, j * dx);

  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j);
      const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        mesh->triangles.push_back({v00, v10, v11});
        mesh->triangles.push_back({v00, v11, v01});
      } else {
        mesh->triangles.push_back({v00, v10, v01});
        mesh->triangles.push_back({v10, v11, v01});
      }
    }
  }

  for (int i = 0; i < n; ++i) mesh->boundary_nodes.push_back(vid(i, 0));
  for (int j = 0; j < n; ++j) mesh->boundary_nodes.push_back(vid(n, j));
  for (int i = n; i > 0; --i) mesh->boundary_nodes.push_back(vid(i, n));
  for (int j = n; j > 0; --j) mesh->boundary_nodes.push_back(vid(0, j));
  return mesh;
}

std::shared_ptr<Mesh> build_disk_mesh(double h) {
  auto mesh = std::make_shared<Mesh>();
  mesh->domain_kind = DomainKind::kDisk;
  mesh->h_target = h;

  const int nb = std::max(8, static_cast<int>(std::ceil(2.0 * kPi / h - 1e-12)));
  std::vector<Vec2>& pts = mesh->vertices;
  for (int i = 0; i < nb; ++i) {
    const double th = 2.0 * kPi * i / nb;
    pts.emplace_back(std::cos(th), std::sin(th));
  }
  // interior: center plus concentric rings, staggered to break cocircular ties
  const int nr = std::max(2, static_cast<int>(std::llround(1.0 / h)));
  const double dr = 1.0 / nr;
  pts.emplace_back(0.0, 0.0);
  for (int j = 1; j < nr; ++j) {
    const double r = j * dr;
    const int nj = std::max(6, static_cast<int>(std::llround(2.0 * kPi * r / h)));
    const double off = (j % 2 == 1) ? kPi / nj : 0.0;
    for (int i = 0; i < nj; ++i) {
      const double th = off + 2.0 * kPi * i / nj;
      pts.emplace_back(r * std::cos(th), r * std::sin(th));
    }
  }

  Triangulator tri(pts, nb);
  for (int i = nb; i < static_cast<int>(pts.size()); ++i) tri.insert(i);
  mesh->triangles = tri.extract();

  for (int i = 0; i < nb; ++i) mesh->boundary_nodes.push_back(i);
  return mesh;
}

void try_fix_all_boundary_triangles(Mesh& mesh) {
  auto all_boundary = [&mesh](const std::array<int, 3>& t) {
    return mesh.is_boundary(t[0]) && mesh.is_boundary(t[1]) && mesh.is_boundary(t[2]);
  };
  for (int pass = 0; pass < 8; ++pass) {
    std::unordered_map<std::uint64_t, std::vector<int>> owners;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
      for (int e = 0; e < 3; ++e)
        owners[edge_key(mesh.triangles[t][e], mesh.triangles[t][(e + 1) % 3])]
            .push_back(static_cast<int>(t));

    int fixed = -1;
    for (std::size_t t = 0; t < mesh.triangles.size() && fixed < 0; ++t) {
      if (!all_boundary(mesh.triangles[t])) continue;
      const auto tv = mesh.triangles[t];
      for (int e = 0; e < 3 && fixed < 0; ++e) {
        const int a = tv[e], b = tv[(e + 1) % 3], c = tv[(e + 2) % 3];
        for (int u : owners[edge_key(a, b)]) {
          if (u == static_cast<int>(t)) continue;
          const auto uv = mesh.triangles[u];
          int d = uv[0] + uv[1] + uv[2] - a - b;
          if (mesh.is_boundary(d)) continue;
          const Vec2 &pa = mesh.vertices[a], &pb = mesh.vertices[b];
          const Vec2 &pc = mesh.vertices[c], &pd = mesh.vertices[d];
          if (orient(pc, pa, pd) > 1e-14 && orient(pc, pd, pb) > 1e-14) {
            mesh.triangles[t] = {c, a, d};
            mesh.triangles[u] = {c, d, b};
            fixed = static_cast<int>(t);
            break;
          }
        }
      }
    }
    if (fixed < 0) return;
  }
}

void validate_mesh(const Mesh& mesh) {
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    if (mesh.triangle_area(t) <= 0.0)
      throw MeshFailure("mesh validation: inverted or degenerate triangle " + std::to_string(t));
    if (mesh.circumdiameter(t) > 2.0 * mesh.h_target + 1e-12)
      throw MeshFailure("mesh validation: circumdiameter exceeds 2*h_target at triangle " +
                        std::to_string(t));
    const auto& v = mesh.triangles[t];
    if (mesh.is_boundary(v[0]) && mesh.is_boundary(v[1]) && mesh.is_boundary(v[2]))
      throw MeshFailure("mesh validation: triangle with all vertices on the boundary");
  }

  // boundary loop edges must each belong to exactly one triangle
  std::unordered_map<std::uint64_t, int> edge_use;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) edge_use[edge_key(t[e], t[(e + 1) % 3])] += 1;
  int once = 0;
  for (const auto& [key, cnt] : edge_use) {
    if (cnt == 1) ++once;
    if (cnt > 2) throw MeshFailure("mesh validation: non-manifold edge");
  }
  const int nb = mesh.boundary_count();
  if (once != nb) throw MeshFailure("mesh validation: boundary is not a single closed loop");
  for (int i = 0; i < nb; ++i) {
    const auto key = edge_key(mesh.boundary_nodes[i], mesh.boundary_nodes[(i + 1) % nb]);
    auto it = edge_use.find(key);
    if (it == edge_use.end() || it->second != 1)
      throw MeshFailure("mesh validation: boundary loop edge missing from triangulation");
  }
}

}  // namespace

std::string to_string(DomainKind kind) {
  return kind == DomainKind::kDisk ? "disk" : "square";
}

double Mesh::triangle_area(int t) const {
  const auto& v = triangles[t];
  return 0.5 * orient(vertices[v[0]], vertices[v[1]], vertices[v[2]]);
}

Vec2 Mesh::barycenter(int t) const {
  const auto& v = triangles[t];
  return (vertices[v[0]] + vertices[v[1]] + vertices[v[2]]) / 3.0;
}

double Mesh::circumdiameter(int t) const {
  const auto& v = triangles[t];
  const double a = (vertices[v[1]] - vertices[v[0]]).norm();
  const double b = (vertices[v[2]] - vertices[v[1]]).norm();
  const double c = (vertices[v[0]] - vertices[v[2]]).norm();
  const double area = triangle_area(t);
  if (area <= 0.0) return std::numeric_limits<double>::infinity();
  return a * b * c / (2.0 * area);
}

double Mesh::total_area() const {
  double s = 0.0;
  for (int t = 0; t < triangle_count(); ++t) s += triangle_area(t);
  return s;
}

double Mesh::analytic_area() const {
  return domain_kind == DomainKind::kDisk ? kPi : 1.0;
}

double Mesh::domain_diameter() const {
  return domain_kind == DomainKind::kDisk ? 2.0 : std::numbers::sqrt2;
}

double Mesh::domain_radius() const {
  return domain_kind == DomainKind::kDisk ? 1.0 : 0.5;
}

double Mesh::distance_to_boundary(const Vec2& p) const {
  if (domain_kind == DomainKind::kDisk) return 1.0 - p.norm();
  return std::min(std::min(p.x(), p.y()), std::min(1.0 - p.x(), 1.0 - p.y()));
}

std::shared_ptr<const Mesh> build_mesh(DomainKind kind, double h_target) {
  const double diameter = kind == DomainKind::kDisk ? 2.0 : std::numbers::sqrt2;
  if (!(h_target > 0.0) || h_target >= 0.5 * diameter)
    throw MeshFailure("build_mesh: h_target must lie in (0, half the domain diameter)");

  std::shared_ptr<Mesh> mesh =
      kind == DomainKind::kSquare ? build_square_mesh(h_target) : build_disk_mesh(h_target);

  mesh->boundary_position.assign(mesh->vertex_count(), -1);
  for (std::size_t i = 0; i < mesh->boundary_nodes.size(); ++i)
    mesh->boundary_position[mesh->boundary_nodes[i]] = static_cast<int>(i);

  try_fix_all_boundary_triangles(*mesh);
  validate_mesh(*mesh);
  return mesh;
}

int locate_point(const Mesh& mesh, const Vec2& p) {
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& v = mesh.triangles[t];
    if (barycentric_inside(mesh.vertices[v[0]], mesh.vertices[v[1]], mesh.vertices[v[2]], p,
                           1e-12))
      return t;
  }
  return kOutsideMesh;
}

RegionDescriptor RegionDescriptor::disk(const Vec2& center, double radius) {
  RegionDescriptor d;
  d.kind = Kind::kDisk;
  d.center = center;
  d.radius = radius;
  return d;
}

RegionDescriptor RegionDescriptor::make_polygon(std::vector<Vec2> points) {
  if (points.size() < 3) throw InvalidArgument("region polygon needs at least 3 vertices");
  RegionDescriptor d;
  d.kind = Kind::kPolygon;
  d.polygon = std::move(points);
  return d;
}

bool RegionDescriptor::contains(const Vec2& p) const {
  if (kind == Kind::kDisk) return (p - center).norm() <= radius;
  // even-odd rule
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 &a = polygon[i], &b = polygon[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
      inside = !inside;
  }
  return inside;
}

std::string RegionDescriptor::describe() const {
  std::ostringstream os;
  if (kind == Kind::kDisk)
    os << "disk(" << center.x() << "," << center.y() << ";" << radius << ")";
  else
    os << "polygon(" << polygon.size() << " vertices)";
  return os.str();
}

SampledRegion sample_region(std::shared_ptr<const Mesh> mesh,
                            const RegionDescriptor& descriptor) {
  double clearance = 0.0;
  if (descriptor.kind == RegionDescriptor::Kind::kDisk) {
    clearance = mesh->distance_to_boundary(descriptor.center) - descriptor.radius;
  } else {
    // both domains are convex, so the distance over a polygon is minimized
    // at a vertex
    clearance = std::numeric_limits<double>::infinity();
    for (const Vec2& v : descriptor.polygon)
      clearance = std::min(clearance, mesh->distance_to_boundary(v));
  }

  if (clearance <= 0.0)
    throw BoundaryContact("sample_region: region touches or crosses the domain boundary (clearance " +
                          std::to_string(clearance) + ")");
  if (clearance < 2.0 * mesh->h_target - 1e-12)
    throw BoundaryContact("sample_region: clearance " + std::to_string(clearance) +
                          " below the required 2*h_target = " +
                          std::to_string(2.0 * mesh->h_target));

  SampledRegion region;
  region.mesh = mesh;
  region.descriptor = descriptor;
  region.clearance = clearance;
  for (int t = 0; t < mesh->triangle_count(); ++t) {
    const Vec2 bc = mesh->barycenter(t);
    if (descriptor.contains(bc)) {
      region.points.push_back(bc);
      region.containing_triangle.push_back(t);
    }
  }
  if (region.points.empty())
    throw EmptyRegion("sample_region: no triangle barycenter falls inside " +
                      descriptor.describe());
  return region;
}

std::vector<int> triangles_in_ball(const Mesh& mesh, const Vec2& c, double r) {
  std::vector<int> out;
  for (int t = 0; t < mesh.triangle_count(); ++t)
    if ((mesh.barycenter(t) - c).norm() <= r) out.push_back(t);
  return out;
}

}  // namespace nonvanish
