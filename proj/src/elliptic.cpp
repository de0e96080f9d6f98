#include "nonvanish/elliptic.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "nonvanish/expression.hpp"
#include "nonvanish/rng.hpp"

namespace nonvanish {

namespace {

constexpr double kCondLimit = 1e12;
constexpr double kResidualLimit = 1e-10;

double min_eigenvalue_sym2(const Mat2& m) {
  const double tr = m(0, 0) + m(1, 1);
  const double gap = std::hypot(m(0, 0) - m(1, 1), 2.0 * m(0, 1));
  return 0.5 * (tr - gap);
}

}  // namespace

CoefficientField CoefficientField::make(MatrixFn a, VectorFn b, VectorFn c, ScalarFn q,
                                        double lambda, RegularityClass regularity) {
  if (!(lambda > 0.0)) throw InvalidArgument("coefficients: lambda must be positive");
  if (regularity.ell != 0 && regularity.ell != 1)
    throw InvalidArgument("coefficients: ell must be 0 or 1");
  if (!(regularity.alpha > 0.0 && regularity.alpha < 1.0))
    throw InvalidArgument("coefficients: alpha must lie in (0,1)");
  CoefficientField f;
  f.a = [inner = std::move(a)](const Vec2& x) {
    const Mat2 m = inner(x);
    return Mat2(0.5 * (m + m.transpose()));
  };
  f.b = std::move(b);
  f.c = std::move(c);
  f.q = std::move(q);
  f.lambda_ell = lambda;
  f.regularity = regularity;
  return f;
}

CoefficientField CoefficientField::laplace() {
  return make([](const Vec2&) { return Mat2::Identity(); },
              [](const Vec2&) { return Vec2::Zero(); },
              [](const Vec2&) { return Vec2::Zero(); }, [](const Vec2&) { return 0.0; }, 1.0,
              RegularityClass{1, 0.9});
}

CoefficientField make_preset(const std::string& name) {
  std::istringstream is(name);
  std::string head;
  is >> head;
  if (head == "laplace") return CoefficientField::laplace();
  if (head == "helmholtz") {
    std::string kv;
    is >> kv;
    if (kv.rfind("k=", 0) != 0)
      throw ConfigError("preset helmholtz expects 'helmholtz k=<value>'");
    double k = 0.0;
    try {
      k = std::stod(kv.substr(2));
    } catch (const std::exception&) {
      throw ConfigError("preset helmholtz: malformed wavenumber '" + kv + "'");
    }
    auto f = CoefficientField::laplace();
    f.q = [k](const Vec2&) { return -k * k; };
    return f;
  }
  if (head == "aniso-smooth") {
    // a(x) = R(x) diag(1,2) R(x)^T with a smooth rotation field R
    auto a = [](const Vec2& x) {
      const double th = 0.3 * std::sin(std::numbers::pi * x.x()) *
                        std::cos(std::numbers::pi * x.y());
      const double c = std::cos(th), s = std::sin(th);
      Mat2 r;
      r << c, -s, s, c;
      Mat2 d = Mat2::Zero();
      d(0, 0) = 1.0;
      d(1, 1) = 2.0;
      return Mat2(r * d * r.transpose());
    };
    return CoefficientField::make(a, [](const Vec2&) { return Vec2::Zero(); },
                                  [](const Vec2&) { return Vec2::Zero(); },
                                  [](const Vec2&) { return 0.0; }, 1.0, RegularityClass{1, 0.9});
  }
  if (head == "iso-smooth") {
    auto a = [](const Vec2& x) {
      const double g = 1.0 + 0.5 * std::sin(std::numbers::pi * x.x()) *
                                  std::sin(std::numbers::pi * x.y());
      return Mat2(g * Mat2::Identity());
    };
    return CoefficientField::make(a, [](const Vec2&) { return Vec2::Zero(); },
                                  [](const Vec2&) { return Vec2::Zero(); },
                                  [](const Vec2&) { return 0.0; }, 0.5, RegularityClass{1, 0.9});
  }
  if (head == "rough-l0") {
    // piecewise-constant isotropic diffusion taking values in {1, 2}
    auto a = [](const Vec2& x) {
      const double s = std::sin(5.0 * x.x()) * std::sin(5.0 * x.y());
      const double g = s >= 0.0 ? 2.0 : 1.0;
      return Mat2(g * Mat2::Identity());
    };
    return CoefficientField::make(a, [](const Vec2&) { return Vec2::Zero(); },
                                  [](const Vec2&) { return Vec2::Zero(); },
                                  [](const Vec2&) { return 0.0; }, 1.0, RegularityClass{0, 0.1});
  }
  throw ConfigError("unknown coefficient preset '" + name + "'");
}

CoefficientField make_from_expressions(const std::string& a11, const std::string& a12,
                                       const std::string& a22, const std::string& b1,
                                       const std::string& b2, const std::string& c1,
                                       const std::string& c2, const std::string& q,
                                       double lambda, RegularityClass regularity) {
  auto expr_or = [](const std::string& text, double fallback) {
    return text.empty() ? ScalarExpr::parse(std::to_string(fallback)) : ScalarExpr::parse(text);
  };
  ScalarExpr e11 = expr_or(a11, 1.0), e12 = expr_or(a12, 0.0), e22 = expr_or(a22, 1.0);
  ScalarExpr eb1 = expr_or(b1, 0.0), eb2 = expr_or(b2, 0.0);
  ScalarExpr ec1 = expr_or(c1, 0.0), ec2 = expr_or(c2, 0.0);
  ScalarExpr eq = expr_or(q, 0.0);

  auto a = [e11, e12, e22](const Vec2& x) {
    Mat2 m;
    const double off = e12(x.x(), x.y());
    m << e11(x.x(), x.y()), off, off, e22(x.x(), x.y());
    return m;
  };
  auto b = [eb1, eb2](const Vec2& x) { return Vec2(eb1(x.x(), x.y()), eb2(x.x(), x.y())); };
  auto c = [ec1, ec2](const Vec2& x) { return Vec2(ec1(x.x(), x.y()), ec2(x.x(), x.y())); };
  auto qf = [eq](const Vec2& x) { return eq(x.x(), x.y()); };
  return CoefficientField::make(a, b, c, qf, lambda, regularity);
}

EllipticityReport check_ellipticity(const CoefficientField& coeffs, const Mesh& mesh) {
  EllipticityReport report;
  report.lambda_claim = coeffs.lambda_ell;
  report.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& v = mesh.triangles[t];
    const Vec2& p0 = mesh.vertices[v[0]];
    const Vec2& p1 = mesh.vertices[v[1]];
    const Vec2& p2 = mesh.vertices[v[2]];
    const Vec2 quad[3] = {0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)};
    for (const Vec2& x : quad) {
      const double ev = min_eigenvalue_sym2(coeffs.a(x));
      if (ev < report.min_eigenvalue) {
        report.min_eigenvalue = ev;
        report.worst_point = x;
      }
    }
  }
  report.pass = report.min_eigenvalue >= coeffs.lambda_ell - 1e-12;
  return report;
}

BoundaryDatum BoundaryDatum::fourier(int degree, Eigen::VectorXd coefficients) {
  if (degree < 0) throw InvalidArgument("fourier datum: degree must be >= 0");
  if (coefficients.size() != 2 * degree + 1)
    throw InvalidArgument("fourier datum: coefficient vector must have length 2*degree+1");
  BoundaryDatum d;
  d.kind = BasisKind::kFourier;
  d.degree = degree;
  d.coefficients = std::move(coefficients);
  return d;
}

BoundaryDatum BoundaryDatum::nodal(Eigen::VectorXd values) {
  BoundaryDatum d;
  d.kind = BasisKind::kNodal;
  d.degree = 0;
  d.coefficients = std::move(values);
  return d;
}

double BoundaryDatum::eval_angle(double theta) const {
  if (kind != BasisKind::kFourier)
    throw InvalidArgument("eval_angle is only defined for Fourier data");
  double v = coefficients[0];
  for (int k = 1; k <= degree; ++k)
    v += coefficients[2 * k - 1] * std::cos(k * theta) + coefficients[2 * k] * std::sin(k * theta);
  return v;
}

double BoundaryDatum::eval_at(const Mesh& mesh, int vertex) const {
  if (!mesh.is_boundary(vertex))
    throw InvalidArgument("boundary datum evaluated at an interior vertex");
  if (kind == BasisKind::kFourier) {
    const Vec2& p = mesh.vertices[vertex];
    return eval_angle(std::atan2(p.y(), p.x()));
  }
  if (coefficients.size() != mesh.boundary_count())
    throw InvalidArgument("nodal datum size does not match the mesh boundary");
  return coefficients[mesh.boundary_position[vertex]];
}

double BoundaryDatum::boundary_norm(const Mesh& mesh) const {
  const int nb = mesh.boundary_count();
  double acc = 0.0;
  for (int i = 0; i < nb; ++i) {
    const int v0 = mesh.boundary_nodes[i];
    const int v1 = mesh.boundary_nodes[(i + 1) % nb];
    const double len = (mesh.vertices[v1] - mesh.vertices[v0]).norm();
    const double g0 = eval_at(mesh, v0), g1 = eval_at(mesh, v1);
    acc += 0.5 * len * (g0 * g0 + g1 * g1);
  }
  return std::sqrt(acc);
}

BoundaryDatum BoundaryDatum::axpy(double s, const BoundaryDatum& other) const {
  if (kind != other.kind || degree != other.degree ||
      coefficients.size() != other.coefficients.size())
    throw InvalidArgument("boundary data combined across different bases");
  BoundaryDatum out = *this;
  out.coefficients += s * other.coefficients;
  return out;
}

double SolutionField::value_at(int triangle, const Vec2& p) const {
  const auto& v = mesh->triangles[triangle];
  const Vec2& p0 = mesh->vertices[v[0]];
  const Vec2& p1 = mesh->vertices[v[1]];
  const Vec2& p2 = mesh->vertices[v[2]];
  const double area2 = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
  const double l0 = ((p1 - p).x() * (p2 - p).y() - (p1 - p).y() * (p2 - p).x()) / area2;
  const double l1 = ((p2 - p).x() * (p0 - p).y() - (p2 - p).y() * (p0 - p).x()) / area2;
  const double l2 = 1.0 - l0 - l1;
  return l0 * nodal_values[v[0]] + l1 * nodal_values[v[1]] + l2 * nodal_values[v[2]];
}

SolutionField field_axpy(const SolutionField& x, double s, const SolutionField& y) {
  if (x.mesh != y.mesh) throw RegionMismatch("field combination across different meshes");
  SolutionField out;
  out.mesh = x.mesh;
  out.nodal_values = x.nodal_values + s * y.nodal_values;
  out.element_gradients.resize(x.element_gradients.size());
  for (std::size_t t = 0; t < x.element_gradients.size(); ++t)
    out.element_gradients[t] = x.element_gradients[t] + s * y.element_gradients[t];
  out.datum = x.datum.axpy(s, y.datum);
  return out;
}

AssembledSystem::AssembledSystem(std::shared_ptr<const Mesh> mesh, const CoefficientField& coeffs)
    : mesh_(std::move(mesh)), coeffs_(coeffs) {
  const Mesh& m = *mesh_;
  const int nv = m.vertex_count();

  interior_index_.assign(nv, -1);
  for (int v = 0; v < nv; ++v) {
    if (!m.is_boundary(v)) {
      interior_index_[v] = static_cast<int>(interior_nodes_.size());
      interior_nodes_.push_back(v);
    }
  }
  const int ni = static_cast<int>(interior_nodes_.size());
  const int nb = m.boundary_count();

  std::vector<Eigen::Triplet<double>> full_trip, int_trip, cpl_trip;

  for (int t = 0; t < m.triangle_count(); ++t) {
    const auto& v = m.triangles[t];
    const Vec2& p0 = m.vertices[v[0]];
    const Vec2& p1 = m.vertices[v[1]];
    const Vec2& p2 = m.vertices[v[2]];
    const double area = m.triangle_area(t);

    // constant P1 basis gradients
    Mat2 bmat;
    bmat.col(0) = p1 - p0;
    bmat.col(1) = p2 - p0;
    const Mat2 binv_t = bmat.inverse().transpose();
    const Vec2 grads[3] = {binv_t * Vec2(-1.0, -1.0), binv_t * Vec2(1.0, 0.0),
                           binv_t * Vec2(0.0, 1.0)};

    // midpoint-edge rule, exact for quadratics
    const Vec2 quad[3] = {0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)};
    const double phi[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
    const double w = area / 3.0;

    double ke[3][3] = {};
    for (int qp = 0; qp < 3; ++qp) {
      const Vec2& x = quad[qp];
      const Mat2 ax = coeffs_.a(x);
      const Vec2 bx = coeffs_.b(x);
      const Vec2 cx = coeffs_.c(x);
      const double qx = coeffs_.q(x);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const double diff = (ax * grads[j]).dot(grads[i]);
          const double drift = phi[qp][j] * bx.dot(grads[i]);
          const double conv = cx.dot(grads[j]) * phi[qp][i];
          const double react = qx * phi[qp][j] * phi[qp][i];
          ke[i][j] += w * (diff + drift + conv + react);
        }
      }
    }

    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const int gi = v[i], gj = v[j];
        full_trip.emplace_back(gi, gj, ke[i][j]);
        if (interior_index_[gi] >= 0) {
          if (interior_index_[gj] >= 0)
            int_trip.emplace_back(interior_index_[gi], interior_index_[gj], ke[i][j]);
          else
            cpl_trip.emplace_back(interior_index_[gi], m.boundary_position[gj], ke[i][j]);
        }
      }
    }
  }

  full_.resize(nv, nv);
  full_.setFromTriplets(full_trip.begin(), full_trip.end());
  interior_.resize(ni, ni);
  interior_.setFromTriplets(int_trip.begin(), int_trip.end());
  coupling_.resize(ni, nb);
  coupling_.setFromTriplets(cpl_trip.begin(), cpl_trip.end());

  lu_.compute(interior_);
  if (lu_.info() != Eigen::Success)
    throw SingularSystem("assemble: sparse factorization failed",
                         std::numeric_limits<double>::infinity());
  Eigen::SparseMatrix<double> interior_t = interior_.transpose();
  lu_transpose_.compute(interior_t);
  if (lu_transpose_.info() != Eigen::Success)
    throw SingularSystem("assemble: transpose factorization failed",
                         std::numeric_limits<double>::infinity());
  det_sign_ = lu_.signDeterminant();
  det_log_abs_ = lu_.logAbsDeterminant();

  // norm(A) * norm(inv(A)) estimate; the inverse norm comes from a short
  // power iteration on inv(A)^T inv(A)
  double anorm = 0.0;
  for (int k = 0; k < interior_.outerSize(); ++k) {
    double row = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(interior_, k); it; ++it)
      row += std::abs(it.value());
    anorm = std::max(anorm, row);
  }
  CounterRng rng(0x5eedULL + static_cast<std::uint64_t>(ni));
  Eigen::VectorXd x(ni);
  for (int i = 0; i < ni; ++i) x[i] = rng.uniform(-1.0, 1.0);
  if (ni > 0) {
    x.normalize();
    double sigma_inv = 0.0;
    for (int it = 0; it < 8; ++it) {
      Eigen::VectorXd y = lu_.solve(x);
      Eigen::VectorXd z = lu_transpose_.solve(y);
      const double nz = z.norm();
      if (!(nz > 0.0) || !std::isfinite(nz)) {
        sigma_inv = std::numeric_limits<double>::infinity();
        break;
      }
      sigma_inv = std::sqrt(nz);
      x = z / nz;
    }
    condition_estimate_ = anorm * sigma_inv;
  } else {
    condition_estimate_ = 1.0;
  }
}

double AssembledSystem::log_abs_determinant() const { return det_log_abs_; }

double AssembledSystem::sign_determinant() const { return det_sign_; }

SolutionField AssembledSystem::solve(const BoundaryDatum& datum) const {
  if (condition_estimate_ > kCondLimit)
    throw SingularSystem("solve: system numerically singular (condition estimate " +
                             std::to_string(condition_estimate_) + ")",
                         condition_estimate_);

  const Mesh& m = *mesh_;
  const int nb = m.boundary_count();
  Eigen::VectorXd g(nb);
  for (int i = 0; i < nb; ++i) g[i] = datum.eval_at(m, m.boundary_nodes[i]);

  const Eigen::VectorXd rhs = -(coupling_ * g);
  const Eigen::VectorXd ui = lu_.solve(rhs);

  const double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
  const double resid = (interior_ * ui - rhs).lpNorm<Eigen::Infinity>() / scale;
  if (!(resid <= kResidualLimit))
    throw SingularSystem("solve: interior residual " + std::to_string(resid) +
                             " exceeds tolerance (condition estimate " +
                             std::to_string(condition_estimate_) + ")",
                         condition_estimate_);

  SolutionField sol;
  sol.mesh = mesh_;
  sol.datum = datum;
  sol.nodal_values.resize(m.vertex_count());
  for (int v = 0; v < m.vertex_count(); ++v) {
    sol.nodal_values[v] =
        interior_index_[v] >= 0 ? ui[interior_index_[v]] : g[m.boundary_position[v]];
  }

  sol.element_gradients.resize(m.triangle_count());
  for (int t = 0; t < m.triangle_count(); ++t) {
    const auto& v = m.triangles[t];
    const Vec2& p0 = m.vertices[v[0]];
    Mat2 bmat;
    bmat.col(0) = m.vertices[v[1]] - p0;
    bmat.col(1) = m.vertices[v[2]] - p0;
    const Vec2 du(sol.nodal_values[v[1]] - sol.nodal_values[v[0]],
                  sol.nodal_values[v[2]] - sol.nodal_values[v[0]]);
    sol.element_gradients[t] = bmat.inverse().transpose() * du;
  }
  return sol;
}

AssembledSystem assemble(std::shared_ptr<const Mesh> mesh, const CoefficientField& coeffs) {
  return AssembledSystem(std::move(mesh), coeffs);
}

std::vector<PointSample> evaluate(const SolutionField& sol, const SampledRegion& region) {
  if (sol.mesh != region.mesh)
    throw RegionMismatch("evaluate: solution and region built over different meshes");
  std::vector<PointSample> out(region.points.size());
  for (std::size_t i = 0; i < region.points.size(); ++i) {
    const int t = region.containing_triangle[i];
    out[i].u = sol.value_at(t, region.points[i]);
    out[i].grad = sol.element_gradients[t];
  }
  return out;
}

}  // namespace nonvanish
