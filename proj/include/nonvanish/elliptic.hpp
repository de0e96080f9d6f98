#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nonvanish/errors.hpp"
#include "nonvanish/geometry.hpp"

namespace nonvanish {

// Holder regularity class of the coefficients: ell in {0, 1}, alpha in (0,1).
struct RegularityClass {
  int ell = 1;
  double alpha = 0.9;
};

using MatrixFn = std::function<Mat2(const Vec2&)>;
using VectorFn = std::function<Vec2(const Vec2&)>;
using ScalarFn = std::function<double(const Vec2&)>;

// Coefficients of the operator -div(a grad u + b u) + c . grad u + q u,
// with claimed ellipticity constant lambda. The matrix closure is
// symmetrized on construction.
struct CoefficientField {
  MatrixFn a;
  VectorFn b;
  VectorFn c;
  ScalarFn q;
  double lambda_ell = 1.0;
  RegularityClass regularity;

  static CoefficientField make(MatrixFn a, VectorFn b, VectorFn c, ScalarFn q, double lambda,
                               RegularityClass regularity);
  static CoefficientField laplace();
};

// Named presets: "laplace", "helmholtz k=<v>", "aniso-smooth", "rough-l0",
// "iso-smooth" (variable isotropic smooth diffusion).
CoefficientField make_preset(const std::string& name);

// Coefficients from expression strings over (x1, x2); empty strings fall back
// to the Laplace defaults (a = I, b = c = 0, q = 0).
CoefficientField make_from_expressions(const std::string& a11, const std::string& a12,
                                       const std::string& a22, const std::string& b1,
                                       const std::string& b2, const std::string& c1,
                                       const std::string& c2, const std::string& q,
                                       double lambda, RegularityClass regularity);

struct EllipticityReport {
  bool pass = false;
  double min_eigenvalue = 0.0;
  Vec2 worst_point{0.0, 0.0};
  double lambda_claim = 0.0;
};

// Smallest eigenvalue of sym(a(x)) over all quadrature points of the mesh,
// compared against the claimed lambda.
EllipticityReport check_ellipticity(const CoefficientField& coeffs, const Mesh& mesh);

enum class BasisKind { kFourier, kNodal };

// Dirichlet datum in a finite boundary basis. Fourier (disk): coefficients
// [c0, a1, b1, ..., a_m, b_m] for c0 + sum a_k cos(k theta) + b_k sin(k theta).
// Nodal (square): one value per boundary node, ordered along the loop.
struct BoundaryDatum {
  BasisKind kind = BasisKind::kFourier;
  int degree = 0;  // Fourier only; coefficient length is 2*degree+1
  Eigen::VectorXd coefficients;

  static BoundaryDatum fourier(int degree, Eigen::VectorXd coefficients);
  static BoundaryDatum nodal(Eigen::VectorXd values);

  double eval_angle(double theta) const;                 // Fourier evaluation
  double eval_at(const Mesh& mesh, int vertex) const;    // at a boundary vertex
  double boundary_norm(const Mesh& mesh) const;          // arc-length weighted l2

  // this + s * other (same basis required)
  BoundaryDatum axpy(double s, const BoundaryDatum& other) const;
};

// Discrete solution: P1 nodal values plus per-triangle constant gradients.
struct SolutionField {
  std::shared_ptr<const Mesh> mesh;
  Eigen::VectorXd nodal_values;
  std::vector<Vec2> element_gradients;
  BoundaryDatum datum;

  double value_at(int triangle, const Vec2& p) const;  // barycentric interpolation
};

// x + s * y
SolutionField field_axpy(const SolutionField& x, double s, const SolutionField& y);

class SingularSystem : public Error {
 public:
  SingularSystem(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate(condition_estimate) {}
  double condition_estimate;
};

class RegionMismatch : public Error {
 public:
  using Error::Error;
};

// Assembled weak form with eliminated Dirichlet nodes: interior block,
// boundary coupling block, and a sparse LU factorization. Immutable after
// construction; solves against one factorization may run concurrently.
class AssembledSystem {
 public:
  AssembledSystem(std::shared_ptr<const Mesh> mesh, const CoefficientField& coeffs);

  const std::shared_ptr<const Mesh>& mesh() const { return mesh_; }
  const CoefficientField& coefficients() const { return coeffs_; }
  const Eigen::SparseMatrix<double>& full_matrix() const { return full_; }
  const Eigen::SparseMatrix<double>& interior_matrix() const { return interior_; }
  double condition_estimate() const { return condition_estimate_; }
  double log_abs_determinant() const;
  double sign_determinant() const;

  SolutionField solve(const BoundaryDatum& datum) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  CoefficientField coeffs_;
  Eigen::SparseMatrix<double> full_;      // all nodes, for diagnostics and tests
  Eigen::SparseMatrix<double> interior_;  // interior x interior
  Eigen::SparseMatrix<double> coupling_;  // interior x boundary
  std::vector<int> interior_nodes_;
  std::vector<int> interior_index_;  // vertex -> interior slot, -1 for boundary
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_transpose_;
  double condition_estimate_ = 0.0;
  double det_sign_ = 0.0;
  double det_log_abs_ = 0.0;
};

AssembledSystem assemble(std::shared_ptr<const Mesh> mesh, const CoefficientField& coeffs);

inline SolutionField solve_dirichlet(const AssembledSystem& system, const BoundaryDatum& datum) {
  return system.solve(datum);
}

struct PointSample {
  double u = 0.0;
  Vec2 grad{0.0, 0.0};
};

// Value and gradient at every sample point of the region; the region must be
// built over the same mesh as the solution.
std::vector<PointSample> evaluate(const SolutionField& sol, const SampledRegion& region);

}  // namespace nonvanish
