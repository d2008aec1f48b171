#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "diffk/diffeo.hpp"
#include "diffk/geometry.hpp"

namespace diffk {

using Rational = boost::multiprecision::cpp_rational;

/// Exponents (alpha_1, ..., alpha_n) of a monomial x^alpha.
using MultiIndex = std::vector<int>;

int degree(const MultiIndex& alpha);

/// A polynomial map p: R^n -> R^n with p(0) = 0 and degree <= k, stored
/// sparsely as coefficients of (output i, monomial alpha), 1 <= |alpha| <= k.
/// Scalar is double or Rational.
template <class Scalar>
class JetPoly {
 public:
  using Key = std::pair<int, MultiIndex>;

  JetPoly(int n, int k);
  static JetPoly identity(int n, int k);

  int dimension() const noexcept { return n_; }
  int order() const noexcept { return k_; }

  Scalar coeff(int i, const MultiIndex& alpha) const;
  /// Sets a coefficient (zero erases). Throws DomainError for a bad index or
  /// a degree outside [1, k].
  void set(int i, const MultiIndex& alpha, const Scalar& c);
  const std::map<Key, Scalar>& terms() const noexcept { return terms_; }

  /// Row i, column j: coefficient of x_j in output i.
  std::vector<std::vector<Scalar>> linear_part() const;

  /// p(x).
  std::vector<Scalar> operator()(const std::vector<Scalar>& x) const;

  friend bool operator==(const JetPoly& a, const JetPoly& b) {
    return a.n_ == b.n_ && a.k_ == b.k_ && a.terms_ == b.terms_;
  }

 private:
  int n_;
  int k_;
  std::map<Key, Scalar> terms_;
};

using JetD = JetPoly<double>;
using JetQ = JetPoly<Rational>;

/// Degree-k Taylor polynomial of p o q. Throws DimensionError on mismatch.
template <class Scalar>
JetPoly<Scalar> jet_compose(const JetPoly<Scalar>& p, const JetPoly<Scalar>& q);

/// Linear part invertible (|det| > 1e-12 for doubles, exact for rationals).
template <class Scalar>
bool jet_is_unit(const JetPoly<Scalar>& p);

/// q with p o q = q o p = id up to degree k, solved degree by degree.
/// Throws DomainError for a non-unit.
template <class Scalar>
JetPoly<Scalar> jet_invert(const JetPoly<Scalar>& p);

/// Drops the terms of degree > k (k <= p.order()).
template <class Scalar>
JetPoly<Scalar> project(const JetPoly<Scalar>& p, int k);

JetD to_double(const JetQ& p);
JetD jet_linear(const Matrix& a, int k);

/// Largest coefficient of a - b among the terms of the given degree (0: all).
double max_coeff_distance(const JetD& a, const JetD& b, int degree = 0);

/// Human-readable form, e.g. "[1.2*x1 - 0.2*x1^2]".
std::string to_string(const JetD& p);
std::string to_string(const JetQ& p);

/// {"n", "k", "terms": [{"i", "alpha", "num", "den"}]} (rational) or
/// [{"i", "alpha", "value"}] (double). Output indices are 0-based.
nlohmann::json jet_to_json(const JetD& p);
nlohmann::json jet_to_json(const JetQ& p);
bool jet_json_is_rational(const nlohmann::json& j);
JetQ rational_jet_from_json(const nlohmann::json& j);
/// Accepts both layouts.
JetD double_jet_from_json(const nlohmann::json& j);

struct TaylorJet {
  JetD jet;            // degree-k part of phi - x0 in u = x - x0
  Vector constant;     // phi(x0) - x0 (zero on the boundary)
  std::vector<double> accuracy;  // accuracy[j-1]: estimated error of the degree-j coefficients
  double cone_half_angle_deg = 90.0;
  bool low_confidence = false;   // narrow inward cone at x0
  double step = 0.0;
};

/// Taylor polynomial of order k (1 <= k <= 4) of map - x0 at x0 in ambient
/// coordinates, from a degree k+1 interpolant on a simplex lattice inside
/// K. The accuracy is |J(h) - J(h/2)| per degree. Throws StencilError when
/// no stencil with step h fits inside K at x0.
TaylorJet taylor_extract(const std::function<Vector(const Vector&)>& map, const ConvexBody& body, const Vector& x0,
                         int k, double h = 0.002);
/// Fits gamma and adds the identity exactly.
TaylorJet taylor_extract(const Diffeo& phi, const Vector& x0, int k, double h = 0.002);

/// Boundary orders O(x0); nullopt stands for infinity.
struct BoundaryOrderSpec {
  struct Entry {
    Vector point;
    std::optional<int> order;
  };
  std::vector<Entry> entries;

  /// The same order at `samples` boundary samples.
  static BoundaryOrderSpec uniform(const ConvexBody& body, std::optional<int> order, int samples,
                                   std::uint64_t seed = 0);
};

struct MembershipReport {
  struct Point {
    Vector point;
    int order_checked = 0;
    bool clipped = false;  // requested order exceeded k_cap
    double deviation = 0.0;
    bool low_confidence = false;
    bool pass = true;
    std::string note;
  };
  std::vector<Point> points;
  bool pass = true;
};

/// For each entry, the jet of phi at x0 up to min(O(x0), k_cap) must be the
/// identity within tol coefficient-wise.
MembershipReport diff_O_membership(const Diffeo& phi, const BoundaryOrderSpec& spec, int k_cap, double tol,
                                   double h = 0.002);

}  // namespace diffk
