#include "diffk/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "diffk/errors.hpp"

namespace diffk {

namespace {

double facet_slack(const HPolytope& p, Eigen::Index i, const Vector& x) {
  double dot = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) dot += p.normals(i, j) * x(j);
  return p.offsets(i) - dot;
}

double row_norm(const HPolytope& p, Eigen::Index i) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < p.normals.cols(); ++j) s += p.normals(i, j) * p.normals(i, j);
  return std::sqrt(s);
}

// Distance along direction d from x (inside) to the boundary; +inf if unbounded.
double exit_distance(const HPolytope& p, const Vector& x, const Vector& d, Eigen::Index* facet) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < p.normals.rows(); ++i) {
    const double rate = p.normals.row(i).dot(d);
    if (rate <= 0.0) continue;
    const double s = facet_slack(p, i, x) / rate;
    if (s < best) {
      best = s;
      if (facet) *facet = i;
    }
  }
  return best;
}

}  // namespace

double fixed_order_norm(const Vector& v) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += v(i) * v(i);
  return std::sqrt(s);
}

ConvexBody::ConvexBody(int dim, std::variant<Ball, HPolytope> shape)
    : dim_(dim), shape_(std::move(shape)) {}

ConvexBody ConvexBody::ball(Vector center, double radius) {
  if (center.size() < 1) throw DimensionError("ball: empty center");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("ball: radius must be positive");
  const int n = static_cast<int>(center.size());
  return ConvexBody(n, Ball{std::move(center), radius});
}

ConvexBody ConvexBody::hpolytope(Matrix normals, Vector offsets, Vector interior_point,
                                 double bounding_radius) {
  const auto n = interior_point.size();
  if (n < 1) throw DimensionError("hpolytope: empty interior point");
  if (normals.cols() != n || normals.rows() != offsets.size() || normals.rows() == 0)
    throw DimensionError("hpolytope: inconsistent A/b/interior_point sizes");
  if (!(bounding_radius > 0.0)) throw DomainError("hpolytope: bounding_radius must be positive");
  HPolytope p{std::move(normals), std::move(offsets), std::move(interior_point), bounding_radius};
  for (Eigen::Index i = 0; i < p.normals.rows(); ++i) {
    if (row_norm(p, i) == 0.0)
      throw DomainError("hpolytope: facet " + std::to_string(i) + " has a zero normal");
    if (!(facet_slack(p, i, p.interior_point) > 0.0))
      throw DomainError("hpolytope: interior_point violates facet " + std::to_string(i) +
                        " strictly");
  }
  // Boundedness certificate: every coordinate ray must exit within bounding_radius.
  for (Eigen::Index k = 0; k < n; ++k) {
    for (double sign : {1.0, -1.0}) {
      Vector d = Vector::Zero(n);
      d(k) = sign;
      const double s = exit_distance(p, p.interior_point, d, nullptr);
      if (!(s <= p.bounding_radius)) {
        std::ostringstream os;
        os << "hpolytope: ray " << (sign > 0 ? "+" : "-") << "e" << (k + 1)
           << " from interior_point does not exit within bounding_radius";
        throw DomainError(os.str());
      }
    }
  }
  return ConvexBody(static_cast<int>(n), std::move(p));
}

ConvexBody ConvexBody::box(const Vector& lo, const Vector& hi) {
  const auto n = lo.size();
  if (n < 1 || hi.size() != n) throw DimensionError("box: bad bounds");
  Matrix a = Matrix::Zero(2 * n, n);
  Vector b(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(hi(i) > lo(i))) throw DomainError("box: empty interior");
    a(2 * i, i) = -1.0;
    b(2 * i) = -lo(i);
    a(2 * i + 1, i) = 1.0;
    b(2 * i + 1) = hi(i);
  }
  Vector mid = 0.5 * (lo + hi);
  const double radius = 0.5 * (hi - lo).norm();
  return hpolytope(std::move(a), std::move(b), std::move(mid), radius);
}

ConvexBody ConvexBody::interval(double lo, double hi) {
  return box(Vector::Constant(1, lo), Vector::Constant(1, hi));
}

ConvexBody ConvexBody::simplex(int n) {
  if (n < 1) throw DimensionError("simplex: dimension must be positive");
  Matrix a = Matrix::Zero(n + 1, n);
  Vector b = Vector::Zero(n + 1);
  for (int i = 0; i < n; ++i) a(i, i) = -1.0;
  a.row(n).setOnes();
  b(n) = 1.0;
  Vector centroid = Vector::Constant(n, 1.0 / (n + 1));
  return hpolytope(std::move(a), std::move(b), std::move(centroid), 1.0);
}

void ConvexBody::check_dimension(const Vector& x) const {
  if (x.size() != dim_) {
    throw DimensionError("point has dimension " + std::to_string(x.size()) + ", body has " +
                         std::to_string(dim_));
  }
}

const Vector& ConvexBody::interior_point() const {
  if (const auto* b = as_ball()) return b->center;
  return std::get<HPolytope>(shape_).interior_point;
}

double ConvexBody::bounding_radius() const {
  if (const auto* b = as_ball()) return b->radius;
  return std::get<HPolytope>(shape_).bounding_radius;
}

Vector ConvexBody::scaled_slacks(const Vector& x) const {
  check_dimension(x);
  if (const auto* b = as_ball()) {
    return Vector::Constant(1, b->radius - fixed_order_norm(x - b->center));
  }
  const auto& p = std::get<HPolytope>(shape_);
  Vector s(p.normals.rows());
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = facet_slack(p, i, x) / row_norm(p, i);
  return s;
}

bool ConvexBody::contains(const Vector& x) const {
  check_dimension(x);
  if (const auto* b = as_ball()) return fixed_order_norm(x - b->center) <= b->radius;
  const auto& p = std::get<HPolytope>(shape_);
  for (Eigen::Index i = 0; i < p.normals.rows(); ++i) {
    if (facet_slack(p, i, x) < 0.0) return false;
  }
  return true;
}

double ConvexBody::distance_to_boundary(const Vector& x) const {
  if (!contains(x)) throw DomainError("distance_to_boundary: point is not in K");
  return scaled_slacks(x).minCoeff();
}

std::vector<Vector> ConvexBody::active_normals(const Vector& x, double slack_tol) const {
  check_dimension(x);
  std::vector<Vector> out;
  if (const auto* b = as_ball()) {
    Vector r = x - b->center;
    const double nr = fixed_order_norm(r);
    if (b->radius - nr <= slack_tol && nr > 0.0) out.push_back(r / nr);
    return out;
  }
  const auto& p = std::get<HPolytope>(shape_);
  for (Eigen::Index i = 0; i < p.normals.rows(); ++i) {
    const double rn = row_norm(p, i);
    if (facet_slack(p, i, x) / rn <= slack_tol) out.push_back(p.normals.row(i).transpose() / rn);
  }
  return out;
}

// Nudges x(k) by single ulps until the facet slack evaluates to exactly zero.
static bool snap_to_facet(const HPolytope& p, Eigen::Index facet, Vector& x) {
  Eigen::Index k = 0;
  p.normals.row(facet).cwiseAbs().maxCoeff(&k);
  double rest = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (j != k) rest += p.normals(facet, j) * x(j);
  x(k) = (p.offsets(facet) - rest) / p.normals(facet, k);
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double s = facet_slack(p, facet, x);
    if (s == 0.0) return true;
    // move x(k) in the direction that reduces |s|
    const double toward = (s > 0.0) == (p.normals(facet, k) > 0.0) ? INFINITY : -INFINITY;
    x(k) = std::nextafter(x(k), toward);
  }
  return false;
}

bool ConvexBody::sample_facet_point(int facet, std::mt19937_64& rng, Vector& out) const {
  // Uniform on the facet: rejection from a square patch of the facet plane
  // centred at the projection of the interior point.
  const auto& p = std::get<HPolytope>(shape_);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Vector a = p.normals.row(facet).transpose();
  const double an = a.norm();
  const Vector& c = p.interior_point;
  const Vector foot = c + (facet_slack(p, facet, c) / (an * an)) * a;
  // orthonormal basis of the plane: trailing columns of a full QR of a
  Eigen::HouseholderQR<Matrix> qr(Matrix(a / an));
  const Matrix q = qr.householderQ();
  const double reach = 2.0 * p.bounding_radius;
  for (int attempt = 0; attempt < 4000; ++attempt) {
    Vector x = foot;
    for (int i = 1; i < dim_; ++i) x += reach * unit(rng) * q.col(i);
    if (!snap_to_facet(p, facet, x)) continue;
    bool inside = true;
    for (Eigen::Index i = 0; i < p.normals.rows() && inside; ++i) inside = facet_slack(p, i, x) >= 0.0;
    if (!inside) continue;
    out = std::move(x);
    return true;
  }
  return false;
}

bool ConvexBody::sample_sphere_point(std::mt19937_64& rng, Vector& out) const {
  const auto& b = std::get<Ball>(shape_);
  std::normal_distribution<double> normal;
  Vector u(dim_);
  for (int attempt = 0; attempt < 200; ++attempt) {
    for (int i = 0; i < dim_; ++i) u(i) = normal(rng);
    const double nu = u.norm();
    if (nu < 1e-8) continue;
    Vector x = b.center + b.radius * u / nu;
    if (dim_ == 1) {
      x(0) = b.center(0) + (u(0) > 0 ? b.radius : -b.radius);
    }
    Eigen::Index k = 0;
    (x - b.center).cwiseAbs().maxCoeff(&k);
    for (int step = 0; step < 64; ++step) {
      const double r = fixed_order_norm(x - b.center);
      if (r == b.radius) {
        out = std::move(x);
        return true;
      }
      const double away = x(k) >= b.center(k) ? INFINITY : -INFINITY;
      x(k) = std::nextafter(x(k), r < b.radius ? away : -away);
    }
  }
  return false;
}

std::vector<Vector> ConvexBody::sample_boundary(int m, std::uint64_t seed) const {
  if (m < 1) throw DomainError("sample_boundary: m must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Vector> out;
  out.reserve(m);
  if (is_ball()) {
    Vector x;
    while (static_cast<int>(out.size()) < m) {
      if (!sample_sphere_point(rng, x)) throw Error("sample_boundary: could not place sphere point");
      out.push_back(x);
    }
    return out;
  }
  const auto& p = std::get<HPolytope>(shape_);
  const int facets = static_cast<int>(p.normals.rows());
  Vector x;
  for (int i = 0; static_cast<int>(out.size()) < m; ++i) {
    const int facet = i % facets;
    // facets of measure zero (redundant constraints) are skipped
    if (sample_facet_point(facet, rng, x)) out.push_back(x);
    if (i > 1000 * (m + facets) ) throw Error("sample_boundary: facet sampling failed");
  }
  return out;
}

std::vector<Vector> ConvexBody::sample_interior(int m, std::uint64_t seed) const {
  if (m < 1) throw DomainError("sample_interior: m must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Vector> out;
  out.reserve(m);
  out.push_back(interior_point());
  const double r = bounding_radius();
  Vector x(dim_);
  while (static_cast<int>(out.size()) < m) {
    for (int i = 0; i < dim_; ++i) x(i) = interior_point()(i) + r * unit(rng);
    if (contains(x) && scaled_slacks(x).minCoeff() > 0.0) out.push_back(x);
  }
  return out;
}

bool operator==(const ConvexBody& a, const ConvexBody& b) {
  if (a.dim_ != b.dim_ || a.shape_.index() != b.shape_.index()) return false;
  if (const auto* ba = a.as_ball()) {
    const auto* bb = b.as_ball();
    return ba->center == bb->center && ba->radius == bb->radius;
  }
  const auto* pa = a.as_polytope();
  const auto* pb = b.as_polytope();
  return pa->normals == pb->normals && pa->offsets == pb->offsets &&
         pa->interior_point == pb->interior_point;
}

namespace {

Vector vec_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw DomainError(std::string("body descriptor: '") + what + "' must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

nlohmann::json vec_to_json(const Vector& v) {
  auto j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

}  // namespace

ConvexBody body_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "ball") {
    return ConvexBody::ball(vec_from_json(j.at("center"), "center"), j.at("radius").get<double>());
  }
  if (type == "hpolytope") {
    const auto& rows = j.at("A");
    Vector b = vec_from_json(j.at("b"), "b");
    Vector ip = vec_from_json(j.at("interior_point"), "interior_point");
    Matrix a(static_cast<Eigen::Index>(rows.size()), ip.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Vector row = vec_from_json(rows[i], "A row");
      if (row.size() != ip.size()) throw DimensionError("body descriptor: A row has wrong length");
      a.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return ConvexBody::hpolytope(std::move(a), std::move(b), std::move(ip),
                                 j.at("bounding_radius").get<double>());
  }
  if (type == "box") {
    return ConvexBody::box(vec_from_json(j.at("lo"), "lo"), vec_from_json(j.at("hi"), "hi"));
  }
  if (type == "simplex") return ConvexBody::simplex(j.at("n").get<int>());
  throw DomainError("body descriptor: unknown type '" + type + "'");
}

nlohmann::json body_to_json(const ConvexBody& body) {
  if (const auto* b = body.as_ball()) {
    return {{"type", "ball"}, {"center", vec_to_json(b->center)}, {"radius", b->radius}};
  }
  const auto* p = body.as_polytope();
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < p->normals.rows(); ++i) rows.push_back(vec_to_json(p->normals.row(i).transpose()));
  return {{"type", "hpolytope"},
          {"A", rows},
          {"b", vec_to_json(p->offsets)},
          {"interior_point", vec_to_json(p->interior_point)},
          {"bounding_radius", p->bounding_radius}};
}

}  // namespace diffk
