#include "diffk/jets.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "diffk/errors.hpp"

namespace diffk {

int degree(const MultiIndex& alpha) { return std::accumulate(alpha.begin(), alpha.end(), 0); }

namespace {

// All monomials in n variables of degree <= k, graded, with a product table.
struct MonomialBasis {
  int n = 0, k = 0;
  std::vector<MultiIndex> monos;
  std::map<MultiIndex, int> index;
  std::vector<int> parent;  // monos[m] = monos[parent[m]] + e_{factor[m]}
  std::vector<int> factor;
  std::vector<std::vector<int>> product;  // -1 when the degree exceeds k

  MonomialBasis(int n_, int k_) : n(n_), k(k_) {
    for (int d = 0; d <= k; ++d) add_degree(MultiIndex(static_cast<std::size_t>(n), 0), 0, d);
    for (std::size_t m = 0; m < monos.size(); ++m) index[monos[m]] = static_cast<int>(m);
    parent.assign(monos.size(), -1);
    factor.assign(monos.size(), -1);
    for (std::size_t m = 1; m < monos.size(); ++m) {
      MultiIndex a = monos[m];
      int j = 0;
      while (a[static_cast<std::size_t>(j)] == 0) ++j;
      --a[static_cast<std::size_t>(j)];
      parent[m] = index.at(a);
      factor[m] = j;
    }
    product.assign(monos.size(), std::vector<int>(monos.size(), -1));
    for (std::size_t a = 0; a < monos.size(); ++a)
      for (std::size_t b = 0; b < monos.size(); ++b) {
        MultiIndex s(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) s[static_cast<std::size_t>(j)] = monos[a][static_cast<std::size_t>(j)] + monos[b][static_cast<std::size_t>(j)];
        if (degree(s) <= k) product[a][b] = index.at(s);
      }
  }

  std::size_t size() const { return monos.size(); }
  int unit(int j) const {
    MultiIndex e(static_cast<std::size_t>(n), 0);
    e[static_cast<std::size_t>(j)] = 1;
    return index.at(e);
  }

 private:
  void add_degree(MultiIndex cur, int pos, int remaining) {
    if (pos == n - 1) {
      cur[static_cast<std::size_t>(pos)] = remaining;
      monos.push_back(cur);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      cur[static_cast<std::size_t>(pos)] = e;
      add_degree(cur, pos + 1, remaining - e);
    }
  }
};

template <class S>
using Dense = std::vector<S>;

template <class S>
Dense<S> multiply(const MonomialBasis& basis, const Dense<S>& a, const Dense<S>& b) {
  Dense<S> r(basis.size(), S(0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (b[j] == 0) continue;
      const int t = basis.product[i][j];
      if (t >= 0) r[static_cast<std::size_t>(t)] += a[i] * b[j];
    }
  }
  return r;
}

template <class S>
Dense<S> dense_component(const MonomialBasis& basis, const JetPoly<S>& p, int i) {
  Dense<S> d(basis.size(), S(0));
  for (const auto& [key, c] : p.terms())
    if (key.first == i) d[static_cast<std::size_t>(basis.index.at(key.second))] = c;
  return d;
}

double magnitude(double x) { return std::abs(x); }
Rational magnitude(const Rational& x) { return abs(x); }

bool is_singular_pivot(double x) { return std::abs(x) <= 1e-300; }
bool is_singular_pivot(const Rational& x) { return x == 0; }

// Gauss-Jordan with largest-magnitude pivoting; returns det, fills inverse
// when non-singular.
template <class S>
S gauss_inverse(std::vector<std::vector<S>> a, std::vector<std::vector<S>>* inverse) {
  const std::size_t n = a.size();
  std::vector<std::vector<S>> inv(n, std::vector<S>(n, S(0)));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = S(1);
  S det(1);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (magnitude(a[r][c]) > magnitude(a[piv][c])) piv = r;
    if (is_singular_pivot(a[piv][c])) return S(0);
    if (piv != c) {
      std::swap(a[piv], a[c]);
      std::swap(inv[piv], inv[c]);
      det = -det;
    }
    const S p = a[c][c];
    det *= p;
    for (std::size_t j = 0; j < n; ++j) {
      a[c][j] /= p;
      inv[c][j] /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c] == 0) continue;
      const S f = a[r][c];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  if (inverse) *inverse = std::move(inv);
  return det;
}

bool det_is_nonzero(double det) { return std::abs(det) > 1e-12; }
bool det_is_nonzero(const Rational& det) { return det != 0; }

template <class S>
void check_same_shape(const JetPoly<S>& p, const JetPoly<S>& q, const char* what) {
  if (p.dimension() != q.dimension() || p.order() != q.order())
    throw DimensionError(std::string(what) + ": jets differ in dimension or order");
}

std::string format_scalar(double c) {
  std::ostringstream os;
  os.precision(17);
  os << c;
  return os.str();
}
std::string format_scalar(const Rational& c) { return c.str(); }

template <class S>
std::string jet_string(const JetPoly<S>& p) {
  std::ostringstream os;
  os << '[';
  for (int i = 0; i < p.dimension(); ++i) {
    if (i) os << ", ";
    bool first = true;
    for (const auto& [key, c] : p.terms()) {
      if (key.first != i) continue;
      const bool neg = c < 0;
      const S mag = neg ? S(-c) : c;
      if (first) os << (neg ? "-" : "");
      else os << (neg ? " - " : " + ");
      first = false;
      bool need_star = false;
      if (!(mag == 1)) {
        os << format_scalar(mag);
        need_star = true;
      }
      for (std::size_t j = 0; j < key.second.size(); ++j) {
        const int e = key.second[j];
        if (e == 0) continue;
        os << (need_star ? "*" : "") << 'x' << (j + 1);
        if (e > 1) os << '^' << e;
        need_star = true;
      }
    }
    if (first) os << '0';
  }
  os << ']';
  return os.str();
}

nlohmann::json rational_part(const boost::multiprecision::cpp_int& v) {
  if (v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max())
    return static_cast<std::int64_t>(v);
  return v.str();
}

boost::multiprecision::cpp_int parse_integer(const nlohmann::json& j) {
  if (j.is_number_integer()) return boost::multiprecision::cpp_int(j.get<std::int64_t>());
  if (j.is_string()) {
    try {
      return boost::multiprecision::cpp_int(j.get<std::string>());
    } catch (const std::exception&) {
    }
  }
  throw ParseError(0, "jet JSON: num/den must be integers or integer strings");
}

void read_shape(const nlohmann::json& j, int& n, int& k) {
  if (!j.is_object() || !j.contains("n") || !j.contains("k") || !j.contains("terms") || !j["terms"].is_array())
    throw ParseError(0, "jet JSON: expected {\"n\", \"k\", \"terms\": [...]}");
  n = j["n"].get<int>();
  k = j["k"].get<int>();
}

}  // namespace

template <class S>
JetPoly<S>::JetPoly(int n, int k) : n_(n), k_(k) {
  if (n < 1) throw DimensionError("JetPoly: dimension must be >= 1");
  if (k < 1) throw DomainError("JetPoly: order must be >= 1");
}

template <class S>
JetPoly<S> JetPoly<S>::identity(int n, int k) {
  JetPoly p(n, k);
  for (int i = 0; i < n; ++i) {
    MultiIndex e(static_cast<std::size_t>(n), 0);
    e[static_cast<std::size_t>(i)] = 1;
    p.set(i, e, S(1));
  }
  return p;
}

template <class S>
S JetPoly<S>::coeff(int i, const MultiIndex& alpha) const {
  const auto it = terms_.find({i, alpha});
  return it == terms_.end() ? S(0) : it->second;
}

template <class S>
void JetPoly<S>::set(int i, const MultiIndex& alpha, const S& c) {
  if (i < 0 || i >= n_) throw DimensionError("JetPoly::set: output index out of range");
  if (static_cast<int>(alpha.size()) != n_) throw DimensionError("JetPoly::set: multi-index has the wrong length");
  for (int a : alpha)
    if (a < 0) throw DomainError("JetPoly::set: negative exponent");
  const int d = degree(alpha);
  if (d < 1 || d > k_) throw DomainError("JetPoly::set: degree must lie in [1, k]");
  if (c == 0) terms_.erase({i, alpha});
  else terms_[{i, alpha}] = c;
}

template <class S>
std::vector<std::vector<S>> JetPoly<S>::linear_part() const {
  std::vector<std::vector<S>> a(static_cast<std::size_t>(n_), std::vector<S>(static_cast<std::size_t>(n_), S(0)));
  for (const auto& [key, c] : terms_) {
    if (degree(key.second) != 1) continue;
    int j = 0;
    while (key.second[static_cast<std::size_t>(j)] == 0) ++j;
    a[static_cast<std::size_t>(key.first)][static_cast<std::size_t>(j)] = c;
  }
  return a;
}

template <class S>
std::vector<S> JetPoly<S>::operator()(const std::vector<S>& x) const {
  if (static_cast<int>(x.size()) != n_) throw DimensionError("JetPoly: argument has the wrong dimension");
  std::vector<S> out(static_cast<std::size_t>(n_), S(0));
  for (const auto& [key, c] : terms_) {
    S m = c;
    for (std::size_t j = 0; j < x.size(); ++j)
      for (int e = 0; e < key.second[j]; ++e) m *= x[j];
    out[static_cast<std::size_t>(key.first)] += m;
  }
  return out;
}

template <class S>
JetPoly<S> jet_compose(const JetPoly<S>& p, const JetPoly<S>& q) {
  check_same_shape(p, q, "jet_compose");
  const int n = p.dimension(), k = p.order();
  const MonomialBasis basis(n, k);
  std::vector<Dense<S>> qd;
  for (int j = 0; j < n; ++j) qd.push_back(dense_component(basis, q, j));

  // mono[m] = q^alpha_m truncated at degree k
  std::vector<Dense<S>> mono(basis.size());
  mono[0].assign(basis.size(), S(0));
  mono[0][0] = S(1);
  for (std::size_t m = 1; m < basis.size(); ++m)
    mono[m] = multiply(basis, mono[static_cast<std::size_t>(basis.parent[m])],
                       qd[static_cast<std::size_t>(basis.factor[m])]);

  std::vector<Dense<S>> out(static_cast<std::size_t>(n), Dense<S>(basis.size(), S(0)));
  for (const auto& [key, c] : p.terms()) {
    const Dense<S>& m = mono[static_cast<std::size_t>(basis.index.at(key.second))];
    Dense<S>& o = out[static_cast<std::size_t>(key.first)];
    for (std::size_t t = 0; t < m.size(); ++t)
      if (m[t] != 0) o[t] += c * m[t];
  }
  JetPoly<S> r(n, k);
  for (int i = 0; i < n; ++i)
    for (std::size_t t = 1; t < basis.size(); ++t) r.set(i, basis.monos[t], out[static_cast<std::size_t>(i)][t]);
  return r;
}

template <class S>
bool jet_is_unit(const JetPoly<S>& p) {
  return det_is_nonzero(gauss_inverse<S>(p.linear_part(), nullptr));
}

template <class S>
JetPoly<S> jet_invert(const JetPoly<S>& p) {
  const int n = p.dimension(), k = p.order();
  std::vector<std::vector<S>> ainv;
  const S det = gauss_inverse<S>(p.linear_part(), &ainv);
  if (!det_is_nonzero(det)) throw DomainError("jet_invert: linear part is not invertible");

  JetPoly<S> q(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      MultiIndex e(static_cast<std::size_t>(n), 0);
      e[static_cast<std::size_t>(j)] = 1;
      q.set(i, e, ainv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
  // degree d of p o q is A q_d + (terms from lower parts of q); cancel it
  for (int d = 2; d <= k; ++d) {
    const JetPoly<S> r = jet_compose(p, q);
    std::map<MultiIndex, std::vector<S>> residual;
    for (const auto& [key, c] : r.terms())
      if (degree(key.second) == d) {
        auto& col = residual.try_emplace(key.second, std::vector<S>(static_cast<std::size_t>(n), S(0))).first->second;
        col[static_cast<std::size_t>(key.first)] = c;
      }
    for (const auto& [alpha, col] : residual)
      for (int i = 0; i < n; ++i) {
        S v(0);
        for (int j = 0; j < n; ++j) v -= ainv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * col[static_cast<std::size_t>(j)];
        q.set(i, alpha, v);
      }
  }
  return q;
}

template <class S>
JetPoly<S> project(const JetPoly<S>& p, int k) {
  if (k < 1 || k > p.order()) throw DomainError("project: target order must lie in [1, k]");
  JetPoly<S> r(p.dimension(), k);
  for (const auto& [key, c] : p.terms())
    if (degree(key.second) <= k) r.set(key.first, key.second, c);
  return r;
}

template class JetPoly<double>;
template class JetPoly<Rational>;
template JetD jet_compose(const JetD&, const JetD&);
template JetQ jet_compose(const JetQ&, const JetQ&);
template bool jet_is_unit(const JetD&);
template bool jet_is_unit(const JetQ&);
template JetD jet_invert(const JetD&);
template JetQ jet_invert(const JetQ&);
template JetD project(const JetD&, int);
template JetQ project(const JetQ&, int);

JetD to_double(const JetQ& p) {
  JetD r(p.dimension(), p.order());
  for (const auto& [key, c] : p.terms()) r.set(key.first, key.second, static_cast<double>(c));
  return r;
}

JetD jet_linear(const Matrix& a, int k) {
  if (a.rows() != a.cols()) throw DimensionError("jet_linear: matrix must be square");
  const int n = static_cast<int>(a.rows());
  JetD r(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      MultiIndex e(static_cast<std::size_t>(n), 0);
      e[static_cast<std::size_t>(j)] = 1;
      r.set(i, e, a(i, j));
    }
  return r;
}

double max_coeff_distance(const JetD& a, const JetD& b, int deg) {
  check_same_shape(a, b, "max_coeff_distance");
  double worst = 0.0;
  auto visit = [&](const JetD& x, const JetD& y) {
    for (const auto& [key, c] : x.terms())
      if (deg == 0 || degree(key.second) == deg) worst = std::max(worst, std::abs(c - y.coeff(key.first, key.second)));
  };
  visit(a, b);
  visit(b, a);
  return worst;
}

std::string to_string(const JetD& p) { return jet_string(p); }
std::string to_string(const JetQ& p) { return jet_string(p); }

nlohmann::json jet_to_json(const JetD& p) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [key, c] : p.terms()) terms.push_back({{"i", key.first}, {"alpha", key.second}, {"value", c}});
  return {{"n", p.dimension()}, {"k", p.order()}, {"terms", terms}};
}

nlohmann::json jet_to_json(const JetQ& p) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [key, c] : p.terms())
    terms.push_back({{"i", key.first},
                     {"alpha", key.second},
                     {"num", rational_part(numerator(c))},
                     {"den", rational_part(denominator(c))}});
  return {{"n", p.dimension()}, {"k", p.order()}, {"terms", terms}};
}

bool jet_json_is_rational(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("terms") || !j["terms"].is_array()) return false;
  for (const auto& t : j["terms"])
    if (!t.contains("num")) return false;
  return true;
}

JetQ rational_jet_from_json(const nlohmann::json& j) {
  int n = 0, k = 0;
  read_shape(j, n, k);
  JetQ p(n, k);
  for (const auto& t : j["terms"]) {
    if (!t.contains("i") || !t.contains("alpha") || !t.contains("num"))
      throw ParseError(0, "jet JSON: rational terms need i, alpha, num (den optional)");
    const auto num = parse_integer(t["num"]);
    const auto den = t.contains("den") ? parse_integer(t["den"]) : boost::multiprecision::cpp_int(1);
    if (den == 0) throw ParseError(0, "jet JSON: zero denominator");
    p.set(t["i"].get<int>(), t["alpha"].get<MultiIndex>(), Rational(num, den));
  }
  return p;
}

JetD double_jet_from_json(const nlohmann::json& j) {
  if (jet_json_is_rational(j) && !j["terms"].empty()) return to_double(rational_jet_from_json(j));
  int n = 0, k = 0;
  read_shape(j, n, k);
  JetD p(n, k);
  for (const auto& t : j["terms"]) {
    if (!t.contains("i") || !t.contains("alpha") || !t.contains("value"))
      throw ParseError(0, "jet JSON: double terms need i, alpha, value");
    p.set(t["i"].get<int>(), t["alpha"].get<MultiIndex>(), t["value"].get<double>());
  }
  return p;
}

// ---------------------------------------------------------------------------
// Taylor extraction

namespace {

constexpr double kLowConfidenceAngleDeg = 10.0;

struct Stencil {
  Matrix v;  // columns: lattice directions
  double half_angle_deg = 90.0;
};

// n unit vectors forming a regular simplex in u's orthogonal complement.
std::vector<Vector> simplex_offsets(const Vector& u) {
  const Eigen::Index n = u.size();
  std::vector<Vector> out(static_cast<std::size_t>(n), Vector::Zero(n));
  if (n == 1) return out;
  const Matrix qu = Eigen::HouseholderQR<Matrix>(Matrix(u)).householderQ();
  const Matrix b = qu.rightCols(n - 1);
  const Matrix q1 = Eigen::HouseholderQR<Matrix>(Matrix(Vector::Ones(n))).householderQ();
  const Matrix c = q1.rightCols(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector p = -Vector::Ones(n) / static_cast<double>(n);
    p(i) += 1.0;
    Vector coords = c.transpose() * p;
    out[static_cast<std::size_t>(i)] = b * (coords / coords.norm());
  }
  return out;
}

Stencil choose_stencil(const ConvexBody& body, const Vector& x0, double reach) {
  const Eigen::Index n = x0.size();
  // bisect the inward normal cone at boundary points, else aim at the interior point
  Vector u = Vector::Zero(n);
  for (const Vector& a : body.active_normals(x0, 1e-12)) u -= a;
  if (u.norm() < 1e-12) u = body.interior_point() - x0;
  if (u.norm() < 1e-14) u = Vector::Unit(n, 0);
  u.normalize();
  const auto w = simplex_offsets(u);
  for (double beta = 1.0; beta >= 1.0 / 256.0; beta *= 0.5) {
    Stencil s;
    s.v.resize(n, n);
    bool fits = true;
    for (Eigen::Index i = 0; i < n && fits; ++i) {
      s.v.col(i) = u + beta * w[static_cast<std::size_t>(i)];
      fits = body.contains(x0 + reach * s.v.col(i));
    }
    if (fits) {
      s.half_angle_deg = n == 1 ? 90.0 : std::atan(beta) * 180.0 / M_PI;
      return s;
    }
  }
  throw StencilError("taylor_extract: no lattice stencil fits inside K at this point; retry with a smaller step");
}

struct Fit {
  JetD jet;
  Vector constant;
};

Fit fit_jet(const std::function<Vector(const Vector&)>& f, const Vector& x0, const Matrix& v, int k, double h) {
  const int n = static_cast<int>(x0.size());
  const int deg = k + 1;
  const MonomialBasis basis(n, deg);
  const Eigen::Index m = static_cast<Eigen::Index>(basis.size());
  Matrix vander(m, m), values(m, n);
  for (Eigen::Index r = 0; r < m; ++r) {
    const MultiIndex& s = basis.monos[static_cast<std::size_t>(r)];
    Vector sv(n);
    for (int j = 0; j < n; ++j) sv(j) = s[static_cast<std::size_t>(j)];
    for (Eigen::Index c = 0; c < m; ++c) {
      double mono = 1.0;
      for (int j = 0; j < n; ++j) mono *= std::pow(sv(j), basis.monos[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)]);
      vander(r, c) = mono;
    }
    const Vector y = f(x0 + h * (v * sv));
    if (y.size() != n) throw DimensionError("taylor_extract: map has the wrong output dimension");
    values.row(r) = y.transpose();
  }
  const Matrix coef = Eigen::FullPivLU<Matrix>(vander).solve(values);

  JetD in_s(n, deg);
  for (Eigen::Index c = 1; c < m; ++c)
    for (int i = 0; i < n; ++i) in_s.set(i, basis.monos[static_cast<std::size_t>(c)], coef(c, i));
  const Matrix to_s = (h * v).inverse();
  return {project(jet_compose(in_s, jet_linear(to_s, deg)), k), coef.row(0).transpose()};
}

TaylorJet extract(const std::function<Vector(const Vector&)>& f, const ConvexBody& body, const Vector& x0, int k,
                  double h) {
  if (k < 1 || k > 4) throw DomainError("taylor_extract: order must lie in [1, 4]");
  if (!(h > 0.0)) throw DomainError("taylor_extract: step must be positive");
  if (!body.contains(x0)) throw DomainError("taylor_extract: x0 is not in K");
  const Stencil st = choose_stencil(body, x0, h * (k + 1));
  const Fit coarse = fit_jet(f, x0, st.v, k, h);
  const Fit fine = fit_jet(f, x0, st.v, k, 0.5 * h);
  TaylorJet out{coarse.jet, coarse.constant, {}, st.half_angle_deg, st.half_angle_deg < kLowConfidenceAngleDeg, h};
  for (int d = 1; d <= k; ++d) out.accuracy.push_back(max_coeff_distance(coarse.jet, fine.jet, d));
  return out;
}

JetD add(const JetD& a, const JetD& b) {
  JetD r = a;
  for (const auto& [key, c] : b.terms()) r.set(key.first, key.second, r.coeff(key.first, key.second) + c);
  return r;
}

}  // namespace

TaylorJet taylor_extract(const std::function<Vector(const Vector&)>& map, const ConvexBody& body, const Vector& x0,
                         int k, double h) {
  return extract([&](const Vector& x) { return Vector(map(x) - x0); }, body, x0, k, h);
}

TaylorJet taylor_extract(const Diffeo& phi, const Vector& x0, int k, double h) {
  const int n = phi.body().dimension();
  TaylorJet t = extract([&](const Vector& x) { return phi.displacement(x); }, phi.body(), x0, k, h);
  t.jet = add(t.jet, JetD::identity(n, k));
  return t;
}

BoundaryOrderSpec BoundaryOrderSpec::uniform(const ConvexBody& body, std::optional<int> order, int samples,
                                             std::uint64_t seed) {
  BoundaryOrderSpec spec;
  for (Vector& p : body.sample_boundary(samples, seed)) spec.entries.push_back({std::move(p), order});
  return spec;
}

MembershipReport diff_O_membership(const Diffeo& phi, const BoundaryOrderSpec& spec, int k_cap, double tol,
                                   double h) {
  if (k_cap < 1 || k_cap > 4) throw DomainError("diff_O_membership: k_cap must lie in [1, 4]");
  MembershipReport rep;
  const int n = phi.body().dimension();
  for (const auto& e : spec.entries) {
    MembershipReport::Point pt;
    pt.point = e.point;
    const int wanted = e.order.value_or(std::numeric_limits<int>::max());
    if (wanted < 0) throw DomainError("diff_O_membership: negative order");
    pt.order_checked = std::min(wanted, k_cap);
    pt.clipped = wanted > k_cap;
    if (pt.clipped) pt.note = "verified to order " + std::to_string(k_cap) + " only";
    if (pt.order_checked > 0) {
      const TaylorJet t = taylor_extract(phi, e.point, pt.order_checked, h);
      pt.deviation = std::max(max_coeff_distance(t.jet, JetD::identity(n, pt.order_checked)),
                              t.constant.cwiseAbs().maxCoeff());
      pt.low_confidence = t.low_confidence;
      if (pt.low_confidence) pt.note += pt.note.empty() ? "narrow inward cone" : "; narrow inward cone";
      pt.pass = pt.deviation <= tol;
    }
    rep.pass = rep.pass && pt.pass;
    rep.points.push_back(std::move(pt));
  }
  return rep;
}

}  // namespace diffk
