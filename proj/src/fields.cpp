#include "diffk/fields.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "diffk/errors.hpp"
#include "diffk/numdiff.hpp"

namespace diffk {

namespace {

constexpr double kThetaInflation = 1.05;
constexpr double kBoundaryPullIn = 1e-4;

std::vector<double> time_grid(const TimeInterval& time, int count) {
  std::vector<double> ts;
  if (count <= 1 || time.end == time.begin) {
    ts.push_back(time.begin);
    return ts;
  }
  for (int i = 0; i < count; ++i) {
    ts.push_back(i == count - 1 ? time.end : time.begin + (time.end - time.begin) * i / (count - 1));
  }
  return ts;
}

// Interior points plus boundary points pulled slightly inward.
std::vector<Vector> probe_points(const ConvexBody& body, int count, std::uint64_t seed) {
  std::vector<Vector> pts = body.sample_interior(count, seed);
  const Vector& c = body.interior_point();
  for (const Vector& b : body.sample_boundary(count, seed + 0x9e3779b97f4a7c15ULL)) {
    pts.push_back(b + kBoundaryPullIn * (c - b));
  }
  return pts;
}

}  // namespace

BoundaryVanishingField::BoundaryVanishingField(ConvexBody body, std::vector<ScalarExpr> base,
                                               Weight weight, TimeInterval time, Vector params,
                                               const FieldOptions& opts)
    : body_(std::move(body)), base_(std::move(base)), weight_(weight), time_(time),
      params_(std::move(params)) {
  const int n = body_.dimension();
  if (static_cast<int>(base_.size()) != n) {
    throw DimensionError("field: " + std::to_string(base_.size()) + " components for a body of dimension " +
                         std::to_string(n));
  }
  if (!(time_.end >= time_.begin)) throw DomainError("field: empty time interval");
  if (weight_.kind == Weight::Kind::FlatExp && !(weight_.alpha > 0.0))
    throw DomainError("field: flat weight needs alpha > 0");
  for (const auto& e : base_) {
    if (e.max_space_index() > n)
      throw DimensionError("field: expression '" + e.to_string() + "' references x" +
                           std::to_string(e.max_space_index()) + " in dimension " + std::to_string(n));
    if (e.max_param_index() > params_.size())
      throw DimensionError("field: expression '" + e.to_string() + "' references p" +
                           std::to_string(e.max_param_index()) + " but only " +
                           std::to_string(params_.size()) + " parameters are bound");
  }
  if (weight_.kind == Weight::Kind::None) {
    for (const Vector& x : body_.sample_boundary(64, opts.seed + 17)) {
      for (double t : time_grid(time_, 5)) {
        const Vector v = eval(t, x);
        if (v.cwiseAbs().maxCoeff() != 0.0) {
          std::ostringstream os;
          os << "field: unweighted base does not vanish at boundary point (" << x.transpose()
             << ") at t=" << t;
          throw DomainError(os.str());
        }
      }
    }
  }
  if (opts.theta) {
    if (!(*opts.theta >= 0.0) || !std::isfinite(*opts.theta))
      throw DomainError("field: supplied theta must be finite and >= 0");
    theta_ = *opts.theta;
  } else {
    theta_ = lipschitz_seminorm(*this, opts.theta_time_samples, opts.theta_space_samples, opts.seed);
  }
}

BoundaryVanishingField BoundaryVanishingField::zero(const ConvexBody& body, TimeInterval time) {
  FieldOptions opts;
  opts.theta = 0.0;
  return BoundaryVanishingField(body, std::vector<ScalarExpr>(static_cast<std::size_t>(body.dimension())),
                                Weight::slack(), time, Vector(), opts);
}

double BoundaryVanishingField::weight_at(const Vector& x) const {
  switch (weight_.kind) {
    case Weight::Kind::None:
      return 1.0;
    case Weight::Kind::SlackProduct: {
      const Vector s = body_.scaled_slacks(x);
      double w = 1.0;
      for (Eigen::Index i = 0; i < s.size(); ++i) w *= s(i);
      return w;
    }
    case Weight::Kind::FlatExp: {
      const double d = body_.scaled_slacks(x).minCoeff();
      return d > 0.0 ? std::exp(-weight_.alpha / d) : 0.0;
    }
  }
  return 0.0;
}

Vector BoundaryVanishingField::eval(double t, const Vector& x) const {
  if (!time_.contains(t)) {
    std::ostringstream os;
    os << "field: time " << t << " outside [" << time_.begin << ", " << time_.end << "]";
    throw DomainError(os.str());
  }
  if (!body_.contains(x)) throw DomainError("field: point is not in K");
  const int n = dimension();
  Vector out(n);
  const double w = weight_at(x);
  if (w == 0.0 || amplitude_ == 0.0) {
    out.setZero();
    return out;
  }
  const double s = clock(t);
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
  const std::span<const double> ps(params_.data(), static_cast<std::size_t>(params_.size()));
  for (int i = 0; i < n; ++i) out(i) = amplitude_ * base_[static_cast<std::size_t>(i)].eval(s, xs, ps) * w;
  return out;
}

bool BoundaryVanishingField::is_autonomous() const {
  if (amplitude_ == 0.0) return true;
  for (const auto& e : base_)
    if (e.uses_time()) return false;
  return true;
}

int BoundaryVanishingField::param_count() const {
  int m = 0;
  for (const auto& e : base_) m = std::max(m, e.max_param_index());
  return m;
}

BoundaryVanishingField BoundaryVanishingField::rescaled(double t0, double t1) const {
  if (!time_.contains(t0) || !time_.contains(t1)) {
    std::ostringstream os;
    os << "rescaled: [" << t0 << ", " << t1 << "] is not inside [" << time_.begin << ", " << time_.end << "]";
    throw DomainError(os.str());
  }
  BoundaryVanishingField out(*this);
  const double span = t1 - t0;
  out.clock_offset_ = clock(t0);
  out.clock_slope_ = clock_slope_ * span;
  out.amplitude_ = amplitude_ * span;
  out.time_ = {0.0, 1.0};
  out.theta_ = std::abs(span) * theta_;
  return out;
}

BoundaryVanishingField BoundaryVanishingField::with_params(Vector params, const FieldOptions& opts) const {
  BoundaryVanishingField out(*this);
  if (params.size() < param_count())
    throw DimensionError("with_params: expected " + std::to_string(param_count()) + " parameters");
  out.params_ = std::move(params);
  out.theta_ = opts.theta ? *opts.theta
                          : lipschitz_seminorm(out, opts.theta_time_samples, opts.theta_space_samples, opts.seed);
  return out;
}

double lipschitz_seminorm(const BoundaryVanishingField& field, int t_samples, int x_samples,
                          std::uint64_t seed) {
  if (t_samples < 2 || x_samples < 2) throw DomainError("lipschitz_seminorm: sample counts must be >= 2");
  const ConvexBody& body = field.body();
  const auto points = probe_points(body, x_samples, seed);
  double sup = 0.0;
  for (double t : time_grid(field.time(), t_samples)) {
    auto f = [&](const Vector& y) { return field.eval(t, y); };
    for (const Vector& x : points) sup = std::max(sup, operator_norm(fd_jacobian(f, body, x)));
  }
  return kThetaInflation * sup;
}

PointwiseBoundReport verify_pointwise_bound(const BoundaryVanishingField& field, double t, int samples,
                                            std::uint64_t seed) {
  PointwiseBoundReport rep;
  const ConvexBody& body = field.body();
  const double theta = field.theta_bound();
  for (const Vector& x : probe_points(body, std::max(samples, 1), seed)) {
    const double size = field.eval(t, x).norm();
    const double cap = theta * body.distance_to_boundary(x);
    const double ratio = size == 0.0 ? 0.0 : (cap > 0.0 ? size / cap : INFINITY);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    ++rep.samples;
  }
  rep.pass = rep.max_ratio <= 1.0;
  return rep;
}

LieAlgebraCurve::LieAlgebraCurve(BoundaryVanishingField field) : field_(std::move(field)) {
  if (field_.time().begin != 0.0 || field_.time().end != 1.0)
    throw DomainError("LieAlgebraCurve: field must be defined on [0, 1]");
  if (!(field_.theta_bound() <= kMaxCurveTheta)) {
    std::ostringstream os;
    os << "LieAlgebraCurve: certificate theta=" << field_.theta_bound() << " exceeds 1/3";
    throw CertificateError(os.str());
  }
}

LieAlgebraCurve LieAlgebraCurve::over(const BoundaryVanishingField& field, double t0, double t1) {
  return LieAlgebraCurve(field.rescaled(t0, t1));
}

BoundaryVanishingField field_from_json(const nlohmann::json& j, const ConvexBody& body,
                                       const FieldOptions& opts) {
  std::vector<ScalarExpr> base;
  for (const auto& e : j.at("base")) base.push_back(ScalarExpr::parse(e.get<std::string>()));
  Weight w = Weight::slack();
  if (j.contains("weight")) {
    const auto& jw = j.at("weight");
    if (jw.is_null()) {
      w = Weight::none();
    } else {
      const auto kind = jw.at("kind").get<std::string>();
      if (kind == "slack") w = Weight::slack();
      else if (kind == "flat") w = Weight::flat(jw.value("alpha", 1.0));
      else throw DomainError("field descriptor: unknown weight kind '" + kind + "'");
    }
  }
  TimeInterval time;
  if (j.contains("time")) {
    const auto& jt = j.at("time");
    time = {jt.at(0).get<double>(), jt.at(1).get<double>()};
  }
  Vector params;
  if (j.contains("params")) {
    const auto& jp = j.at("params");
    params.resize(static_cast<Eigen::Index>(jp.size()));
    for (std::size_t i = 0; i < jp.size(); ++i) params(static_cast<Eigen::Index>(i)) = jp[i].get<double>();
  }
  return BoundaryVanishingField(body, std::move(base), w, time, std::move(params), opts);
}

nlohmann::json field_to_json(const BoundaryVanishingField& field) {
  nlohmann::json j;
  auto base = nlohmann::json::array();
  for (const auto& e : field.base()) base.push_back(e.to_string());
  j["base"] = base;
  switch (field.weight().kind) {
    case Weight::Kind::SlackProduct:
      j["weight"] = {{"kind", "slack"}};
      break;
    case Weight::Kind::FlatExp:
      j["weight"] = {{"kind", "flat"}, {"alpha", field.weight().alpha}};
      break;
    case Weight::Kind::None:
      j["weight"] = nullptr;
      break;
  }
  j["time"] = {field.time().begin, field.time().end};
  if (field.params().size() > 0) {
    auto p = nlohmann::json::array();
    for (Eigen::Index i = 0; i < field.params().size(); ++i) p.push_back(field.params()(i));
    j["params"] = p;
  }
  j["theta_bound"] = field.theta_bound();
  return j;
}

}  // namespace diffk
