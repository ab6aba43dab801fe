#include "singflow/field.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "singflow/errors.hpp"

namespace singflow {

namespace {

Box3 cube(double lo, double hi) { return {Vec3::Constant(lo), Vec3::Constant(hi)}; }

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::string& field, const std::map<std::string, double>& params,
                    std::initializer_list<const char*> known) {
  for (const auto& [key, value] : params) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown parameter '" + key + "' for field '" + field + "'");
    if (!std::isfinite(value)) throw ConfigError("parameter '" + key + "' is not finite");
  }
}

}  // namespace

Field Field::lorenz(double sigma, double rho, double beta) {
  Field f;
  f.kind_ = FieldKind::lorenz;
  f.name_ = "lorenz";
  f.params_ = {{"sigma", sigma}, {"rho", rho}, {"beta", beta}};
  f.c_ = {sigma, rho, beta, 0.0};
  f.region_ = {Vec3(-30, -30, -5), Vec3(30, 30, 55)};
  return f;
}

Field Field::linear(const Mat3& a) {
  Field f;
  f.kind_ = FieldKind::linear;
  f.name_ = "linear";
  f.a_ = a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      f.params_["a" + std::to_string(i + 1) + std::to_string(j + 1)] = a(i, j);
  f.region_ = cube(-1, 1);
  return f;
}

Field Field::translation(const Vec3& v) {
  Field f;
  f.kind_ = FieldKind::translation;
  f.name_ = "translation";
  f.v_ = v;
  f.params_ = {{"vx", v.x()}, {"vy", v.y()}, {"vz", v.z()}};
  f.region_ = cube(0, 1);
  return f;
}

Field Field::suspension_saddle(double omega, double mult_u, double mult_s, double stiffness) {
  if (!(omega > 0) || !(mult_u > 1) || !(mult_s > 0 && mult_s < 1) || !(stiffness >= 0))
    throw ConfigError("suspension-saddle needs omega > 0, mult_u > 1, 0 < mult_s < 1, stiffness >= 0");
  Field f;
  f.kind_ = FieldKind::suspension_saddle;
  f.name_ = "suspension-saddle";
  f.params_ = {{"omega", omega}, {"mult_u", mult_u}, {"mult_s", mult_s}, {"stiffness", stiffness}};
  // radial rate a and vertical rate b at the periodic orbit, period 2 pi / omega
  f.c_ = {omega, omega * std::log(mult_u) / (2 * std::numbers::pi),
          -omega * std::log(mult_s) / (2 * std::numbers::pi), stiffness};
  f.region_ = {Vec3(-1.5, -1.5, -0.5), Vec3(1.5, 1.5, 0.5)};
  return f;
}

Field Field::polynomial(std::array<std::vector<Monomial>, 3> components, const Box3& region) {
  for (const auto& comp : components)
    for (const auto& m : comp) {
      if (m.px < 0 || m.py < 0 || m.pz < 0 || m.degree() > 4)
        throw ConfigError("polynomial monomial exponents must be non-negative with total degree <= 4");
      if (!std::isfinite(m.coeff)) throw ConfigError("polynomial coefficient is not finite");
    }
  if (!((region.hi.array() > region.lo.array()).all()))
    throw ConfigError("polynomial field needs a non-degenerate region");
  Field f;
  f.kind_ = FieldKind::polynomial;
  f.name_ = "polynomial";
  f.poly_ = std::move(components);
  f.region_ = region;
  return f;
}

Field Field::double_sink() {
  std::array<std::vector<Monomial>, 3> c;
  c[0] = {{1, 0, 0, 1.0}, {3, 0, 0, -1.0}};
  c[1] = {{0, 1, 0, -1.0}};
  c[2] = {{0, 0, 1, -1.0}};
  Field f = polynomial(std::move(c), {Vec3(-2, -1, -1), Vec3(2, 1, 1)});
  f.name_ = "double-sink";
  return f;
}

Field Field::from_catalogue(const std::string& name, const std::map<std::string, double>& params) {
  if (name == "lorenz") {
    reject_unknown(name, params, {"sigma", "rho", "beta"});
    return lorenz(param_or(params, "sigma", 10.0), param_or(params, "rho", 28.0),
                  param_or(params, "beta", 8.0 / 3.0));
  }
  if (name == "linear") {
    reject_unknown(name, params, {"a11", "a12", "a13", "a21", "a22", "a23", "a31", "a32", "a33",
                                  "d1", "d2", "d3"});
    Mat3 a = Vec3(-2, -1, 1).asDiagonal();
    bool has_diag = params.count("d1") || params.count("d2") || params.count("d3");
    if (has_diag) {
      a = Vec3(param_or(params, "d1", -2), param_or(params, "d2", -1), param_or(params, "d3", 1))
              .asDiagonal();
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        auto key = "a" + std::to_string(i + 1) + std::to_string(j + 1);
        if (auto it = params.find(key); it != params.end()) a(i, j) = it->second;
      }
    return linear(a);
  }
  if (name == "translation" || name == "constant") {
    reject_unknown(name, params, {"vx", "vy", "vz"});
    Vec3 v(param_or(params, "vx", 1.0), param_or(params, "vy", 0.0), param_or(params, "vz", 0.0));
    if (v.norm() == 0.0) throw ConfigError("translation field needs a non-zero velocity");
    return translation(v);
  }
  if (name == "suspension-saddle") {
    reject_unknown(name, params, {"omega", "mult_u", "mult_s", "stiffness"});
    return suspension_saddle(param_or(params, "omega", 1.0), param_or(params, "mult_u", 2.0),
                             param_or(params, "mult_s", 0.5), param_or(params, "stiffness", 50.0));
  }
  if (name == "double-sink") {
    reject_unknown(name, params, {});
    return double_sink();
  }
  throw ConfigError("unknown catalogue field '" + name + "'");
}

Vec3 Field::raw_evaluate(const Vec3& p) const {
  const double x = p.x(), y = p.y(), z = p.z();
  switch (kind_) {
    case FieldKind::lorenz: {
      const double s = c_[0], r = c_[1], b = c_[2];
      return {s * (y - x), x * (r - z) - y, x * y - b * z};
    }
    case FieldKind::linear:
      return a_ * p;
    case FieldKind::translation:
      return v_;
    case FieldKind::suspension_saddle: {
      const double w = c_[0], a = c_[1], b = c_[2], k = c_[3];
      const double q = x * x + y * y - 1.0;
      const double radial = 0.5 * a * q * (1.0 + k * q * q);
      return {radial * x - w * y, radial * y + w * x, -b * z * (1.0 + k * z * z)};
    }
    case FieldKind::polynomial: {
      Vec3 out = Vec3::Zero();
      for (int c = 0; c < 3; ++c)
        for (const auto& m : poly_[c]) out[c] += m.coeff * ipow(x, m.px) * ipow(y, m.py) * ipow(z, m.pz);
      return out;
    }
  }
  return Vec3::Zero();
}

Mat3 Field::raw_jacobian(const Vec3& p) const {
  const double x = p.x(), y = p.y(), z = p.z();
  Mat3 j = Mat3::Zero();
  switch (kind_) {
    case FieldKind::lorenz: {
      const double s = c_[0], r = c_[1], b = c_[2];
      j << -s, s, 0, r - z, -1, -x, y, x, -b;
      break;
    }
    case FieldKind::linear:
      j = a_;
      break;
    case FieldKind::translation:
      break;
    case FieldKind::suspension_saddle: {
      const double w = c_[0], a = c_[1], b = c_[2], k = c_[3];
      const double q = x * x + y * y - 1.0;
      const double g = 1.0 + k * q * q;
      const double radial = 0.5 * a * q * g;
      // d(radial)/dx = a x (g + 2 k q^2), same in y
      const double dr = a * (g + 2.0 * k * q * q);
      j << radial + dr * x * x, dr * x * y - w, 0,  //
          dr * x * y + w, radial + dr * y * y, 0,    //
          0, 0, -b * (1.0 + 3.0 * k * z * z);
      break;
    }
    case FieldKind::polynomial:
      for (int c = 0; c < 3; ++c)
        for (const auto& m : poly_[c]) {
          if (m.px > 0) j(c, 0) += m.coeff * m.px * ipow(x, m.px - 1) * ipow(y, m.py) * ipow(z, m.pz);
          if (m.py > 0) j(c, 1) += m.coeff * m.py * ipow(x, m.px) * ipow(y, m.py - 1) * ipow(z, m.pz);
          if (m.pz > 0) j(c, 2) += m.coeff * m.pz * ipow(x, m.px) * ipow(y, m.py) * ipow(z, m.pz - 1);
        }
      break;
  }
  return j;
}

Vec3 Field::evaluate(const Vec3& x) const {
  if (!x.allFinite()) throw EvaluationDomainError("field evaluated at a non-finite point");
  Vec3 v = scale_ * raw_evaluate(x);
  if (!v.allFinite()) throw EvaluationDomainError("field value is not finite");
  return v;
}

Mat3 Field::jacobian(const Vec3& x) const {
  if (!x.allFinite()) throw EvaluationDomainError("jacobian evaluated at a non-finite point");
  Mat3 j = scale_ * raw_jacobian(x);
  if (!j.allFinite()) throw EvaluationDomainError("jacobian is not finite");
  return j;
}

Field Field::scaled(double c) const {
  Field f = *this;
  f.scale_ *= c;
  return f;
}

double parse_rational(const std::string& text) {
  auto parse_decimal = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse number '" + text + "'");
    }
    if (used != s.size()) throw ConfigError("cannot parse number '" + text + "'");
    return v;
  };
  auto slash = text.find('/');
  if (slash == std::string::npos) return parse_decimal(text);
  double num = parse_decimal(text.substr(0, slash));
  double den = parse_decimal(text.substr(slash + 1));
  if (den == 0.0) throw ConfigError("zero denominator in '" + text + "'");
  return num / den;
}

std::map<std::string, double> parse_params(const std::string& text) {
  std::map<std::string, double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("malformed parameter '" + item + "' (expected name=value)");
    std::string key = item.substr(0, eq);
    try {
      out[key] = parse_rational(item.substr(eq + 1));
    } catch (const ConfigError&) {
      throw ConfigError("malformed value for parameter '" + key + "'");
    }
  }
  return out;
}

Box3 parse_region(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(parse_rational(item));
  if (v.size() != 6) throw ConfigError("region needs six numbers xmin,xmax,ymin,ymax,zmin,zmax");
  Box3 b{Vec3(v[0], v[2], v[4]), Vec3(v[1], v[3], v[5])};
  if (!(b.hi.array() > b.lo.array()).all()) throw ConfigError("region has an empty axis");
  return b;
}

namespace {

double json_number(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_rational(j.get<std::string>());
  throw ConfigError("expected a number or a rational string");
}

Box3 json_region(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("region must be [[xmin,xmax],[ymin,ymax],[zmin,zmax]]");
  Box3 b;
  for (int a = 0; a < 3; ++a) {
    if (!j[a].is_array() || j[a].size() != 2) throw ConfigError("region axis must be [min,max]");
    b.lo[a] = json_number(j[a][0]);
    b.hi[a] = json_number(j[a][1]);
  }
  if (!(b.hi.array() > b.lo.array()).all()) throw ConfigError("region has an empty axis");
  return b;
}

}  // namespace

Field parse_field_spec(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field spec is not valid JSON: ") + e.what());
  }
  const std::string kind = doc.value("kind", "");
  std::map<std::string, double> params;
  if (doc.contains("params")) {
    if (!doc["params"].is_object()) throw ConfigError("params must be an object");
    for (auto& [k, v] : doc["params"].items()) {
      try {
        params[k] = json_number(v);
      } catch (const ConfigError&) {
        throw ConfigError("malformed value for parameter '" + k + "'");
      }
    }
  }
  Field field = [&] {
    if (kind == "catalogue") return Field::from_catalogue(doc.value("name", ""), params);
    if (kind == "polynomial") {
      if (!doc.contains("region")) throw ConfigError("polynomial field needs a region");
      const auto& coeffs = doc.at("coefficients");
      if (!coeffs.is_array() || coeffs.size() != 3)
        throw ConfigError("coefficients must hold one monomial list per component");
      std::array<std::vector<Monomial>, 3> comps;
      for (int c = 0; c < 3; ++c)
        for (const auto& term : coeffs[c]) {
          if (!term.is_array() || term.size() != 4) throw ConfigError("monomial must be [px,py,pz,c]");
          comps[c].push_back({term[0].get<int>(), term[1].get<int>(), term[2].get<int>(),
                              json_number(term[3])});
        }
      return Field::polynomial(std::move(comps), json_region(doc["region"]));
    }
    throw ConfigError("field kind must be 'catalogue' or 'polynomial'");
  }();
  if (doc.contains("region")) field.set_region(json_region(doc["region"]));
  return field;
}

}  // namespace singflow
