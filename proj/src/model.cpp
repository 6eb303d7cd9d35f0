#include "isocost/model.hpp"

#include "isocost/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace isocost {

namespace {

std::string describe_point(const VectorXd& x, const VectorXd& u) {
  std::ostringstream os;
  os << "x = [" << x.transpose() << "], u = [" << u.transpose() << "]";
  return os.str();
}

void check_dims(const SystemModel& model, const VectorXd& x, const VectorXd& u) {
  if (x.size() != model.state_dim) {
    std::ostringstream os;
    os << model.label << ": state has " << x.size() << " entries, expected " << model.state_dim;
    throw UsageError(os.str());
  }
  if (u.size() != model.control_dim) {
    std::ostringstream os;
    os << model.label << ": control has " << u.size() << " entries, expected "
       << model.control_dim;
    throw UsageError(os.str());
  }
}

}  // namespace

VectorXd eval_dynamics(const SystemModel& model, const VectorXd& x, const VectorXd& u) {
  check_dims(model, x, u);
  VectorXd dx = model.dynamics(x, u);
  if (dx.size() != model.state_dim) {
    throw ModelEvaluationError(model.label + ": dynamics returned a vector of wrong dimension");
  }
  if (!dx.allFinite()) {
    throw ModelEvaluationError(model.label + ": dynamics not finite at " + describe_point(x, u));
  }
  return dx;
}

double eval_cost_rate(const SystemModel& model, const VectorXd& x, const VectorXd& u) {
  check_dims(model, x, u);
  const double g = model.cost_rate(x, u);
  if (!std::isfinite(g)) {
    throw ModelEvaluationError(model.label + ": cost rate not finite at " + describe_point(x, u));
  }
  if (g < 0.0) {
    std::ostringstream os;
    os << model.label << ": cost rate " << g << " is negative at " << describe_point(x, u)
       << "; running cost must be nonnegative";
    throw ModelEvaluationError(os.str());
  }
  return g;
}

SystemModel make_system_a() {
  SystemModel m;
  m.label = "system_a";
  m.state_dim = 2;
  m.control_dim = 1;
  m.dynamics = [](const VectorXd& x, const VectorXd& u) {
    VectorXd dx(2);
    dx(0) = x(1);
    dx(1) = u(0) - x(0) * x(0);
    return dx;
  };
  m.cost_rate = [](const VectorXd& x, const VectorXd& u) {
    const double s = std::sin(x(1));
    const double c = std::cos(x(1));
    const double w = u(0) - x(0) * x(0);
    return x(0) * x(0) + s * s + c * c * w * w;
  };
  return m;
}

SystemModel make_pendulum() {
  SystemModel m;
  m.label = "pendulum";
  m.state_dim = 2;
  m.control_dim = 1;
  // m = 1, l = 1, b = 0.5, g = 9.81; e1 = angle - pi so the upright position
  // is the origin. sin(e1 + pi) = -sin(e1) keeps the raw-coordinate form
  // visible instead of baking the sign in.
  m.dynamics = [](const VectorXd& e, const VectorXd& u) {
    VectorXd de(2);
    de(0) = e(1);
    de(1) = 9.81 * std::sin(e(0) + M_PI) - 0.5 * e(1) - u(0);
    return de;
  };
  m.cost_rate = [](const VectorXd& e, const VectorXd& u) {
    return e(0) * e(0) + e(1) * e(1) + u(0) * u(0);
  };
  return m;
}

SystemModel make_double_integrator() {
  SystemModel m;
  m.label = "double_integrator";
  m.state_dim = 2;
  m.control_dim = 1;
  m.dynamics = [](const VectorXd& z, const VectorXd& v) {
    VectorXd dz(2);
    dz(0) = z(1);
    dz(1) = v(0);
    return dz;
  };
  m.cost_rate = [](const VectorXd& z, const VectorXd& v) {
    return z(0) * z(0) + z(1) * z(1) + v(0) * v(0);
  };
  return m;
}

Vector2d system_a_forward_state(const VectorXd& x) {
  if (x.size() != 2) throw UsageError("system_a transform expects a 2-vector state");
  return Vector2d(x(0), std::sin(x(1)));
}

double system_a_forward_control(const VectorXd& x, double u) {
  if (x.size() != 2) throw UsageError("system_a transform expects a 2-vector state");
  return std::cos(x(1)) * (u - x(0) * x(0));
}

InverseControl system_a_inverse_control(const VectorXd& x, double v, double cos_floor,
                                        double caution_threshold) {
  if (x.size() != 2) throw UsageError("system_a transform expects a 2-vector state");
  const double c = std::cos(x(1));
  if (std::abs(c) < cos_floor) {
    std::ostringstream os;
    os << "control transform singular: |cos(x2)| = " << std::abs(c) << " < " << cos_floor
       << " at x2 = " << x(1);
    throw SingularityError(os.str());
  }
  InverseControl out;
  out.u = v / c + x(0) * x(0);
  out.near_singular = std::abs(c) < caution_threshold;
  return out;
}

ControlLaw system_a_law_from_linear_gain(const Eigen::RowVectorXd& K, double cos_floor) {
  if (K.size() != 2) throw UsageError("system_a linear gain must have 2 entries");
  ControlLaw law;
  law.label = "system_a_linear_gain";
  Eigen::RowVector2d gain = K;
  law.fn = [gain, cos_floor](const VectorXd& x) {
    const Vector2d z = system_a_forward_state(x);
    const double v = -(gain * z)(0);
    VectorXd u(1);
    u(0) = system_a_inverse_control(x, v, cos_floor).u;
    return u;
  };
  return law;
}

namespace {

std::map<std::string, SystemModel>& registry_storage() {
  static std::map<std::string, SystemModel> models = {
      {"system_a", make_system_a()},
      {"pendulum", make_pendulum()},
      {"double_integrator", make_double_integrator()},
  };
  return models;
}

std::mutex& registry_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

SystemModel get_model(const std::string& name) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  auto& models = registry_storage();
  auto it = models.find(name);
  if (it == models.end()) {
    std::string known;
    for (const auto& [k, v] : models) known += (known.empty() ? "" : ", ") + k;
    throw UsageError("unknown model '" + name + "'; registered models: " + known);
  }
  return it->second;
}

void register_model(const SystemModel& model) {
  if (model.label.empty()) throw UsageError("cannot register a model without a label");
  if (model.state_dim <= 0 || model.control_dim <= 0) {
    throw UsageError("cannot register model '" + model.label + "' with non-positive dimensions");
  }
  if (!model.dynamics || !model.cost_rate) {
    throw UsageError("cannot register model '" + model.label +
                     "' without dynamics and cost rate");
  }
  std::lock_guard<std::mutex> lock(registry_mutex());
  auto& models = registry_storage();
  if (models.count(model.label)) {
    throw UsageError("model '" + model.label + "' is already registered");
  }
  models.emplace(model.label, model);
}

std::vector<std::string> registered_models() {
  std::lock_guard<std::mutex> lock(registry_mutex());
  std::vector<std::string> names;
  for (const auto& [k, v] : registry_storage()) names.push_back(k);
  return names;
}

}  // namespace isocost
