#include "sosekf/learners.hpp"

#include <cmath>
#include <utility>

namespace sosekf {
namespace {

constexpr double kGradTol = 1e-10;
constexpr int kNewtonMaxIter = 100;
constexpr int kMaxHalvings = 60;
// Near the optimum the Newton decrement drops below the objective's own
// floating-point resolution (the objective is a sum of n terms); treating
// a few ulps of apparent increase as a decrease keeps the full step from
// being rejected on roundoff noise while the gradient is still > kGradTol.
constexpr double kObjectiveSlack = 1e-14;

void require_dim(const LearnerState& state, const Observation& obs, const char* where) {
  if (obs.x.size() != state.theta.size()) {
    throw DimensionError(std::string(where) + ": observation dimension " +
                         std::to_string(obs.x.size()) + " vs state dimension " +
                         std::to_string(state.theta.size()));
  }
}

void require_finite(const Vector& theta, int step, const char* where) {
  if (!theta.allFinite()) {
    throw NumericError(std::string(where) + ": non-finite parameter at step " +
                       std::to_string(step));
  }
}

double regularized_objective(const History& history, double p1, const Vector& theta) {
  double value = theta.squaredNorm() / (2.0 * p1);
  for (const auto& obs : history) {
    value += logistic_loss(obs, theta);
  }
  return value;
}

}  // namespace

LearnerState make_initial_state(int d, double p1) {
  if (d < 1) throw ConfigError("learner dimension must be >= 1");
  if (!(p1 > 0.0)) throw ConfigError("p1 must be positive");
  return LearnerState{Vector::Zero(d), SpdMatrix::identity(d, p1), 1, p1};
}

double learner_predict(const LearnerState& state, const Vector& x) {
  if (x.size() != state.theta.size()) {
    throw DimensionError("learner_predict: dimension mismatch");
  }
  return sigmoid(state.theta.dot(x));
}

LearnerState ekf_step(const LearnerState& state, const Observation& obs) {
  require_dim(state, obs, "ekf_step");
  double margin = state.theta.dot(obs.x);
  SpdMatrix p_next = rank_one_downdate(state.p, obs.x, hessian_weight_margin(margin));
  double ym = static_cast<double>(obs.y) * margin;
  Vector theta_next =
      state.theta + p_next.mat() * ((static_cast<double>(obs.y) * sigmoid(-ym)) * obs.x);
  require_finite(theta_next, state.step, "ekf_step");
  return LearnerState{std::move(theta_next), std::move(p_next), state.step + 1, state.p1};
}

LearnerState sos_step(const LearnerState& state, const History& history, const Observation& obs) {
  require_dim(state, obs, "sos_step");
  if (history.size() != static_cast<std::size_t>(state.step)) {
    throw Error("sos_step: history length " + std::to_string(history.size()) +
                " does not match step " + std::to_string(state.step));
  }
  if (history.back().y != obs.y || !(history.back().x.array() == obs.x.array()).all()) {
    throw Error("sos_step: obs is not the last history entry");
  }
  // Full recomputation: every past feature re-weighted at the current theta.
  SpdMatrix p_next = SpdMatrix::identity(state.theta.size(), state.p1);
  for (const auto& past : history) {
    p_next = rank_one_downdate(p_next, past.x, hessian_weight(past.x, state.theta));
  }
  double ym = static_cast<double>(obs.y) * state.theta.dot(obs.x);
  Vector theta_next =
      state.theta + p_next.mat() * ((static_cast<double>(obs.y) * sigmoid(-ym)) * obs.x);
  require_finite(theta_next, state.step, "sos_step");
  return LearnerState{std::move(theta_next), std::move(p_next), state.step + 1, state.p1};
}

Vector ftl_fit(const History& history, double p1, const Vector& theta_init) {
  if (!(p1 > 0.0)) throw ConfigError("ftl_fit: p1 must be positive");
  const auto d = theta_init.size();
  if (history.empty()) {
    return Vector::Zero(d);
  }
  for (const auto& obs : history) {
    if (obs.x.size() != d) throw DimensionError("ftl_fit: observation dimension mismatch");
  }

  Vector theta = theta_init;
  double objective = regularized_objective(history, p1, theta);
  double grad_norm = 0.0;
  for (int iter = 0; iter < kNewtonMaxIter; ++iter) {
    Vector grad = theta / p1;
    Matrix hess = Matrix::Identity(d, d) / p1;
    for (const auto& obs : history) {
      grad += loss_gradient(obs, theta);
      hess += hessian_weight(obs.x, theta) * (obs.x * obs.x.transpose());
    }
    grad_norm = grad.norm();
    if (grad_norm <= kGradTol) {
      return theta;
    }
    Vector direction = solve_spd(SpdMatrix(std::move(hess)), grad);
    double step_scale = 1.0;
    bool accepted = false;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      Vector candidate = theta - step_scale * direction;
      double candidate_objective = regularized_objective(history, p1, candidate);
      if (candidate_objective <= objective + kObjectiveSlack * (1.0 + std::abs(objective))) {
        theta = std::move(candidate);
        objective = candidate_objective;
        accepted = true;
        break;
      }
      step_scale /= 2.0;
    }
    if (!accepted) {
      throw ConvergenceError("ftl_fit: damped Newton step rejected after " +
                                 std::to_string(kMaxHalvings) + " halvings",
                             grad_norm);
    }
  }
  // Re-test the gradient at the final iterate before giving up.
  Vector grad = theta / p1;
  for (const auto& obs : history) grad += loss_gradient(obs, theta);
  if (grad.norm() <= kGradTol) return theta;
  throw ConvergenceError("ftl_fit: no convergence after " + std::to_string(kNewtonMaxIter) +
                             " iterations",
                         grad.norm());
}

LearnerState ogd_step(const LearnerState& state, const Observation& obs,
                      const RateSchedule& rate) {
  require_dim(state, obs, "ogd_step");
  Vector theta_next = state.theta - rate(state.step) * loss_gradient(obs, state.theta);
  require_finite(theta_next, state.step, "ogd_step");
  return LearnerState{std::move(theta_next), state.p, state.step + 1, state.p1};
}

LearnerState ons_step(const LearnerState& state, const Observation& obs,
                      double gamma, double diameter) {
  require_dim(state, obs, "ons_step");
  if (!(gamma > 0.0) || !(diameter > 0.0)) {
    throw ConfigError("ons_step: gamma and diameter must be positive");
  }
  Vector g = loss_gradient(obs, state.theta);
  SpdMatrix p_next = rank_one_downdate(state.p, g, 1.0);
  Vector step = (-1.0 / gamma) * (p_next.mat() * g);
  double radius = diameter / 2.0;
  Vector theta_next = state.theta + step;
  for (int h = 0; h < kMaxHalvings && theta_next.norm() > radius; ++h) {
    step /= 2.0;
    theta_next = state.theta + step;
  }
  if (theta_next.norm() > radius) {
    theta_next *= radius / theta_next.norm();
  }
  require_finite(theta_next, state.step, "ons_step");
  return LearnerState{std::move(theta_next), std::move(p_next), state.step + 1, state.p1};
}

LearnerKind learner_kind_from_string(const std::string& s) {
  if (s == "ekf") return LearnerKind::kEkf;
  if (s == "sos") return LearnerKind::kSos;
  if (s == "ftl") return LearnerKind::kFtl;
  if (s == "ogd") return LearnerKind::kOgd;
  if (s == "ons") return LearnerKind::kOns;
  throw ConfigError("unknown learner kind: " + s);
}

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kEkf: return "ekf";
    case LearnerKind::kSos: return "sos";
    case LearnerKind::kFtl: return "ftl";
    case LearnerKind::kOgd: return "ogd";
    case LearnerKind::kOns: return "ons";
  }
  return "?";
}

namespace {

class EkfLearner final : public OnlineLearner {
 public:
  EkfLearner(int d, double p1) : state_(make_initial_state(d, p1)) {}
  const LearnerState& state() const override { return state_; }
  void observe(const Observation& obs) override { state_ = ekf_step(state_, obs); }
  std::string_view name() const override { return "ekf"; }

 private:
  LearnerState state_;
};

class SosLearner final : public OnlineLearner {
 public:
  SosLearner(int d, double p1) : state_(make_initial_state(d, p1)) {}
  const LearnerState& state() const override { return state_; }
  void observe(const Observation& obs) override {
    history_.push_back(obs);
    state_ = sos_step(state_, history_, obs);
  }
  std::string_view name() const override { return "sos"; }

 private:
  LearnerState state_;
  History history_;
};

class FtlLearner final : public OnlineLearner {
 public:
  FtlLearner(int d, double p1) : state_(make_initial_state(d, p1)) {}
  const LearnerState& state() const override { return state_; }
  void observe(const Observation& obs) override {
    history_.push_back(obs);
    state_.theta = ftl_fit(history_, state_.p1, state_.theta);  // warm start
    state_.step += 1;
  }
  std::string_view name() const override { return "ftl"; }

 private:
  LearnerState state_;
  History history_;
};

class OgdLearner final : public OnlineLearner {
 public:
  OgdLearner(int d, double p1, double rate_c)
      : state_(make_initial_state(d, p1)),
        rate_([rate_c](int t) { return rate_c / std::sqrt(static_cast<double>(t)); }) {}
  const LearnerState& state() const override { return state_; }
  void observe(const Observation& obs) override { state_ = ogd_step(state_, obs, rate_); }
  std::string_view name() const override { return "ogd"; }

 private:
  LearnerState state_;
  RateSchedule rate_;
};

class OnsLearner final : public OnlineLearner {
 public:
  OnsLearner(int d, double p1, double gamma, double diameter)
      : state_(make_initial_state(d, p1)), gamma_(gamma), diameter_(diameter) {}
  const LearnerState& state() const override { return state_; }
  void observe(const Observation& obs) override {
    state_ = ons_step(state_, obs, gamma_, diameter_);
  }
  std::string_view name() const override { return "ons"; }

 private:
  LearnerState state_;
  double gamma_;
  double diameter_;
};

}  // namespace

std::unique_ptr<OnlineLearner> make_learner(LearnerKind kind, int d, const LearnerParams& params) {
  switch (kind) {
    case LearnerKind::kEkf: return std::make_unique<EkfLearner>(d, params.p1);
    case LearnerKind::kSos: return std::make_unique<SosLearner>(d, params.p1);
    case LearnerKind::kFtl: return std::make_unique<FtlLearner>(d, params.p1);
    case LearnerKind::kOgd: return std::make_unique<OgdLearner>(d, params.p1, params.ogd_rate_c);
    case LearnerKind::kOns:
      return std::make_unique<OnsLearner>(d, params.p1, params.ons_gamma, params.ons_diameter);
  }
  throw ConfigError("unknown learner kind");
}

}  // namespace sosekf
