#ifndef SOSEKF_LEARNERS_HPP
#define SOSEKF_LEARNERS_HPP

#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "sosekf/data.hpp"
#include "sosekf/loss.hpp"

namespace sosekf {

/// The observations seen so far, in arrival order.
using History = std::vector<Observation>;

/// State shared by the matrix-carrying recursions. For the Kalman
/// recursion p holds P_t; for the semi-online recursion it holds the
/// most recent fully recomputed matrix; for the Newton-step baseline
/// it holds the inverse of the accumulated gradient outer-product matrix.
struct LearnerState {
  Vector theta;
  SpdMatrix p;
  int step;   // t, starting at 1
  double p1;  // initialization scale, P_1 = p1 I
};

/// theta_1 = 0, P_1 = p1 I, step 1.
LearnerState make_initial_state(int d, double p1);

/// sigmoid(theta^T x): probability forecast for y = +1.
double learner_predict(const LearnerState& state, const Vector& x);

/// One Kalman step:
///   P_{t+1} = rank-one downdate of P_t with weight hessian_weight(X_t, theta_t),
///   theta_{t+1} = theta_t + P_{t+1} y_t X_t / (1 + e^{y_t theta_t^T X_t}).
LearnerState ekf_step(const LearnerState& state, const Observation& obs);

/// One semi-online step. The matrix is recomputed from scratch:
/// starting at P_1, every past X_u enters a rank-one downdate with its
/// weight taken at the CURRENT theta_t, so the full history is required.
/// history must contain observations 1..t with obs as the t-th.
/// Cost O(t d^2).
LearnerState sos_step(const LearnerState& state, const History& history, const Observation& obs);

/// Minimizer of sum_s loss_s(theta) + ||theta||^2 / (2 p1) by damped
/// Newton iteration (full step, halved while the objective increases),
/// stopping when the gradient norm is <= 1e-10. Empty history returns 0.
/// Throws ConvergenceError (with the final gradient norm) after 100
/// iterations without convergence.
Vector ftl_fit(const History& history, double p1, const Vector& theta_init);

/// Step-size schedule for gradient descent, indexed by t >= 1.
using RateSchedule = std::function<double(int)>;

/// theta_{t+1} = theta_t - rate(t) * gradient. The matrix is unused.
LearnerState ogd_step(const LearnerState& state, const Observation& obs,
                      const RateSchedule& rate);

/// Online Newton step baseline. state.p holds A_t^{-1} where
/// A_t = A_{t-1} + g_t g_t^T and A_0 = I / p1:
///   theta_{t+1} = theta_t - (1/gamma) A_t^{-1} g_t,
/// then the step is halved until theta_{t+1} lies in the centered ball
/// of the given diameter (radial rescale as last resort). The
/// projection is a baseline convenience, cheaper than the exact
/// A_t-norm projection.
LearnerState ons_step(const LearnerState& state, const Observation& obs,
                      double gamma, double diameter);

enum class LearnerKind { kEkf, kSos, kFtl, kOgd, kOns };

LearnerKind learner_kind_from_string(const std::string& s);
std::string to_string(LearnerKind kind);

struct LearnerParams {
  double p1 = 1.0;
  double ogd_rate_c = 1.0;     // eta_t = c / sqrt(t)
  double ons_gamma = 1.0;
  double ons_diameter = 20.0;
};

/// Uniform driver interface over the five learners. Instances are
/// single-threaded; run one per thread for parallel replicates.
class OnlineLearner {
 public:
  virtual ~OnlineLearner() = default;
  virtual const LearnerState& state() const = 0;
  virtual void observe(const Observation& obs) = 0;
  virtual std::string_view name() const = 0;
};

std::unique_ptr<OnlineLearner> make_learner(LearnerKind kind, int d, const LearnerParams& params);

}  // namespace sosekf

#endif  // SOSEKF_LEARNERS_HPP
