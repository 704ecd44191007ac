#ifndef SOSEKF_DATA_HPP
#define SOSEKF_DATA_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sosekf/loss.hpp"

namespace sosekf {

enum class Scheme { kWellspecified, kAlternating, kFixedReplay, kCsv };
enum class FeatureLaw { kUniformSphere, kUniformCube, kFixedList };

Scheme scheme_from_string(const std::string& s);
std::string to_string(Scheme s);
FeatureLaw feature_law_from_string(const std::string& s);
std::string to_string(FeatureLaw law);

/// Everything needed to regenerate a stream deterministically.
struct StreamSpec {
  int n = 1;
  int d = 1;
  Scheme scheme = Scheme::kWellspecified;
  std::optional<Vector> theta_true;  // required iff scheme == kWellspecified
  FeatureLaw feature_law = FeatureLaw::kUniformSphere;
  double radius = 1.0;  // sphere radius, or cube half-width
  std::vector<Observation> fixed_list;  // kFixedReplay / kFixedList source
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError on violated invariants
};

struct Stream {
  StreamSpec spec;
  std::vector<Observation> observations;
  double d_x = 0.0;  // realized max feature norm
};

/// Labels drawn from the logistic model at theta_true; features iid
/// from spec.feature_law. Deterministic given the seed.
Stream gen_wellspecified(const StreamSpec& spec);

/// Deterministic streams exercising the adversarial quantifier:
///   alternating: X_t cycles +/- basis vectors scaled to radius,
///                 y_t = (-1)^t;
///   fixed_replay: replays spec.fixed_list, cycling if n exceeds it.
Stream gen_adversarial(const StreamSpec& spec);

/// Dispatches on spec.scheme (kCsv is not generable; use load_csv).
Stream generate(const StreamSpec& spec);

/// Header `y,x1,...,xd`; y in {-1,1} or {0,1} (0 mapped to -1).
Stream load_csv(const std::string& path);
void save_csv(const Stream& stream, const std::string& path);

}  // namespace sosekf

#endif  // SOSEKF_DATA_HPP
