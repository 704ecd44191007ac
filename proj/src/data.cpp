#include "sosekf/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sosekf/rng.hpp"

namespace sosekf {
namespace {

Vector draw_feature(const StreamSpec& spec, SplitMix64& rng, int t) {
  switch (spec.feature_law) {
    case FeatureLaw::kUniformSphere: {
      // Normalized Gaussian vector: uniform on the sphere surface, so
      // E[XX^T] = (radius^2/d) I.
      Vector x(spec.d);
      double norm = 0.0;
      do {
        for (int i = 0; i < spec.d; ++i) {
          x[i] = rng.normal();
        }
        norm = x.norm();
      } while (norm == 0.0);
      return (spec.radius / norm) * x;
    }
    case FeatureLaw::kUniformCube: {
      Vector x(spec.d);
      for (int i = 0; i < spec.d; ++i) {
        x[i] = spec.radius * (2.0 * rng.uniform01() - 1.0);
      }
      return x;
    }
    case FeatureLaw::kFixedList: {
      if (spec.fixed_list.empty()) {
        throw ConfigError("feature_law fixed_list requires a non-empty fixed_list");
      }
      return spec.fixed_list[static_cast<std::size_t>(t) % spec.fixed_list.size()].x;
    }
  }
  throw ConfigError("unknown feature law");
}

Stream finish(StreamSpec spec, std::vector<Observation> obs) {
  double d_x = 0.0;
  for (const auto& o : obs) {
    d_x = std::max(d_x, o.x.norm());
  }
  return Stream{std::move(spec), std::move(obs), d_x};
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Scheme scheme_from_string(const std::string& s) {
  if (s == "wellspecified") return Scheme::kWellspecified;
  if (s == "alternating") return Scheme::kAlternating;
  if (s == "fixed_replay") return Scheme::kFixedReplay;
  if (s == "csv") return Scheme::kCsv;
  throw ConfigError("unknown stream scheme: " + s);
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::kWellspecified: return "wellspecified";
    case Scheme::kAlternating: return "alternating";
    case Scheme::kFixedReplay: return "fixed_replay";
    case Scheme::kCsv: return "csv";
  }
  return "?";
}

FeatureLaw feature_law_from_string(const std::string& s) {
  if (s == "uniform_sphere") return FeatureLaw::kUniformSphere;
  if (s == "uniform_cube") return FeatureLaw::kUniformCube;
  if (s == "fixed_list") return FeatureLaw::kFixedList;
  throw ConfigError("unknown feature law: " + s);
}

std::string to_string(FeatureLaw law) {
  switch (law) {
    case FeatureLaw::kUniformSphere: return "uniform_sphere";
    case FeatureLaw::kUniformCube: return "uniform_cube";
    case FeatureLaw::kFixedList: return "fixed_list";
  }
  return "?";
}

void StreamSpec::validate() const {
  if (n < 1) throw ConfigError("stream: n must be >= 1");
  if (d < 1) throw ConfigError("stream: d must be >= 1");
  if (scheme == Scheme::kWellspecified) {
    if (!theta_true) {
      throw ConfigError("wellspecified stream requires theta_true");
    }
    if (theta_true->size() != d) {
      throw ConfigError("theta_true dimension does not match d");
    }
  }
  if (radius <= 0.0 && feature_law != FeatureLaw::kFixedList) {
    throw ConfigError("stream: radius must be positive");
  }
  if (scheme == Scheme::kFixedReplay && fixed_list.empty()) {
    throw ConfigError("fixed_replay stream requires a non-empty fixed_list");
  }
  for (const auto& o : fixed_list) {
    if (o.x.size() != d) {
      throw ConfigError("fixed_list observation dimension does not match d");
    }
  }
}

Stream gen_wellspecified(const StreamSpec& spec) {
  spec.validate();
  if (spec.scheme != Scheme::kWellspecified) {
    throw ConfigError("gen_wellspecified: scheme is " + to_string(spec.scheme));
  }
  SplitMix64 rng(spec.seed);
  std::vector<Observation> obs;
  obs.reserve(static_cast<std::size_t>(spec.n));
  for (int t = 0; t < spec.n; ++t) {
    Vector x = draw_feature(spec, rng, t);
    double p_plus = sigmoid(spec.theta_true->dot(x));
    int y = rng.uniform01() < p_plus ? +1 : -1;
    obs.emplace_back(std::move(x), y);
  }
  return finish(spec, std::move(obs));
}

Stream gen_adversarial(const StreamSpec& spec) {
  spec.validate();
  std::vector<Observation> obs;
  obs.reserve(static_cast<std::size_t>(spec.n));
  if (spec.scheme == Scheme::kAlternating) {
    for (int t = 1; t <= spec.n; ++t) {
      int slot = (t - 1) % (2 * spec.d);
      Vector x = Vector::Zero(spec.d);
      x[slot % spec.d] = (slot < spec.d ? spec.radius : -spec.radius);
      obs.emplace_back(std::move(x), t % 2 == 0 ? +1 : -1);
    }
  } else if (spec.scheme == Scheme::kFixedReplay) {
    for (int t = 0; t < spec.n; ++t) {
      obs.push_back(spec.fixed_list[static_cast<std::size_t>(t) % spec.fixed_list.size()]);
    }
  } else {
    throw ConfigError("gen_adversarial: scheme is " + to_string(spec.scheme));
  }
  return finish(spec, std::move(obs));
}

Stream generate(const StreamSpec& spec) {
  switch (spec.scheme) {
    case Scheme::kWellspecified: return gen_wellspecified(spec);
    case Scheme::kAlternating:
    case Scheme::kFixedReplay: return gen_adversarial(spec);
    case Scheme::kCsv:
      throw ConfigError("csv streams are loaded with load_csv, not generated");
  }
  throw ConfigError("unknown stream scheme");
}

Stream load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(path + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  if (header.empty() || header[0] != "y" || header.size() < 2) {
    throw ParseError(path + ":1: expected header y,x1,...,xd");
  }
  int d = static_cast<int>(header.size()) - 1;

  std::vector<Observation> obs;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> values;
    while (std::getline(ss, field, ',')) {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &pos);
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": bad number '" + field + "'");
      }
      if (pos != field.size()) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": bad number '" + field + "'");
      }
      values.push_back(v);
    }
    if (static_cast<int>(values.size()) != d + 1) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(d + 1) + " fields, got " + std::to_string(values.size()));
    }
    int y;
    if (values[0] == 1.0) {
      y = +1;
    } else if (values[0] == -1.0 || values[0] == 0.0) {
      y = -1;  // 0/1 labels map to -1/+1
    } else {
      throw ParseError(path + ":" + std::to_string(line_no) + ": label must be -1, 0, or 1");
    }
    Vector x(d);
    for (int i = 0; i < d; ++i) x[i] = values[static_cast<std::size_t>(i) + 1];
    obs.emplace_back(std::move(x), y);
  }
  if (obs.empty()) {
    throw ParseError(path + ": no data rows");
  }

  StreamSpec spec;
  spec.n = static_cast<int>(obs.size());
  spec.d = d;
  spec.scheme = Scheme::kCsv;
  return finish(std::move(spec), std::move(obs));
}

void save_csv(const Stream& stream, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path);
  }
  out << "y";
  for (int i = 1; i <= stream.spec.d; ++i) out << ",x" << i;
  out << "\n";
  for (const auto& o : stream.observations) {
    out << o.y;
    for (int i = 0; i < stream.spec.d; ++i) out << "," << format_real(o.x[i]);
    out << "\n";
  }
}

}  // namespace sosekf
