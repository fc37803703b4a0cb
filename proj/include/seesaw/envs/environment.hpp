#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "seesaw/frame.hpp"

namespace seesaw::envs {

struct EnvSpec {
  std::string name;
  int height = 0;
  int width = 0;
  int actions = 0;
  int max_frames = 0;
  /// Score given to an episode the environment failed to finish.
  double failure_score = 0.0;

  void validate() const {
    if (height < 1 || width < 1) throw BadConfig("env frame dims must be positive");
    if (actions < 2) throw BadConfig("env needs at least 2 actions");
    if (max_frames < 1) throw BadConfig("env max_frames must be >= 1");
  }

  bool operator==(const EnvSpec&) const = default;
};

struct StepResult {
  Frame frame;
  double reward = 0.0;
  bool done = false;
};

/// Episodic pixel environment. A fresh instance is "done" until reset.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual const EnvSpec& spec() const = 0;
  /// Starts an episode whose whole course is determined by `seed` and the
  /// actions taken.
  virtual Frame reset(std::uint64_t seed) = 0;
  virtual StepResult step(int action) = 0;
};

using EnvFactory = std::function<std::unique_ptr<Environment>()>;

}  // namespace seesaw::envs
