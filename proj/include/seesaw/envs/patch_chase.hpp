#pragma once

#include <cstdlib>
#include <utility>
#include <vector>

#include "seesaw/envs/environment.hpp"
#include "seesaw/rng.hpp"

namespace seesaw::envs {

/// 64x64 chase task: move the white 8x8 agent onto the 8x8 green target.
///
/// Objects sit on a 4px lattice. Actions are {noop, up, down, left, right}
/// and move 4px, clamped to the board. Each step costs 0.01; covering at
/// least half of the target pays +1 and respawns it. Spawns never overlap the
/// agent and are drawn from a stream seeded by reset().
class PatchChase final : public Environment {
 public:
  static constexpr int kSize = 64;
  static constexpr int kObject = 8;
  static constexpr int kMove = 4;
  static constexpr int kMaxPos = kSize - kObject;
  static constexpr int kStartPos = 28;
  static constexpr double kStepCost = 0.01;
  static constexpr std::uint8_t kTargetColor[3] = {0, 255, 0};

  enum Action : int { noop = 0, up = 1, down = 2, left = 3, right = 4 };

  explicit PatchChase(int max_frames = 200) {
    spec_ = {"PatchChase", kSize, kSize, 5, max_frames, -kStepCost * max_frames};
    spec_.validate();
  }

  const EnvSpec& spec() const override { return spec_; }

  Frame reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    agent_ = {kStartPos, kStartPos};
    frames_ = 0;
    done_ = false;
    spawn_target();
    return render();
  }

  StepResult step(int action) override {
    if (done_) throw EpisodeOver("step after episode end; call reset first");
    if (action < 0 || action >= spec_.actions) throw BadAction("action " + std::to_string(action) + " out of range");
    switch (action) {
      case up: agent_.first -= kMove; break;
      case down: agent_.first += kMove; break;
      case left: agent_.second -= kMove; break;
      case right: agent_.second += kMove; break;
      default: break;
    }
    agent_.first = std::clamp(agent_.first, 0, kMaxPos);
    agent_.second = std::clamp(agent_.second, 0, kMaxPos);

    double reward = -kStepCost;
    if (2 * overlap(agent_, target_) >= kObject * kObject) {
      reward += 1.0;
      spawn_target();
    }
    ++frames_;
    done_ = frames_ >= spec_.max_frames;
    return {render(), reward, done_};
  }

  // Inspection for tests and the greedy reference policy.
  std::pair<int, int> agent() const { return agent_; }
  std::pair<int, int> target() const { return target_; }
  int frames() const { return frames_; }

  static int overlap(std::pair<int, int> a, std::pair<int, int> b) {
    const int oy = std::max(0, kObject - std::abs(a.first - b.first));
    const int ox = std::max(0, kObject - std::abs(a.second - b.second));
    return oy * ox;
  }

  /// Move along the axis with the larger remaining offset to the target.
  static int greedy_action(std::pair<int, int> agent, std::pair<int, int> target) {
    const int dy = target.first - agent.first, dx = target.second - agent.second;
    if (dy == 0 && dx == 0) return noop;
    if (std::abs(dy) >= std::abs(dx)) return dy < 0 ? up : down;
    return dx < 0 ? left : right;
  }

 private:
  void spawn_target() {
    constexpr int lattice = kMaxPos / kMove + 1;
    do {
      target_ = {static_cast<int>(rng_.below(lattice)) * kMove, static_cast<int>(rng_.below(lattice)) * kMove};
    } while (overlap(agent_, target_) > 0);
  }

  Frame render() const {
    Frame f(kSize, kSize);
    f.fill_rect(target_.first, target_.second, kObject, kObject, kTargetColor[0], kTargetColor[1], kTargetColor[2]);
    f.fill_rect(agent_.first, agent_.second, kObject, kObject, 255, 255, 255);
    return f;
  }

  EnvSpec spec_;
  Rng rng_;
  std::pair<int, int> agent_{kStartPos, kStartPos};
  std::pair<int, int> target_{0, 0};
  int frames_ = 0;
  bool done_ = true;
};

}  // namespace seesaw::envs
