#pragma once

#include <array>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cgem {

using State = std::vector<double>;
using Action = std::vector<double>;

// Ordered 2D positions of the environment's body parts.
using BodyPose = std::vector<std::array<double, 2>>;

std::vector<double> flatten(const BodyPose& pose);
BodyPose unflatten_pose(const std::vector<double>& v);

// Axis-aligned wall segment inflated by thickness/2 into a rectangle.
struct Wall {
  std::array<double, 2> a{0, 0};
  std::array<double, 2> b{0, 0};
  double thickness = 2.0;

  std::array<double, 2> lo() const;
  std::array<double, 2> hi() const;
  // Open-interior containment.
  bool contains(double x, double y) const;
};

struct MazeSpec {
  double half_extent = 100.0;
  std::array<double, 2> start{65.0, -65.0};
  std::vector<Wall> walls;

  // Four rooms with two width-5 corridors on the path from the start room
  // (bottom-right) to the top-left room, plus an opening into the top-right
  // room so no room is sealed off.
  static MazeSpec default_spec();
  nlohmann::json to_json() const;
  static MazeSpec from_json(const nlohmann::json& j);
};

struct ChainSpec {
  int links = 4;
  std::vector<double> link_lengths;  // defaults to links x 5.0
  double joint_limit = 2.356194490192345;  // |angle_i| <= limit
  double action_scale = 0.1;               // max angle delta per step
  std::array<double, 2> anchor{0.0, 0.0};

  static ChainSpec default_spec();
  nlohmann::json to_json() const;
  static ChainSpec from_json(const nlohmann::json& j);
};

// Resettable MDP: step is a pure function of (state, action), so any stored
// state can be branched arbitrarily by concurrent callers.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const std::string& id() const = 0;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual int body_count() const = 0;

  virtual std::vector<double> action_lo() const = 0;
  virtual std::vector<double> action_hi() const = 0;
  // Bounding box of reachable states, per state dimension.
  virtual std::vector<double> state_lo() const = 0;
  virtual std::vector<double> state_hi() const = 0;
  // State indices to use for 2D spatial maps (visitation grids).
  virtual std::array<int, 2> grid_projection() const = 0;

  virtual State reset(std::mt19937_64& rng) const = 0;
  // Throws std::invalid_argument on an out-of-bounds action.
  virtual State step(const State& state, const Action& action) const = 0;
  virtual BodyPose body_pose(const State& state) const = 0;

  virtual nlohmann::json spec_json() const = 0;

  Action sample_uniform_action(std::mt19937_64& rng) const;
  std::vector<double> goal_vector(const State& state) const;
};

class MazeEnv final : public Environment {
 public:
  explicit MazeEnv(MazeSpec spec);

  const std::string& id() const override { return id_; }
  int state_dim() const override { return 2; }
  int action_dim() const override { return 2; }
  int body_count() const override { return 1; }
  std::vector<double> action_lo() const override { return {-1.0, -1.0}; }
  std::vector<double> action_hi() const override { return {1.0, 1.0}; }
  std::vector<double> state_lo() const override;
  std::vector<double> state_hi() const override;
  std::array<int, 2> grid_projection() const override { return {0, 1}; }

  State reset(std::mt19937_64& rng) const override;
  State step(const State& state, const Action& action) const override;
  BodyPose body_pose(const State& state) const override;
  nlohmann::json spec_json() const override;

  const MazeSpec& spec() const { return spec_; }
  bool in_free_space(double x, double y) const;
  // First-contact clipping of the displacement (x,y)->(x+dx,y+dy) against
  // walls and the world square. No sliding.
  std::array<double, 2> clip_move(double x, double y, double dx, double dy) const;

 private:
  MazeSpec spec_;
  std::string id_ = "maze";
};

class ChainEnv final : public Environment {
 public:
  explicit ChainEnv(ChainSpec spec);

  const std::string& id() const override { return id_; }
  int state_dim() const override { return dim_; }
  int action_dim() const override { return spec_.links; }
  int body_count() const override { return spec_.links + 1; }
  std::vector<double> action_lo() const override;
  std::vector<double> action_hi() const override;
  std::vector<double> state_lo() const override;
  std::vector<double> state_hi() const override;
  std::array<int, 2> grid_projection() const override;

  State reset(std::mt19937_64& rng) const override;
  State step(const State& state, const Action& action) const override;
  BodyPose body_pose(const State& state) const override;
  nlohmann::json spec_json() const override;

  const ChainSpec& spec() const { return spec_; }
  // State layout: [angles(k), body xy pairs(k+1)].
  State state_from_angles(const std::vector<double>& angles) const;

 private:
  ChainSpec spec_;
  int dim_;
  std::string id_ = "chain";
};

std::unique_ptr<Environment> make_environment(const std::string& name);
std::unique_ptr<Environment> make_environment(const nlohmann::json& spec);

// Grid BFS over free space; true iff `target` is reachable from the spec's
// start point. Used to validate wall layouts.
bool maze_reachable(const MazeSpec& spec, std::array<double, 2> target,
                    double cell = 2.5);

}  // namespace cgem
