#include "cgem/env.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cgem/rng.hpp"

namespace cgem {

using nlohmann::json;

std::vector<double> flatten(const BodyPose& pose) {
  std::vector<double> v;
  v.reserve(pose.size() * 2);
  for (const auto& p : pose) {
    v.push_back(p[0]);
    v.push_back(p[1]);
  }
  return v;
}

BodyPose unflatten_pose(const std::vector<double>& v) {
  if (v.size() % 2 != 0)
    throw std::invalid_argument("pose vector has odd length");
  BodyPose pose(v.size() / 2);
  for (std::size_t i = 0; i < pose.size(); ++i) pose[i] = {v[2 * i], v[2 * i + 1]};
  return pose;
}

std::array<double, 2> Wall::lo() const {
  double h = thickness / 2.0;
  return {std::min(a[0], b[0]) - h, std::min(a[1], b[1]) - h};
}

std::array<double, 2> Wall::hi() const {
  double h = thickness / 2.0;
  return {std::max(a[0], b[0]) + h, std::max(a[1], b[1]) + h};
}

bool Wall::contains(double x, double y) const {
  auto l = lo();
  auto h = hi();
  return x > l[0] && x < h[0] && y > l[1] && y < h[1];
}

MazeSpec MazeSpec::default_spec() {
  MazeSpec spec;
  spec.half_extent = 100.0;
  spec.start = {65.0, -65.0};
  // Vertical wall on x=0, gap (corridor 1) at y in [-80,-75].
  spec.walls.push_back({{0.0, -100.0}, {0.0, -80.0}, 2.0});
  spec.walls.push_back({{0.0, -75.0}, {0.0, 100.0}, 2.0});
  // Horizontal wall on y=0, gap (corridor 2) at x in [-80,-75] and an
  // opening into the top-right room at x in [75,80].
  spec.walls.push_back({{-100.0, 0.0}, {-80.0, 0.0}, 2.0});
  spec.walls.push_back({{-75.0, 0.0}, {75.0, 0.0}, 2.0});
  spec.walls.push_back({{80.0, 0.0}, {100.0, 0.0}, 2.0});
  return spec;
}

json MazeSpec::to_json() const {
  json walls_j = json::array();
  for (const auto& w : walls)
    walls_j.push_back({{"from", {w.a[0], w.a[1]}},
                       {"to", {w.b[0], w.b[1]}},
                       {"thickness", w.thickness}});
  return {{"type", "maze"},
          {"half_extent", half_extent},
          {"start", {start[0], start[1]}},
          {"walls", walls_j}};
}

MazeSpec MazeSpec::from_json(const json& j) {
  MazeSpec spec = MazeSpec::default_spec();
  if (j.contains("half_extent")) spec.half_extent = j.at("half_extent").get<double>();
  if (j.contains("start")) {
    spec.start[0] = j.at("start").at(0).get<double>();
    spec.start[1] = j.at("start").at(1).get<double>();
  }
  if (j.contains("walls")) {
    spec.walls.clear();
    for (const auto& wj : j.at("walls")) {
      Wall w;
      w.a = {wj.at("from").at(0).get<double>(), wj.at("from").at(1).get<double>()};
      w.b = {wj.at("to").at(0).get<double>(), wj.at("to").at(1).get<double>()};
      if (wj.contains("thickness")) w.thickness = wj.at("thickness").get<double>();
      if (w.a[0] != w.b[0] && w.a[1] != w.b[1])
        throw std::invalid_argument("maze walls must be axis-aligned");
      spec.walls.push_back(w);
    }
  }
  return spec;
}

ChainSpec ChainSpec::default_spec() {
  ChainSpec spec;
  spec.link_lengths.assign(spec.links, 5.0);
  return spec;
}

json ChainSpec::to_json() const {
  return {{"type", "chain"},
          {"links", links},
          {"link_lengths", link_lengths},
          {"joint_limit", joint_limit},
          {"action_scale", action_scale},
          {"anchor", {anchor[0], anchor[1]}}};
}

ChainSpec ChainSpec::from_json(const json& j) {
  ChainSpec spec = ChainSpec::default_spec();
  if (j.contains("links")) spec.links = j.at("links").get<int>();
  if (j.contains("link_lengths"))
    spec.link_lengths = j.at("link_lengths").get<std::vector<double>>();
  else
    spec.link_lengths.assign(spec.links, 5.0);
  if (j.contains("joint_limit")) spec.joint_limit = j.at("joint_limit").get<double>();
  if (j.contains("action_scale")) spec.action_scale = j.at("action_scale").get<double>();
  if (j.contains("anchor")) {
    spec.anchor[0] = j.at("anchor").at(0).get<double>();
    spec.anchor[1] = j.at("anchor").at(1).get<double>();
  }
  if (spec.links < 2) throw std::invalid_argument("chain requires links >= 2");
  if (static_cast<int>(spec.link_lengths.size()) != spec.links)
    throw std::invalid_argument("link_lengths size must equal links");
  for (double l : spec.link_lengths)
    if (l <= 0.0) throw std::invalid_argument("link lengths must be positive");
  return spec;
}

Action Environment::sample_uniform_action(std::mt19937_64& rng) const {
  auto lo = action_lo();
  auto hi = action_hi();
  Action a(lo.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng::uniform(rng, lo[i], hi[i]);
  return a;
}

std::vector<double> Environment::goal_vector(const State& state) const {
  return flatten(body_pose(state));
}

namespace {

void check_action(const Environment& env, const Action& a) {
  auto lo = env.action_lo();
  auto hi = env.action_hi();
  if (a.size() != lo.size())
    throw std::invalid_argument("action dimension mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || a[i] < lo[i] || a[i] > hi[i])
      throw std::invalid_argument("action component out of bounds");
  }
}

// Entry parameter of ray p + t*d into the axis-aligned box [lo,hi], or no
// value encoded as t > 1 when the ray misses within t in [0,1].
double ray_box_entry(double px, double py, double dx, double dy,
                     const std::array<double, 2>& lo,
                     const std::array<double, 2>& hi) {
  double t0 = 0.0, t1 = 1.0;
  const double p[2] = {px, py};
  const double d[2] = {dx, dy};
  for (int ax = 0; ax < 2; ++ax) {
    if (d[ax] == 0.0) {
      if (p[ax] <= lo[ax] || p[ax] >= hi[ax]) return 2.0;
      continue;
    }
    double ta = (lo[ax] - p[ax]) / d[ax];
    double tb = (hi[ax] - p[ax]) / d[ax];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 >= t1) return 2.0;
  }
  return t0;
}

}  // namespace

MazeEnv::MazeEnv(MazeSpec spec) : spec_(std::move(spec)) {
  if (!in_free_space(spec_.start[0], spec_.start[1]))
    throw std::invalid_argument("maze start position is not in free space");
}

std::vector<double> MazeEnv::state_lo() const {
  return {-spec_.half_extent, -spec_.half_extent};
}

std::vector<double> MazeEnv::state_hi() const {
  return {spec_.half_extent, spec_.half_extent};
}

bool MazeEnv::in_free_space(double x, double y) const {
  if (std::abs(x) > spec_.half_extent || std::abs(y) > spec_.half_extent)
    return false;
  for (const auto& w : spec_.walls)
    if (w.contains(x, y)) return false;
  return true;
}

State MazeEnv::reset(std::mt19937_64&) const {
  return {spec_.start[0], spec_.start[1]};
}

std::array<double, 2> MazeEnv::clip_move(double x, double y, double dx,
                                         double dy) const {
  double t = 1.0;
  double e = spec_.half_extent;
  // World square: latest parameter keeping the endpoint inside.
  if (dx > 0.0) t = std::min(t, (e - x) / dx);
  if (dx < 0.0) t = std::min(t, (-e - x) / dx);
  if (dy > 0.0) t = std::min(t, (e - y) / dy);
  if (dy < 0.0) t = std::min(t, (-e - y) / dy);
  bool hit_wall = false;
  for (const auto& w : spec_.walls) {
    double tw = ray_box_entry(x, y, dx, dy, w.lo(), w.hi());
    if (tw < t) {
      t = tw;
      hit_wall = true;
    }
  }
  t = std::max(0.0, t);
  if (hit_wall) {
    // Back off so the contact point stays strictly outside the wall.
    double len = std::hypot(dx, dy);
    if (len > 0.0) t = std::max(0.0, t - 1e-9 / len);
  }
  return {x + t * dx, y + t * dy};
}

State MazeEnv::step(const State& state, const Action& action) const {
  check_action(*this, action);
  if (state.size() != 2) throw std::invalid_argument("maze state must be 2D");
  auto p = clip_move(state[0], state[1], action[0], action[1]);
  return {p[0], p[1]};
}

BodyPose MazeEnv::body_pose(const State& state) const {
  return {{{state[0], state[1]}}};
}

json MazeEnv::spec_json() const { return spec_.to_json(); }

ChainEnv::ChainEnv(ChainSpec spec) : spec_(std::move(spec)) {
  if (spec_.links < 2) throw std::invalid_argument("chain requires links >= 2");
  if (static_cast<int>(spec_.link_lengths.size()) != spec_.links)
    throw std::invalid_argument("link_lengths size must equal links");
  dim_ = spec_.links + 2 * (spec_.links + 1);
}

std::vector<double> ChainEnv::action_lo() const {
  return std::vector<double>(spec_.links, -1.0);
}

std::vector<double> ChainEnv::action_hi() const {
  return std::vector<double>(spec_.links, 1.0);
}

std::vector<double> ChainEnv::state_lo() const {
  std::vector<double> lo(dim_);
  double reach = 0.0;
  for (double l : spec_.link_lengths) reach += l;
  for (int i = 0; i < spec_.links; ++i) lo[i] = -spec_.joint_limit;
  for (int i = 0; i <= spec_.links; ++i) {
    lo[spec_.links + 2 * i] = spec_.anchor[0] - reach;
    lo[spec_.links + 2 * i + 1] = spec_.anchor[1] - reach;
  }
  return lo;
}

std::vector<double> ChainEnv::state_hi() const {
  std::vector<double> hi(dim_);
  double reach = 0.0;
  for (double l : spec_.link_lengths) reach += l;
  for (int i = 0; i < spec_.links; ++i) hi[i] = spec_.joint_limit;
  for (int i = 0; i <= spec_.links; ++i) {
    hi[spec_.links + 2 * i] = spec_.anchor[0] + reach;
    hi[spec_.links + 2 * i + 1] = spec_.anchor[1] + reach;
  }
  return hi;
}

std::array<int, 2> ChainEnv::grid_projection() const {
  // Tip of the chain.
  return {spec_.links + 2 * spec_.links, spec_.links + 2 * spec_.links + 1};
}

State ChainEnv::state_from_angles(const std::vector<double>& angles) const {
  State s(dim_);
  for (int i = 0; i < spec_.links; ++i) s[i] = angles[i];
  double x = spec_.anchor[0];
  double y = spec_.anchor[1];
  double phi = 0.0;
  s[spec_.links] = x;
  s[spec_.links + 1] = y;
  for (int i = 0; i < spec_.links; ++i) {
    phi += angles[i];
    x += spec_.link_lengths[i] * std::cos(phi);
    y += spec_.link_lengths[i] * std::sin(phi);
    s[spec_.links + 2 * (i + 1)] = x;
    s[spec_.links + 2 * (i + 1) + 1] = y;
  }
  return s;
}

State ChainEnv::reset(std::mt19937_64&) const {
  return state_from_angles(std::vector<double>(spec_.links, 0.0));
}

State ChainEnv::step(const State& state, const Action& action) const {
  check_action(*this, action);
  if (static_cast<int>(state.size()) != dim_)
    throw std::invalid_argument("chain state dimension mismatch");
  std::vector<double> angles(spec_.links);
  for (int i = 0; i < spec_.links; ++i) {
    angles[i] = std::clamp(state[i] + spec_.action_scale * action[i],
                           -spec_.joint_limit, spec_.joint_limit);
  }
  return state_from_angles(angles);
}

BodyPose ChainEnv::body_pose(const State& state) const {
  BodyPose pose(spec_.links + 1);
  for (int i = 0; i <= spec_.links; ++i)
    pose[i] = {state[spec_.links + 2 * i], state[spec_.links + 2 * i + 1]};
  return pose;
}

json ChainEnv::spec_json() const { return spec_.to_json(); }

std::unique_ptr<Environment> make_environment(const std::string& name) {
  if (name == "maze") return std::make_unique<MazeEnv>(MazeSpec::default_spec());
  if (name == "chain") return std::make_unique<ChainEnv>(ChainSpec::default_spec());
  throw std::invalid_argument("unknown environment: " + name);
}

std::unique_ptr<Environment> make_environment(const json& spec) {
  std::string type = spec.at("type").get<std::string>();
  if (type == "maze") return std::make_unique<MazeEnv>(MazeSpec::from_json(spec));
  if (type == "chain") return std::make_unique<ChainEnv>(ChainSpec::from_json(spec));
  throw std::invalid_argument("unknown environment type: " + type);
}

bool maze_reachable(const MazeSpec& spec, std::array<double, 2> target,
                    double cell) {
  MazeEnv env(spec);
  double e = spec.half_extent;
  int n = static_cast<int>(std::ceil(2 * e / cell));
  auto center = [&](int ix, int iy) -> std::array<double, 2> {
    return {-e + (ix + 0.5) * cell, -e + (iy + 0.5) * cell};
  };
  auto index_of = [&](double x, double y) -> std::pair<int, int> {
    int ix = std::clamp(static_cast<int>((x + e) / cell), 0, n - 1);
    int iy = std::clamp(static_cast<int>((y + e) / cell), 0, n - 1);
    return {ix, iy};
  };
  auto [sx, sy] = index_of(spec.start[0], spec.start[1]);
  auto [tx, ty] = index_of(target[0], target[1]);
  std::vector<char> seen(static_cast<std::size_t>(n) * n, 0);
  std::queue<std::pair<int, int>> queue;
  queue.push({sx, sy});
  seen[static_cast<std::size_t>(sy) * n + sx] = 1;
  const int dx[4] = {1, -1, 0, 0};
  const int dy[4] = {0, 0, 1, -1};
  while (!queue.empty()) {
    auto [ix, iy] = queue.front();
    queue.pop();
    if (ix == tx && iy == ty) return true;
    auto c = center(ix, iy);
    for (int k = 0; k < 4; ++k) {
      int jx = ix + dx[k];
      int jy = iy + dy[k];
      if (jx < 0 || jx >= n || jy < 0 || jy >= n) continue;
      std::size_t idx = static_cast<std::size_t>(jy) * n + jx;
      if (seen[idx]) continue;
      auto cn = center(jx, jy);
      if (!env.in_free_space(cn[0], cn[1])) continue;
      // Edge is traversable iff the straight move between centers is not
      // clipped by a wall.
      auto end = env.clip_move(c[0], c[1], cn[0] - c[0], cn[1] - c[1]);
      if (std::hypot(end[0] - cn[0], end[1] - cn[1]) > 1e-6) continue;
      seen[idx] = 1;
      queue.push({jx, jy});
    }
  }
  return false;
}

}  // namespace cgem
