#include "cgem/state_set.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace cgem {

using nlohmann::json;

std::vector<double> StateSet::row(Eigen::Index i) const {
  std::vector<double> v(states.cols());
  for (Eigen::Index j = 0; j < states.cols(); ++j) v[j] = states(i, j);
  return v;
}

void StateSet::validate() const {
  if (states.rows() == 0) throw std::invalid_argument("state set is empty");
  if (!log_densities.empty() &&
      log_densities.size() != static_cast<std::size_t>(states.rows()))
    throw std::invalid_argument("log_densities size mismatch");
  for (double ld : log_densities)
    if (!std::isfinite(ld)) throw std::invalid_argument("non-finite log-density");
  if (!weights.empty() && weights.size() != static_cast<std::size_t>(states.rows()))
    throw std::invalid_argument("weights size mismatch");
  for (double w : weights)
    if (!(w >= 0.0)) throw std::invalid_argument("negative weight");
}

void StateSet::save_jsonl(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  json header = {{"format_version", 1},
                 {"kind", "state_set"},
                 {"env", env_id},
                 {"method", method},
                 {"n", states.rows()},
                 {"d", states.cols()},
                 {"t", horizon},
                 {"seed", seed},
                 {"env_steps", env_steps},
                 {"config", config}};
  out << header.dump() << "\n";
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    json rec;
    rec["v"] = row(i);
    if (!log_densities.empty()) rec["ld"] = log_densities[i];
    if (!weights.empty()) rec["w"] = weights[i];
    out << rec.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

StateSet StateSet::load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty state set file: " + path);
  json header = json::parse(line);
  if (header.value("kind", "") != "state_set")
    throw std::runtime_error("not a state set file: " + path);

  StateSet set;
  set.env_id = header.value("env", "");
  set.method = header.value("method", "");
  set.horizon = header.value("t", 0);
  set.seed = header.value("seed", static_cast<uint64_t>(0));
  set.env_steps = header.value("env_steps", static_cast<uint64_t>(0));
  set.config = header.value("config", json::object());
  auto n = header.at("n").get<Eigen::Index>();
  auto d = header.at("d").get<Eigen::Index>();
  set.states.resize(n, d);

  Eigen::Index i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    if (i >= n) throw std::runtime_error("more states than declared in header");
    const auto& v = rec.at("v");
    if (static_cast<Eigen::Index>(v.size()) != d)
      throw std::runtime_error("state dimension mismatch in record");
    for (Eigen::Index j = 0; j < d; ++j) set.states(i, j) = v.at(j).get<double>();
    if (rec.contains("ld")) set.log_densities.push_back(rec.at("ld").get<double>());
    if (rec.contains("w")) set.weights.push_back(rec.at("w").get<double>());
    ++i;
  }
  if (i != n) throw std::runtime_error("fewer states than declared in header");
  set.validate();
  return set;
}

}  // namespace cgem
