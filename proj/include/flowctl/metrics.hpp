#pragma once

#include <map>
#include <set>

#include "flowctl/running_cost.hpp"
#include "flowctl/sampler.hpp"

namespace flowctl {

// ---------------------------------------------------------------------------
// Metric reports: one value per (scene, seed, metric).
// ---------------------------------------------------------------------------

struct MetricKey {
  std::string scene;
  std::uint64_t seed = 0;
  std::string metric;

  auto operator<=>(const MetricKey&) const = default;
};

class MetricReport {
 public:
  std::string config_hash;

  void add(const std::string& scene, std::uint64_t seed, const std::string& metric, double value) {
    MetricKey key{scene, seed, metric};
    if (values_.count(key))
      throw KeyMismatch("duplicate metric record: " + scene + "/" + std::to_string(seed) + "/" + metric);
    values_.emplace(std::move(key), value);
  }

  const std::map<MetricKey, double>& values() const { return values_; }
  bool empty() const { return values_.empty(); }

  std::set<std::string> scenes() const {
    std::set<std::string> s;
    for (const auto& [k, v] : values_) s.insert(k.scene);
    return s;
  }
  std::set<std::uint64_t> seeds() const {
    std::set<std::uint64_t> s;
    for (const auto& [k, v] : values_) s.insert(k.seed);
    return s;
  }
  std::set<std::string> metrics() const {
    std::set<std::string> s;
    for (const auto& [k, v] : values_) s.insert(k.metric);
    return s;
  }

 private:
  std::map<MetricKey, double> values_;
};

struct CompositeResult {
  double score = 0.0;
  int skipped = 0;  // keys dropped for a near-zero base value
};

/// Macro-averaged relative improvement over the base report: mean over seeds
/// of mean over scenes of mean over metrics of (cur - base)/base. Keys whose
/// base value is below 1e-12 in magnitude are skipped and counted.
inline CompositeResult composite_score(const MetricReport& current, const MetricReport& base) {
  if (current.values().size() != base.values().size())
    throw KeyMismatch("reports have different record counts");
  for (const auto& [k, v] : current.values())
    if (!base.values().count(k))
      throw KeyMismatch("candidate key missing from base: " + k.scene + "/" +
                        std::to_string(k.seed) + "/" + k.metric);

  CompositeResult res;
  double seed_acc = 0.0;
  int seed_n = 0;
  for (const auto seed : base.seeds()) {
    double scene_acc = 0.0;
    int scene_n = 0;
    for (const auto& scene : base.scenes()) {
      double metric_acc = 0.0;
      int metric_n = 0;
      for (const auto& metric : base.metrics()) {
        const MetricKey key{scene, seed, metric};
        const auto bit = base.values().find(key);
        if (bit == base.values().end()) continue;  // ragged grid: key absent everywhere
        const auto cit = current.values().find(key);
        if (cit == current.values().end())
          throw KeyMismatch("candidate missing key: " + scene + "/" + std::to_string(seed) + "/" + metric);
        if (std::abs(bit->second) <= 1e-12) {
          ++res.skipped;
          continue;
        }
        metric_acc += (cit->second - bit->second) / bit->second;
        ++metric_n;
      }
      if (metric_n > 0) {
        scene_acc += metric_acc / metric_n;
        ++scene_n;
      }
    }
    if (scene_n > 0) {
      seed_acc += scene_acc / scene_n;
      ++seed_n;
    }
  }
  if (seed_n == 0) throw DivisionByZero("every key had a zero base value");
  res.score = seed_acc / seed_n;
  return res;
}

// ---------------------------------------------------------------------------
// Elo ratings over pairwise outcomes.
// ---------------------------------------------------------------------------

enum class MatchOutcome { AWins, BWins, Draw };

struct MatchRecord {
  std::string a;
  std::string b;
  MatchOutcome outcome;
};

class EloTable {
 public:
  explicit EloTable(double k_factor = 32.0, double initial = 1500.0)
      : k_(k_factor), initial_(initial) {}

  void register_candidate(const std::string& name) { ratings_.emplace(name, initial_); }

  bool has(const std::string& name) const { return ratings_.count(name) > 0; }
  double rating(const std::string& name) const {
    const auto it = ratings_.find(name);
    if (it == ratings_.end()) throw UnknownCandidate("no such candidate: " + name);
    return it->second;
  }
  double k_factor() const { return k_; }
  const std::map<std::string, double>& ratings() const { return ratings_; }
  const std::vector<MatchRecord>& match_log() const { return log_; }

  static double expected_score(double ra, double rb) {
    return 1.0 / (1.0 + std::pow(10.0, (rb - ra) / 400.0));
  }

  void update(const std::string& a, const std::string& b, MatchOutcome outcome) {
    auto ia = ratings_.find(a);
    auto ib = ratings_.find(b);
    if (ia == ratings_.end()) throw UnknownCandidate("no such candidate: " + a);
    if (ib == ratings_.end()) throw UnknownCandidate("no such candidate: " + b);
    const double ea = expected_score(ia->second, ib->second);
    const double sa = outcome == MatchOutcome::AWins ? 1.0 : outcome == MatchOutcome::Draw ? 0.5 : 0.0;
    const double delta = k_ * (sa - ea);
    ia->second += delta;
    ib->second -= delta;  // K (S_B - E_B) = -K (S_A - E_A); the total is conserved
    log_.push_back({a, b, outcome});
  }

  /// Head-to-head win fraction; draws count half.
  double win_rate(const std::string& candidate) const {
    if (!has(candidate)) throw UnknownCandidate("no such candidate: " + candidate);
    double wins = 0.0;
    int matches = 0;
    for (const auto& m : log_) {
      if (m.a != candidate && m.b != candidate) continue;
      ++matches;
      if (m.outcome == MatchOutcome::Draw)
        wins += 0.5;
      else if ((m.outcome == MatchOutcome::AWins) == (m.a == candidate))
        wins += 1.0;
    }
    if (matches == 0) throw NoMatches("candidate has no matches: " + candidate);
    return wins / matches;
  }

 private:
  double k_;
  double initial_;
  std::map<std::string, double> ratings_;
  std::vector<MatchRecord> log_;
};

inline void elo_update(EloTable& table, const std::string& a, const std::string& b,
                       MatchOutcome outcome) {
  table.update(a, b, outcome);
}

inline double win_rate(const EloTable& table, const std::string& candidate) {
  return table.win_rate(candidate);
}

// ---------------------------------------------------------------------------
// Trajectory objective value and distributional distance.
// ---------------------------------------------------------------------------

/// Left-Riemann sum of the running cost over the grid, plus 1/2||u||^2 terms
/// when per-step control values are supplied.
inline double cost_integral(const Trajectory& traj, const RunningCost& cost,
                            const std::vector<Vec>* controls = nullptr) {
  const int n = traj.step_count();
  if (n < 1) throw GridMismatch("cost_integral needs a populated trajectory");
  if (controls && static_cast<int>(controls->size()) != n)
    throw GridMismatch("control values must cover every step");
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = traj.times[static_cast<std::size_t>(i)];
    const double dt = traj.times[static_cast<std::size_t>(i) + 1] - t;
    double term = cost.value(traj.states[static_cast<std::size_t>(i)], t);
    if (controls) term += 0.5 * sq_norm((*controls)[static_cast<std::size_t>(i)]);
    acc += dt * term;
  }
  return acc;
}

/// Energy distance between two sample populations (V-statistic form, so
/// identical populations give exactly zero).
inline double energy_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  if (a.empty() || b.empty()) throw DimensionMismatch("energy_distance needs nonempty samples");
  check_same_dim(a.front(), b.front(), "energy_distance");
  const auto mean_pair_dist = [](const std::vector<Vec>& u, const std::vector<Vec>& v) {
    double acc = 0.0;
    std::vector<double> partial((u.size() + 63) / 64, 0.0);
    for_chunks(u.size(), 64, [&](std::size_t c, std::size_t lo, std::size_t hi) {
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i)
        for (std::size_t j = 0; j < v.size(); ++j) {
          double d2 = 0.0;
          for (std::size_t k = 0; k < u[i].size(); ++k) {
            const double d = u[i][k] - v[j][k];
            d2 += d * d;
          }
          s += std::sqrt(d2);
        }
      partial[c] = s;
    });
    for (double s : partial) acc += s;
    return acc / (static_cast<double>(u.size()) * static_cast<double>(v.size()));
  };
  const double cross = mean_pair_dist(a, b);
  const double within_a = mean_pair_dist(a, a);
  const double within_b = mean_pair_dist(b, b);
  return std::max(0.0, 2.0 * cross - within_a - within_b);
}

}  // namespace flowctl
