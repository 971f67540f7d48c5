#pragma once

// Sampled LTI control under logical-execution-time semantics with deadline
// misses: discretization, per-period step maps, pattern transition products,
// stability verdicts and the disturbance-rejection cost metric.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "whft/matrix.hpp"
#include "whft/model.hpp"

namespace whft::control {

class ControlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kStabilityMargin = 1e-9;
inline constexpr std::uint32_t kDefaultHorizon = 200;
inline constexpr std::size_t kMaxEnumerationWindow = 24;

struct LtiPlant {
  std::string id;
  Matrix a;        // n x n
  Matrix b;        // n x m
  Matrix c_out;    // p x n
  double sampling_period = 0.0;  // h, seconds
  double let_deadline = 0.0;     // D, seconds, 0 <= D <= h
  Matrix gain;     // m x (n + m), acts on [x; u[k-1]]
  double cost_threshold = 0.1;   // J_th in (0, 1]
  std::uint32_t horizon_cap = kDefaultHorizon;

  std::size_t states() const { return a.rows(); }
  std::size_t inputs() const { return b.cols(); }
  bool operator==(const LtiPlant&) const = default;
};

// Throws ControlError naming the offending field.
void validate(const LtiPlant& plant);

struct DiscretePlant {
  Matrix ad;
  Matrix bd0;
  Matrix bd1;
  Matrix gain;
  double cost_threshold = 0.1;
  std::uint32_t horizon_cap = kDefaultHorizon;
  std::uint32_t psi_max = 1;

  std::size_t states() const { return ad.rows(); }
  std::size_t inputs() const { return bd0.cols(); }
  // Dimension of the augmented state [x; u history (psi_max slots)].
  std::size_t augmented_dim() const { return states() + inputs() * psi_max; }
};

DiscretePlant discretize(const LtiPlant& plant, std::uint32_t psi_max = 1);

// psi_max from a worst-case response time, ceil(r / t), at least 1.
std::uint32_t staleness_bound(Tick wcrt, Tick period);

// One sampling period acting on xi = [x; s_1; ...; s_psi_max], s_1 being the
// freshest computed input. A hit computes u = -K [x; s_1], applies the input
// held at depth psi before the LET instant and u after it, and pushes u; a
// miss applies the held input for the whole period and re-pushes it.
Matrix step_matrix(const DiscretePlant& dp, bool hit, std::uint32_t psi);

// Staleness of every job in a cyclic pattern: 1 + preceding consecutive misses, capped.
std::vector<std::uint32_t> staleness(const MissPattern& pattern, std::uint32_t psi_max);

// Product of `steps` step matrices starting at job `start` of the cyclic pattern.
Matrix transition(const DiscretePlant& dp, const MissPattern& pattern, std::size_t start,
                  std::size_t steps);
// Product over one full pattern length.
Matrix pattern_transition(const DiscretePlant& dp, const MissPattern& pattern,
                          std::size_t start);

bool is_stable(const DiscretePlant& dp, const MissPattern& pattern,
               double margin = kStabilityMargin);

// Sampling periods needed to reject a disturbance; nullopt means unstable.
using ControlCost = std::optional<std::uint32_t>;

std::string to_string(const ControlCost& c);
// Ordering with unstable as the worst value.
bool cost_less(const ControlCost& a, const ControlCost& b);

ControlCost control_cost(const DiscretePlant& dp, const MissPattern& pattern);
ControlCost all_hit_cost(const DiscretePlant& dp);

// Visits every length-`window` pattern with at most `max_misses` misses.
// Returns the number visited; ControlError above the enumeration guard.
std::size_t for_each_pattern(std::size_t window, std::size_t max_misses,
                             const std::function<bool(const MissPattern&)>& visit);

// Worst control cost over every length-N cyclic pattern satisfying (k, N).
ControlCost approx_worst_cost(const DiscretePlant& dp, WeaklyHardConstraint constraint);

// Largest k such that every length-N pattern with <= k misses is stable;
// nullopt when even the all-hit pattern is unstable.
std::optional<std::uint32_t> synthesize_wh(const DiscretePlant& dp, std::size_t window);

}  // namespace whft::control
