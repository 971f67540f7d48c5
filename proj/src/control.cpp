#include "whft/control.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace whft::control {

void validate(const LtiPlant& p) {
  const std::string who = "plant '" + p.id + "': ";
  const std::size_t n = p.a.rows();
  if (n == 0 || p.a.cols() != n) throw ControlError(who + "A must be square and non-empty");
  if (p.b.rows() != n || p.b.cols() == 0) throw ControlError(who + "B must have n rows");
  const std::size_t m = p.b.cols();
  if (!p.c_out.empty() && p.c_out.cols() != n) throw ControlError(who + "C must have n columns");
  if (p.gain.rows() != m || p.gain.cols() != n + m) {
    throw ControlError(who + "K must be m x (n + m) = " + std::to_string(m) + " x " +
                       std::to_string(n + m));
  }
  for (const Matrix* mat : {&p.a, &p.b, &p.c_out, &p.gain}) {
    if (!mat->all_finite()) throw ControlError(who + "non-finite matrix entry");
  }
  if (!(p.sampling_period > 0.0)) throw ControlError(who + "h must be positive");
  if (!(p.let_deadline >= 0.0 && p.let_deadline <= p.sampling_period)) {
    throw ControlError(who + "D must satisfy 0 <= D <= h");
  }
  if (!(p.cost_threshold > 0.0 && p.cost_threshold <= 1.0)) {
    throw ControlError(who + "j_th must lie in (0, 1]");
  }
  if (p.horizon_cap == 0) throw ControlError(who + "h_max must be positive");
}

namespace {

// e^{[[A, B], [0, 0]] t}: returns (e^{At}, integral_0^t e^{As} B ds).
std::pair<Matrix, Matrix> exp_with_input_integral(const Matrix& a, const Matrix& b, double t) {
  const std::size_t n = a.rows();
  const std::size_t m = b.cols();
  Matrix aug(n + m, n + m);
  aug.set_block(0, 0, a * t);
  aug.set_block(0, n, b * t);
  const Matrix e = expm(aug);
  return {e.block(0, 0, n, n), e.block(0, n, n, m)};
}

}  // namespace

DiscretePlant discretize(const LtiPlant& plant, std::uint32_t psi_max) {
  validate(plant);
  if (psi_max == 0) throw ControlError("psi_max must be at least 1");
  const double h = plant.sampling_period;
  const double early = h - plant.let_deadline;
  auto [ad, gamma_h] = exp_with_input_integral(plant.a, plant.b, h);
  auto gamma_early = exp_with_input_integral(plant.a, plant.b, early).second;

  DiscretePlant dp;
  dp.ad = std::move(ad);
  dp.bd0 = gamma_early;
  dp.bd1 = gamma_h - gamma_early;
  dp.gain = plant.gain;
  dp.cost_threshold = plant.cost_threshold;
  dp.horizon_cap = plant.horizon_cap;
  dp.psi_max = psi_max;
  if (!dp.ad.all_finite() || !dp.bd0.all_finite() || !dp.bd1.all_finite()) {
    throw ControlError("plant '" + plant.id + "': discretization is ill-conditioned");
  }
  return dp;
}

std::uint32_t staleness_bound(Tick wcrt, Tick period) {
  if (period == 0) return 1;
  const Tick q = (wcrt + period - 1) / period;
  return static_cast<std::uint32_t>(std::max<Tick>(1, q));
}

Matrix step_matrix(const DiscretePlant& dp, bool hit, std::uint32_t psi) {
  if (psi < 1 || psi > dp.psi_max) {
    throw ControlError("staleness " + std::to_string(psi) + " outside [1, " +
                       std::to_string(dp.psi_max) + "]");
  }
  const std::size_t n = dp.states();
  const std::size_t m = dp.inputs();
  const std::size_t dim = dp.augmented_dim();
  const std::size_t held = n + (psi - 1) * m;  // column of s_psi
  Matrix phi(dim, dim);

  if (hit) {
    const Matrix kx = dp.gain.block(0, 0, m, n);
    const Matrix ku = dp.gain.block(0, n, m, m);
    // x' = Ad x + B0 u + B1 s_psi with u = -Kx x - Ku s_1
    phi.set_block(0, 0, dp.ad - dp.bd0 * kx);
    phi.set_block(0, n, dp.bd0 * ku * -1.0);
    Matrix held_block = phi.block(0, held, n, m) + dp.bd1;
    phi.set_block(0, held, held_block);
    // s_1' = u
    phi.set_block(n, 0, kx * -1.0);
    phi.set_block(n, n, ku * -1.0);
  } else {
    // x' = Ad x + (B0 + B1) s_psi, s_1' = s_1
    phi.set_block(0, 0, dp.ad);
    phi.set_block(0, held, dp.bd0 + dp.bd1);
    phi.set_block(n, n, Matrix::identity(m));
  }
  // s_{j+1}' = s_j
  for (std::uint32_t j = 1; j < dp.psi_max; ++j) {
    phi.set_block(n + j * m, n + (j - 1) * m, Matrix::identity(m));
  }
  return phi;
}

std::vector<std::uint32_t> staleness(const MissPattern& pattern, std::uint32_t psi_max) {
  const std::size_t len = pattern.size();
  std::vector<std::uint32_t> psi(len, 1);
  if (len == 0) return psi;
  if (pattern.miss_count() == len) {
    std::fill(psi.begin(), psi.end(), psi_max);
    return psi;
  }
  for (std::size_t j = 0; j < len; ++j) {
    std::uint32_t run = 0;
    for (std::size_t back = 1; back <= len && run + 1 < psi_max; ++back) {
      if (!pattern.miss((j + len - back) % len)) break;
      ++run;
    }
    psi[j] = std::min(psi_max, run + 1);
  }
  return psi;
}

namespace {

// Step matrices for each job of the cyclic pattern (shared storage per (hit, psi)).
class StepTable {
 public:
  StepTable(const DiscretePlant& dp, const MissPattern& pattern)
      : psi_(staleness(pattern, dp.psi_max)) {
    index_.resize(pattern.size());
    std::map<std::pair<bool, std::uint32_t>, std::size_t> slots;
    for (std::size_t j = 0; j < pattern.size(); ++j) {
      const std::pair<bool, std::uint32_t> key{!pattern.miss(j), psi_[j]};
      auto it = slots.find(key);
      if (it == slots.end()) {
        it = slots.emplace(key, mats_.size()).first;
        mats_.push_back(step_matrix(dp, key.first, key.second));
      }
      index_[j] = it->second;
    }
  }

  const Matrix& at(std::size_t job) const { return mats_[index_[job % index_.size()]]; }
  std::size_t size() const { return index_.size(); }

 private:
  std::vector<std::uint32_t> psi_;
  std::vector<std::size_t> index_;
  std::vector<Matrix> mats_;
};

Matrix product(const StepTable& steps, std::size_t dim, std::size_t start, std::size_t count) {
  Matrix acc = Matrix::identity(dim);
  Matrix tmp(dim, dim);
  for (std::size_t r = 0; r < count; ++r) {
    multiply_into(steps.at(start + r), acc, tmp);
    std::swap(acc, tmp);
  }
  return acc;
}

// ||top-left n x n block of m||_2 > threshold, with cheap Frobenius bounds first.
bool state_gain_exceeds(const Matrix& m, std::size_t n, double threshold) {
  double fro2 = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) fro2 += m(r, c) * m(r, c);
  }
  if (!std::isfinite(fro2)) return true;
  const double fro = std::sqrt(fro2);
  if (fro <= threshold) return false;
  if (fro / std::sqrt(static_cast<double>(n)) > threshold) return true;
  return norm2(m.block(0, 0, n, n)) > threshold;
}

}  // namespace

Matrix transition(const DiscretePlant& dp, const MissPattern& pattern, std::size_t start,
                  std::size_t steps) {
  if (pattern.size() == 0) throw ControlError("empty miss pattern");
  return product(StepTable(dp, pattern), dp.augmented_dim(), start, steps);
}

Matrix pattern_transition(const DiscretePlant& dp, const MissPattern& pattern,
                          std::size_t start) {
  return transition(dp, pattern, start, pattern.size());
}

bool is_stable(const DiscretePlant& dp, const MissPattern& pattern, double margin) {
  if (pattern.size() == 0) throw ControlError("empty miss pattern");
  const StepTable steps(dp, pattern);
  const std::size_t dim = dp.augmented_dim();
  // Cyclic rotations of one product share their spectrum; long patterns only
  // check the first rotation.
  const std::size_t starts = pattern.size() <= 64 ? pattern.size() : 1;
  for (std::size_t k = 0; k < starts; ++k) {
    const Matrix phi = product(steps, dim, k, pattern.size());
    if (!phi.all_finite()) return false;
    if (!(spectral_radius(phi) < 1.0 - margin)) return false;
  }
  return true;
}

std::string to_string(const ControlCost& c) {
  return c ? std::to_string(*c) : std::string("unstable");
}

bool cost_less(const ControlCost& a, const ControlCost& b) {
  if (!a) return false;
  if (!b) return true;
  return *a < *b;
}

ControlCost control_cost(const DiscretePlant& dp, const MissPattern& pattern) {
  if (pattern.size() == 0) throw ControlError("empty miss pattern");
  if (!is_stable(dp, pattern)) return std::nullopt;

  const StepTable steps(dp, pattern);
  const std::size_t len = pattern.size();
  const std::size_t dim = dp.augmented_dim();
  const std::size_t n = dp.states();
  const std::size_t horizon = dp.horizon_cap;

  // h_k only depends on the staleness context and the next `horizon` jobs.
  const std::size_t context = std::min(len, horizon + dp.psi_max + 1);
  std::unordered_map<std::string, std::uint32_t> memo;

  std::uint32_t worst = 0;
  Matrix acc(dim, dim);
  Matrix tmp(dim, dim);
  for (std::size_t k = 0; k < len; ++k) {
    std::string key(context, '\0');
    const std::size_t origin = k + len * (dp.psi_max / len + 1) - dp.psi_max;
    for (std::size_t i = 0; i < context; ++i) {
      key[i] = static_cast<char>(pattern.miss((origin + i) % len));
    }
    if (auto it = memo.find(key); it != memo.end()) {
      worst = std::max(worst, it->second);
      continue;
    }
    acc = Matrix::identity(dim);
    std::size_t last_exceed = 0;
    bool exceeded = false;
    for (std::size_t r = 0; r <= horizon; ++r) {
      if (state_gain_exceeds(acc, n, dp.cost_threshold)) {
        last_exceed = r;
        exceeded = true;
      }
      if (r == horizon) break;
      multiply_into(steps.at(k + r), acc, tmp);
      std::swap(acc, tmp);
    }
    const std::size_t hk = exceeded ? last_exceed + 1 : 0;
    if (hk > horizon) return std::nullopt;
    memo.emplace(std::move(key), static_cast<std::uint32_t>(hk));
    worst = std::max(worst, static_cast<std::uint32_t>(hk));
  }
  return worst;
}

ControlCost all_hit_cost(const DiscretePlant& dp) {
  return control_cost(dp, MissPattern::all_hit({}, 1));
}

namespace {

// Visits every placement of exactly `misses` misses in a length-`window` pattern.
bool for_each_placement(std::size_t window, std::size_t misses, std::size_t& visited,
                        const std::function<bool(const MissPattern&)>& visit) {
  MissPattern p = MissPattern::all_hit({}, window);
  std::vector<std::size_t> idx(misses);
  for (std::size_t i = 0; i < misses; ++i) idx[i] = i;
  while (true) {
    std::fill(p.misses.begin(), p.misses.end(), std::uint8_t{0});
    for (std::size_t i : idx) p.misses[i] = 1;
    ++visited;
    if (!visit(p)) return false;
    // next combination in lexicographic order
    std::size_t i = misses;
    while (i > 0 && idx[i - 1] == window - misses + (i - 1)) --i;
    if (i == 0) return true;
    ++idx[i - 1];
    for (std::size_t j = i; j < misses; ++j) idx[j] = idx[j - 1] + 1;
  }
}

MissPattern canonical_rotation(const MissPattern& p) {
  MissPattern best = p;
  MissPattern rot = p;
  for (std::size_t s = 1; s < p.size(); ++s) {
    std::rotate(rot.misses.begin(), rot.misses.begin() + 1, rot.misses.end());
    if (rot.misses < best.misses) best.misses = rot.misses;
  }
  return best;
}

}  // namespace

std::size_t for_each_pattern(std::size_t window, std::size_t max_misses,
                             const std::function<bool(const MissPattern&)>& visit) {
  if (window == 0) throw ControlError("pattern window must be positive");
  if (window > kMaxEnumerationWindow) {
    throw ControlError("window " + std::to_string(window) + " exceeds the enumeration guard of " +
                       std::to_string(kMaxEnumerationWindow));
  }
  std::size_t visited = 0;
  for (std::size_t c = 0; c <= std::min(max_misses, window); ++c) {
    if (!for_each_placement(window, c, visited, visit)) break;
  }
  return visited;
}

ControlCost approx_worst_cost(const DiscretePlant& dp, WeaklyHardConstraint constraint) {
  ControlCost worst = 0;
  std::set<std::vector<std::uint8_t>> seen;
  for_each_pattern(constraint.window, constraint.misses, [&](const MissPattern& p) {
    // control_cost already maximizes over every rotation
    if (!seen.insert(canonical_rotation(p).misses).second) return true;
    const ControlCost c = control_cost(dp, p);
    if (!c) {
      worst = std::nullopt;
      return false;
    }
    worst = std::max(*worst, *c);
    return true;
  });
  return worst;
}

std::optional<std::uint32_t> synthesize_wh(const DiscretePlant& dp, std::size_t window) {
  if (window == 0 || window > kMaxEnumerationWindow) {
    throw ControlError("window " + std::to_string(window) + " outside [1, " +
                       std::to_string(kMaxEnumerationWindow) + "]");
  }
  std::set<std::vector<std::uint8_t>> seen;
  for (std::size_t c = 0; c <= window; ++c) {
    bool all_stable = true;
    std::size_t visited = 0;
    for_each_placement(window, c, visited, [&](const MissPattern& p) {
      if (!seen.insert(canonical_rotation(p).misses).second) return true;
      all_stable = is_stable(dp, p);
      return all_stable;
    });
    if (!all_stable) {
      if (c == 0) return std::nullopt;
      return static_cast<std::uint32_t>(c - 1);
    }
  }
  return static_cast<std::uint32_t>(window);
}

}  // namespace whft::control
