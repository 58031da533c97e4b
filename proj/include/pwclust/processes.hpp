#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pwclust/detail/rng.hpp"
#include "pwclust/measure.hpp"
#include "pwclust/time_series.hpp"

namespace pwclust {

enum class ProcessKind { iid_finite, markov_finite, rotation };

/// Generative description of one stationary ergodic segment distribution.
/// Finite-support kinds double as exact measure oracles; the rotation kind
/// exists to exercise the non-mixing regime and has no oracle.
struct ProcessSpec {
  ProcessKind kind = ProcessKind::iid_finite;

  // iid_finite: support points with probabilities, kept sorted by value.
  std::vector<double> support;
  std::vector<double> probs;

  // markov_finite: state -> value map, row-stochastic transitions, and the
  // stationary law (computed at construction, used as initial distribution).
  std::vector<double> state_values;
  std::vector<std::vector<double>> transition;
  std::vector<double> stationary;

  // rotation: step angle in (0,1), intended irrational.
  double angle = 0.0;

  static ProcessSpec iid(std::vector<double> support_points,
                         std::vector<double> probabilities);
  static ProcessSpec markov(std::vector<double> values,
                            std::vector<std::vector<double>> transitions);
  static ProcessSpec rotation(double step_angle);

  std::size_t state_count() const {
    switch (kind) {
      case ProcessKind::iid_finite: return support.size();
      case ProcessKind::markov_finite: return state_values.size();
      case ProcessKind::rotation: return 0;
    }
    return 0;
  }

  friend bool operator==(const ProcessSpec&, const ProcessSpec&) = default;
};

namespace detail {

inline void normalize_distribution(std::vector<double>& p,
                                   const char* what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0))
      throw std::invalid_argument(std::string(what) +
                                  ": negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument(std::string(what) +
                                ": probabilities do not sum to 1");
  for (double& v : p) v /= sum;
}

inline void check_values_unit_distinct(const std::vector<double>& vals,
                                       const char* what) {
  for (double v : vals)
    if (!(v >= 0.0 && v < 1.0))
      throw std::invalid_argument(std::string(what) +
                                  ": value outside [0,1)");
  std::vector<double> sorted = vals;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument(std::string(what) + ": duplicate values");
}

/// Primitivity (irreducible + aperiodic) via Wielandt's bound: some boolean
/// power of the positivity pattern up to (S-1)^2 + 1 must be all-ones.
inline bool is_primitive(const std::vector<std::vector<double>>& t) {
  const std::size_t s = t.size();
  std::vector<std::vector<bool>> m(s, std::vector<bool>(s));
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j) m[i][j] = t[i][j] > 0.0;
  const std::size_t bound = (s - 1) * (s - 1) + 1;
  for (std::size_t step = 0; step < bound; ++step) {
    bool all = true;
    for (const auto& row : m)
      for (bool b : row) all = all && b;
    if (all) return true;
    std::vector<std::vector<bool>> next(s, std::vector<bool>(s, false));
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t k = 0; k < s; ++k)
        if (m[i][k])
          for (std::size_t j = 0; j < s; ++j)
            if (m[k][j]) next[i][j] = true;
    m = std::move(next);
  }
  return false;
}

/// Solve pi T = pi with sum(pi) = 1 by Gaussian elimination on (T' - I) with
/// the last equation replaced by the normalization constraint.
inline std::vector<double> stationary_distribution(
    const std::vector<std::vector<double>>& t) {
  const std::size_t s = t.size();
  std::vector<std::vector<double>> a(s, std::vector<double>(s + 1, 0.0));
  for (std::size_t i = 0; i + 1 < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) a[i][j] = t[j][i] - (i == j ? 1.0 : 0.0);
    a[i][s] = 0.0;
  }
  for (std::size_t j = 0; j < s; ++j) a[s - 1][j] = 1.0;
  a[s - 1][s] = 1.0;
  for (std::size_t col = 0; col < s; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < s; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    if (std::abs(a[col][col]) < 1e-14)
      throw std::invalid_argument("markov spec: singular stationary system");
    for (std::size_t r = 0; r < s; ++r) {
      if (r == col) continue;
      double f = a[r][col] / a[col][col];
      for (std::size_t j = col; j <= s; ++j) a[r][j] -= f * a[col][j];
    }
  }
  std::vector<double> pi(s);
  for (std::size_t i = 0; i < s; ++i) pi[i] = a[i][s] / a[i][i];
  return pi;
}

inline bool dyadic_exact(double x) {
  double scaled = std::ldexp(x, kResolutionCap);
  return scaled == std::floor(scaled);
}

}  // namespace detail

inline ProcessSpec ProcessSpec::iid(std::vector<double> support_points,
                                    std::vector<double> probabilities) {
  if (support_points.empty() || support_points.size() != probabilities.size())
    throw std::invalid_argument("iid spec: support/probability size mismatch");
  detail::check_values_unit_distinct(support_points, "iid spec");
  detail::normalize_distribution(probabilities, "iid spec");
  // Canonical order so equal distributions compare equal.
  std::vector<std::size_t> order(support_points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return support_points[i] < support_points[j];
  });
  ProcessSpec spec;
  spec.kind = ProcessKind::iid_finite;
  for (std::size_t i : order) {
    spec.support.push_back(support_points[i]);
    spec.probs.push_back(probabilities[i]);
  }
  return spec;
}

inline ProcessSpec ProcessSpec::markov(
    std::vector<double> values, std::vector<std::vector<double>> transitions) {
  if (values.empty() || transitions.size() != values.size())
    throw std::invalid_argument("markov spec: shape mismatch");
  for (const auto& row : transitions)
    if (row.size() != values.size())
      throw std::invalid_argument("markov spec: transition row size mismatch");
  detail::check_values_unit_distinct(values, "markov spec");
  for (auto& row : transitions)
    detail::normalize_distribution(row, "markov spec row");
  if (!detail::is_primitive(transitions))
    throw std::invalid_argument(
        "markov spec: chain is not irreducible and aperiodic");
  ProcessSpec spec;
  spec.kind = ProcessKind::markov_finite;
  spec.state_values = std::move(values);
  spec.transition = std::move(transitions);
  spec.stationary = detail::stationary_distribution(spec.transition);
  return spec;
}

inline ProcessSpec ProcessSpec::rotation(double step_angle) {
  if (!(step_angle > 0.0 && step_angle < 1.0))
    throw std::invalid_argument("rotation spec: angle must be in (0,1)");
  ProcessSpec spec;
  spec.kind = ProcessKind::rotation;
  spec.angle = step_angle;
  return spec;
}

/// Full piecewise sample description: segment-boundary fractions
/// 0 < theta_1 < ... < theta_{kappa+1} <= 1 and one spec per segment,
/// adjacent specs distinct.
struct PiecewiseSpec {
  std::vector<double> thetas;
  std::vector<ProcessSpec> segments;

  PiecewiseSpec(std::vector<double> boundary_fractions,
                std::vector<ProcessSpec> segment_specs)
      : thetas(std::move(boundary_fractions)),
        segments(std::move(segment_specs)) {
    if (thetas.empty() || thetas.size() != segments.size())
      throw std::invalid_argument("piecewise spec: theta/segment mismatch");
    double prev = 0.0;
    for (double t : thetas) {
      if (!(t > prev && t <= 1.0))
        throw std::invalid_argument(
            "piecewise spec: thetas must be increasing in (0,1]");
      prev = t;
    }
    for (std::size_t j = 1; j < segments.size(); ++j)
      if (segments[j] == segments[j - 1])
        throw std::invalid_argument(
            "piecewise spec: adjacent segment distributions must differ");
  }

  /// Normalized minimum separation between consecutive change points.
  double alpha() const {
    double a = thetas[0];
    for (std::size_t j = 1; j < thetas.size(); ++j)
      a = std::min(a, thetas[j] - thetas[j - 1]);
    return a;
  }
};

/// A finite set of segment distributions; the "bag of distributions"
/// identifying an equivalence class.
struct ClassSpec {
  std::vector<ProcessSpec> distributions;

  explicit ClassSpec(std::vector<ProcessSpec> members)
      : distributions(std::move(members)) {
    if (distributions.empty())
      throw std::invalid_argument("class spec: empty distribution set");
    for (std::size_t i = 0; i < distributions.size(); ++i)
      for (std::size_t j = i + 1; j < distributions.size(); ++j)
        if (distributions[i] == distributions[j])
          throw std::invalid_argument("class spec: duplicate distribution");
  }
};

struct GeneratedSample {
  TimeSeries series;
  std::vector<std::size_t> change_points;  // 1-based positions tau_1..tau_k
};

namespace detail {

inline std::vector<double> cumulative(const std::vector<double>& p) {
  std::vector<double> cum(p.size());
  double run = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    run += p[i];
    cum[i] = run;
  }
  cum.back() = 1.0;
  return cum;
}

inline void fill_segment(const ProcessSpec& spec, std::span<double> out,
                         std::mt19937_64& rng) {
  switch (spec.kind) {
    case ProcessKind::iid_finite: {
      std::vector<double> cum = cumulative(spec.probs);
      for (double& x : out) x = spec.support[draw_index(cum, uniform01(rng))];
      return;
    }
    case ProcessKind::markov_finite: {
      std::vector<double> init = cumulative(spec.stationary);
      std::vector<std::vector<double>> rows;
      rows.reserve(spec.transition.size());
      for (const auto& row : spec.transition) rows.push_back(cumulative(row));
      std::size_t state = draw_index(init, uniform01(rng));
      for (double& x : out) {
        x = spec.state_values[state];
        state = draw_index(rows[state], uniform01(rng));
      }
      return;
    }
    case ProcessKind::rotation: {
      double phase = uniform01(rng);
      for (double& x : out) {
        x = phase;
        phase += spec.angle;
        if (phase >= 1.0) phase -= 1.0;
      }
      return;
    }
  }
}

}  // namespace detail

/// Realizes a piecewise stationary sample at length scale n: the sample has
/// length floor(n * theta_last) with change points tau_j = floor(n * theta_j),
/// each segment an independent realization of its spec started from the
/// stationary law. Deterministic given the seed.
inline GeneratedSample generate_piecewise(const PiecewiseSpec& spec,
                                          std::size_t n, std::uint64_t seed,
                                          std::string id = "sample") {
  if (static_cast<double>(n) * spec.alpha() < 10.0)
    throw std::invalid_argument(
        "generate_piecewise: n * alpha must be at least 10");
  const std::size_t total =
      static_cast<std::size_t>(std::floor(n * spec.thetas.back()));
  std::vector<double> values(total);
  std::vector<std::size_t> taus;
  std::size_t prev = 0;
  for (std::size_t j = 0; j < spec.segments.size(); ++j) {
    std::size_t end =
        j + 1 == spec.segments.size()
            ? total
            : static_cast<std::size_t>(std::floor(n * spec.thetas[j]));
    std::mt19937_64 rng(detail::derive_seed(seed, j));
    detail::fill_segment(spec.segments[j],
                         std::span<double>(values).subspan(prev, end - prev),
                         rng);
    if (j + 1 < spec.segments.size()) taus.push_back(end);
    prev = end;
  }
  return GeneratedSample{TimeSeries(std::move(id), std::move(values)),
                         std::move(taus)};
}

namespace detail {

class IidOracle final : public MeasureOracle {
 public:
  explicit IidOracle(ProcessSpec spec) : spec_(std::move(spec)) {}

  std::map<std::vector<std::uint32_t>, double> cube_masses(
      int u, int v) const override {
    // Per-coordinate cube masses at level v, then a u-fold product over the
    // occupied combinations.
    std::map<std::uint32_t, double> level;
    for (std::size_t i = 0; i < spec_.support.size(); ++i)
      level[level_index(spec_.support[i], v)] += spec_.probs[i];
    check_enumeration_guard(level.size(), u);
    std::map<std::vector<std::uint32_t>, double> out;
    std::vector<std::uint32_t> idx(u);
    expand(level, 0, u, 1.0, idx, out);
    return out;
  }

  void require_dyadic_exact(int) const override {
    for (double s : spec_.support)
      if (!dyadic_exact(s))
        throw std::domain_error(
            "oracle support is not dyadic-exact at the policy resolution");
  }

 private:
  static void check_enumeration_guard(std::size_t branching, int u) {
    double combos = std::pow(static_cast<double>(branching), u);
    if (combos > 1e7)
      throw std::domain_error("oracle enumeration guard exceeded");
  }

  static void expand(const std::map<std::uint32_t, double>& level, int depth,
                     int u, double mass, std::vector<std::uint32_t>& idx,
                     std::map<std::vector<std::uint32_t>, double>& out) {
    if (depth == u) {
      out[idx] += mass;
      return;
    }
    for (const auto& [cube, m] : level) {
      idx[depth] = cube;
      expand(level, depth + 1, u, mass * m, idx, out);
    }
  }

  ProcessSpec spec_;
};

class MarkovOracle final : public MeasureOracle {
 public:
  explicit MarkovOracle(ProcessSpec spec) : spec_(std::move(spec)) {}

  std::map<std::vector<std::uint32_t>, double> cube_masses(
      int u, int v) const override {
    const std::size_t s = spec_.state_values.size();
    double combos = std::pow(static_cast<double>(s), u);
    if (combos > 1e7)
      throw std::domain_error("oracle enumeration guard exceeded");
    std::map<std::vector<std::uint32_t>, double> out;
    std::vector<std::uint32_t> idx(u);
    for (std::size_t first = 0; first < s; ++first)
      walk(first, 0, u, v, spec_.stationary[first], idx, out);
    return out;
  }

  void require_dyadic_exact(int) const override {
    for (double val : spec_.state_values)
      if (!dyadic_exact(val))
        throw std::domain_error(
            "oracle support is not dyadic-exact at the policy resolution");
  }

 private:
  void walk(std::size_t state, int depth, int u, int v, double mass,
            std::vector<std::uint32_t>& idx,
            std::map<std::vector<std::uint32_t>, double>& out) const {
    idx[depth] = level_index(spec_.state_values[state], v);
    if (depth + 1 == u) {
      out[idx] += mass;
      return;
    }
    const auto& row = spec_.transition[state];
    for (std::size_t next = 0; next < row.size(); ++next)
      if (row[next] > 0.0)
        walk(next, depth + 1, u, v, mass * row[next], idx, out);
  }

  ProcessSpec spec_;
};

}  // namespace detail

/// Exact-oracle factory for the finite-support kinds; rotation has none.
inline std::unique_ptr<MeasureOracle> make_oracle(const ProcessSpec& spec) {
  switch (spec.kind) {
    case ProcessKind::iid_finite:
      return std::make_unique<detail::IidOracle>(spec);
    case ProcessKind::markov_finite:
      return std::make_unique<detail::MarkovOracle>(spec);
    case ProcessKind::rotation:
      throw std::domain_error("rotation processes have no measure oracle");
  }
  throw std::domain_error("unknown process kind");
}

/// Distributional distance between two exactly known measures under a
/// truncation policy; the brute-force counterpart of dhat.
inline double true_d(const MeasureOracle& a, const MeasureOracle& b,
                     const TruncationPolicy& policy) {
  detail::check_policy(policy);
  a.require_dyadic_exact(policy.v_max);
  b.require_dyadic_exact(policy.v_max);
  double total = 0.0;
  for (int u = 1; u <= policy.u_max; ++u) {
    for (int v = 1; v <= policy.v_max; ++v) {
      auto ma = a.cube_masses(u, v);
      auto mb = b.cube_masses(u, v);
      double l1 = 0.0;
      for (const auto& [idx, mass] : ma) {
        auto it = mb.find(idx);
        l1 += std::abs(mass - (it == mb.end() ? 0.0 : it->second));
      }
      for (const auto& [idx, mass] : mb)
        if (!ma.contains(idx)) l1 += mass;
      total += TruncationPolicy::weight(u) * TruncationPolicy::weight(v) * l1;
    }
  }
  return total;
}

inline double true_d(const ProcessSpec& a, const ProcessSpec& b,
                     const TruncationPolicy& policy) {
  return true_d(*make_oracle(a), *make_oracle(b), policy);
}

/// Class distance: the sum of the two directed max-min distributional
/// distances between the member sets.
inline double true_delta(const ClassSpec& a, const ClassSpec& b,
                         const TruncationPolicy& policy) {
  std::vector<std::unique_ptr<MeasureOracle>> oa, ob;
  for (const auto& spec : a.distributions) oa.push_back(make_oracle(spec));
  for (const auto& spec : b.distributions) ob.push_back(make_oracle(spec));
  std::vector<std::vector<double>> d(oa.size(),
                                     std::vector<double>(ob.size()));
  for (std::size_t i = 0; i < oa.size(); ++i)
    for (std::size_t j = 0; j < ob.size(); ++j)
      d[i][j] = true_d(*oa[i], *ob[j], policy);
  double forward = 0.0;
  for (std::size_t i = 0; i < oa.size(); ++i) {
    double nearest = d[i][0];
    for (std::size_t j = 1; j < ob.size(); ++j)
      nearest = std::min(nearest, d[i][j]);
    forward = std::max(forward, nearest);
  }
  double backward = 0.0;
  for (std::size_t j = 0; j < ob.size(); ++j) {
    double nearest = d[0][j];
    for (std::size_t i = 1; i < oa.size(); ++i)
      nearest = std::min(nearest, d[i][j]);
    backward = std::max(backward, nearest);
  }
  return forward + backward;
}

/// Index of the segment distribution generating the largest connected portion
/// of positions [first, last] (1-based inclusive), smallest index on ties.
/// Test oracle mirroring the proof machinery; not part of the algorithms.
inline std::size_t mu_star(std::size_t first, std::size_t last,
                           const std::vector<std::size_t>& change_points,
                           std::size_t n) {
  if (first < 1 || last < first || last > n)
    throw std::invalid_argument("mu_star: interval out of range");
  std::size_t best = 0, best_len = 0;
  std::size_t seg_start = 1;
  for (std::size_t k = 0; k <= change_points.size(); ++k) {
    std::size_t seg_end = k < change_points.size() ? change_points[k] : n;
    std::size_t lo = std::max(first, seg_start);
    std::size_t hi = std::min(last, seg_end);
    std::size_t len = hi >= lo ? hi - lo + 1 : 0;
    if (len > best_len) {
      best_len = len;
      best = k;
    }
    seg_start = seg_end + 1;
  }
  return best;
}

}  // namespace pwclust
