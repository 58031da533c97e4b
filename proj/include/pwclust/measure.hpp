#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pwclust/detail/flat_id_map.hpp"
#include "pwclust/time_series.hpp"

namespace pwclust {

/// Hard cap on the resolution level; the level weights discarded beyond it
/// sum to 1/25 of the total mass.
inline constexpr int kResolutionCap = 24;

/// Truncation of the doubly infinite sum over window lengths u and
/// resolution levels v. Levels are weighted by w_j = 1/(j(j+1)).
struct TruncationPolicy {
  int u_max = 1;
  int v_max = 1;

  static double weight(int j) {
    return 1.0 / (static_cast<double>(j) * (j + 1));
  }
  /// Telescoping partial sum: sum_{j<=k} w_j = k/(k+1).
  static double weight_sum(int k) {
    return static_cast<double>(k) / (k + 1);
  }
};

/// Product of half-open intervals [index_j / 2^v, (index_j + 1) / 2^v),
/// j = 1..u. At fixed (u, v) the cubes partition [0,1)^u exactly.
struct DyadicCube {
  int u = 1;
  int v = 1;
  std::vector<std::uint32_t> index;  // u entries, each < 2^v
};

namespace detail {

inline void check_unit_range(double x) {
  if (!(x >= 0.0 && x < 1.0))
    throw std::domain_error(
        "value outside [0,1); input has not been normalized");
}

/// floor(x * 2^v) for x in [0,1). The multiply is exact (power-of-two
/// scaling), so the result agrees with the quantize-then-shift path below.
inline std::uint32_t level_index(double x, int v) {
  return static_cast<std::uint32_t>(x * static_cast<double>(1u << v));
}

}  // namespace detail

/// Index tuple of the unique cube at level v containing `point`.
inline std::vector<std::uint32_t> cube_index(std::span<const double> point,
                                             int v) {
  if (v < 1 || v > 31) throw std::invalid_argument("cube_index: bad level");
  std::vector<std::uint32_t> idx(point.size());
  for (std::size_t j = 0; j < point.size(); ++j) {
    detail::check_unit_range(point[j]);
    idx[j] = detail::level_index(point[j], v);
  }
  return idx;
}

/// Counts of sliding u-windows per occupied cube at scale (u, v).
/// window_count is n - u + 1 (zero when the sample is shorter than u, in
/// which case every frequency is zero).
struct FrequencyTable {
  int u = 1;
  int v = 1;
  std::size_t window_count = 0;
  std::map<std::vector<std::uint32_t>, std::size_t> counts;

  double frequency(const std::vector<std::uint32_t>& idx) const {
    if (window_count == 0) return 0.0;
    auto it = counts.find(idx);
    return it == counts.end()
               ? 0.0
               : static_cast<double>(it->second) / window_count;
  }
};

inline FrequencyTable frequency_table(std::span<const double> x, int u,
                                      int v) {
  if (u < 1) throw std::invalid_argument("frequency_table: u must be >= 1");
  if (v < 1 || v > 31)
    throw std::invalid_argument("frequency_table: bad level");
  FrequencyTable table;
  table.u = u;
  table.v = v;
  if (x.size() < static_cast<std::size_t>(u)) return table;
  table.window_count = x.size() - u + 1;
  std::vector<std::uint32_t> idx(u);
  for (std::size_t i = 0; i < table.window_count; ++i) {
    for (int j = 0; j < u; ++j) {
      detail::check_unit_range(x[i + j]);
      idx[j] = detail::level_index(x[i + j], v);
    }
    ++table.counts[idx];
  }
  return table;
}

/// Empirical measure of a single cube: the fraction of u-windows falling in
/// it, or 0 when the sample is shorter than u.
inline double empirical_frequency(std::span<const double> x,
                                  const DyadicCube& cube) {
  if (cube.index.size() != static_cast<std::size_t>(cube.u))
    throw std::invalid_argument("empirical_frequency: malformed cube");
  if (x.size() < static_cast<std::size_t>(cube.u)) return 0.0;
  std::size_t windows = x.size() - cube.u + 1;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < windows; ++i) {
    bool inside = true;
    for (int j = 0; j < cube.u && inside; ++j) {
      detail::check_unit_range(x[i + j]);
      inside = detail::level_index(x[i + j], cube.v) == cube.index[j];
    }
    hits += inside;
  }
  return static_cast<double>(hits) / windows;
}

inline double empirical_frequency(const TimeSeries& x,
                                  const DyadicCube& cube) {
  return empirical_frequency(x.view(), cube);
}

/// Smallest strictly positive pairwise difference over the multiset union of
/// both samples' values. nullopt when every value is identical; callers fall
/// back to a single resolution level in that case.
inline std::optional<double> min_nonzero_gap(std::span<const double> x,
                                             std::span<const double> y) {
  std::vector<double> all;
  all.reserve(x.size() + y.size());
  all.insert(all.end(), x.begin(), x.end());
  all.insert(all.end(), y.begin(), y.end());
  std::sort(all.begin(), all.end());
  std::optional<double> gap;
  for (std::size_t i = 1; i < all.size(); ++i) {
    double d = all[i] - all[i - 1];
    if (d > 0.0 && (!gap || d < *gap)) gap = d;
  }
  return gap;
}

inline std::optional<double> min_nonzero_gap(const TimeSeries& x,
                                             const TimeSeries& y) {
  return min_nonzero_gap(x.view(), y.view());
}

/// u_max = max(1, floor(log2 n)); v_max = ceil(-log2 s_min), floored at 1 and
/// capped at kResolutionCap.
inline TruncationPolicy default_policy(std::size_t n, double s_min) {
  if (n < 2) throw std::invalid_argument("default_policy: n must be >= 2");
  if (!(s_min > 0.0 && s_min <= 1.0))
    throw std::invalid_argument("default_policy: s_min must be in (0,1]");
  TruncationPolicy policy;
  policy.u_max = std::max(1, static_cast<int>(std::bit_width(n)) - 1);
  int exp = 0;
  std::frexp(s_min, &exp);  // s_min = m * 2^exp with m in [0.5, 1)
  policy.v_max = std::clamp(1 - exp, 1, kResolutionCap);
  return policy;
}

/// Degenerate-gap overload: all values equal means a single level suffices
/// (the distance against an identical constant is then exactly 0).
inline TruncationPolicy default_policy(std::size_t n,
                                       std::optional<double> s_min) {
  if (s_min) return default_policy(n, *s_min);
  if (n < 2) throw std::invalid_argument("default_policy: n must be >= 2");
  TruncationPolicy policy;
  policy.u_max = std::max(1, static_cast<int>(std::bit_width(n)) - 1);
  policy.v_max = 1;
  return policy;
}

namespace detail {

/// Workspace for the occupied-cube sweep shared by the (u, v) scales of one
/// distance evaluation.
struct DhatScratch {
  std::vector<std::uint32_t> qa, qb;    // values quantized at v_max
  std::vector<std::uint32_t> ida, idb;  // per-window dense cube ids
  std::vector<std::uint32_t> ca, cb;    // per-id window counts
};

/// Core of the empirical distributional distance. Windows are identified by
/// dense cube ids built incrementally in u: a (u, v)-cube id extends the
/// (u-1, v) id of the same window start by the level-v index of the window's
/// last element. Only occupied cubes are ever touched, so each (u, v) term
/// costs one hash operation per window.
inline double dhat_core(std::span<const double> a, std::span<const double> b,
                        std::size_t n_eff, const TruncationPolicy& policy,
                        DhatScratch& scratch) {
  const int u_max = policy.u_max;
  const int v_max = policy.v_max;
  scratch.qa.resize(n_eff);
  scratch.qb.resize(n_eff);
  const double scale = std::ldexp(1.0, v_max);  // exact power-of-two scale
  for (std::size_t i = 0; i < n_eff; ++i) {
    check_unit_range(a[i]);
    scratch.qa[i] = static_cast<std::uint32_t>(a[i] * scale);
  }
  for (std::size_t i = 0; i < n_eff; ++i) {
    check_unit_range(b[i]);
    scratch.qb[i] = static_cast<std::uint32_t>(b[i] * scale);
  }

  FlatIdMap map(2 * n_eff);
  scratch.ida.resize(n_eff);
  scratch.idb.resize(n_eff);

  double total = 0.0;
  for (int v = 1; v <= v_max; ++v) {
    const int shift = v_max - v;
    for (int u = 1; u <= u_max; ++u) {
      const std::size_t wa =
          n_eff >= static_cast<std::size_t>(u) ? n_eff - u + 1 : 0;
      const std::size_t wb = wa;  // equal effective lengths by construction
      map.clear();
      std::uint32_t next_id = 0;
      for (std::size_t i = 0; i < wa; ++i) {
        std::uint64_t sym = scratch.qa[i + u - 1] >> shift;
        std::uint64_t key =
            u == 1 ? sym
                   : (static_cast<std::uint64_t>(scratch.ida[i]) << 32) | sym;
        scratch.ida[i] = map.get_or_add(key, next_id);
      }
      for (std::size_t i = 0; i < wb; ++i) {
        std::uint64_t sym = scratch.qb[i + u - 1] >> shift;
        std::uint64_t key =
            u == 1 ? sym
                   : (static_cast<std::uint64_t>(scratch.idb[i]) << 32) | sym;
        scratch.idb[i] = map.get_or_add(key, next_id);
      }
      scratch.ca.assign(next_id, 0);
      scratch.cb.assign(next_id, 0);
      for (std::size_t i = 0; i < wa; ++i) ++scratch.ca[scratch.ida[i]];
      for (std::size_t i = 0; i < wb; ++i) ++scratch.cb[scratch.idb[i]];
      double l1 = 0.0;
      for (std::uint32_t id = 0; id < next_id; ++id) {
        double fa = wa ? static_cast<double>(scratch.ca[id]) / wa : 0.0;
        double fb = wb ? static_cast<double>(scratch.cb[id]) / wb : 0.0;
        l1 += std::abs(fa - fb);
      }
      total += TruncationPolicy::weight(u) * TruncationPolicy::weight(v) * l1;
    }
  }
  return total;
}

inline void check_policy(const TruncationPolicy& policy) {
  if (policy.u_max < 1 || policy.v_max < 1 || policy.v_max > 31)
    throw std::invalid_argument("truncation policy out of range");
}

}  // namespace detail

/// Empirical distributional distance between two samples restricted to their
/// first n_eff elements: sum over (u, v) up to the policy bounds of
/// w_u w_v sum_B |mu(x,B) - mu(x',B)|, visiting occupied cubes only.
/// Symmetric bit-for-bit and exactly 0 on identical inputs.
inline double dhat(std::span<const double> x, std::span<const double> y,
                   std::size_t n_eff, const TruncationPolicy& policy) {
  detail::check_policy(policy);
  if (n_eff == 0) throw std::invalid_argument("dhat: n_eff must be >= 1");
  if (n_eff > x.size() || n_eff > y.size())
    throw std::invalid_argument("dhat: n_eff exceeds a sample length");
  // Canonical argument order makes the floating-point sum independent of how
  // the caller ordered the pair.
  bool swap = std::lexicographical_compare(y.begin(), y.begin() + n_eff,
                                           x.begin(), x.begin() + n_eff);
  detail::DhatScratch scratch;
  return swap ? detail::dhat_core(y, x, n_eff, policy, scratch)
              : detail::dhat_core(x, y, n_eff, policy, scratch);
}

inline double dhat(const TimeSeries& x, const TimeSeries& y,
                   std::size_t n_eff, const TruncationPolicy& policy) {
  return dhat(x.view(), y.view(), n_eff, policy);
}

/// Exact process measure evaluated over dyadic cubes. Implementations
/// enumerate the cubes carrying mass at a given scale (see processes.hpp).
class MeasureOracle {
 public:
  virtual ~MeasureOracle() = default;
  /// Occupied cubes and their exact masses at scale (u, v); masses sum to 1.
  virtual std::map<std::vector<std::uint32_t>, double> cube_masses(
      int u, int v) const = 0;
  /// Throws when the oracle cannot represent its support exactly on the
  /// dyadic grid at level v.
  virtual void require_dyadic_exact(int v) const = 0;
};

/// Empirical distance between a sample and an exactly known measure:
/// sum of w_u w_v sum_B |mu_n(x,B) - mu(B)| over cubes where either side is
/// nonzero.
inline double dhat_vs_measure(std::span<const double> x,
                              const MeasureOracle& oracle, std::size_t n_eff,
                              const TruncationPolicy& policy) {
  detail::check_policy(policy);
  if (n_eff == 0 || n_eff > x.size())
    throw std::invalid_argument("dhat_vs_measure: bad n_eff");
  oracle.require_dyadic_exact(policy.v_max);
  std::span<const double> head = x.first(n_eff);
  double total = 0.0;
  for (int u = 1; u <= policy.u_max; ++u) {
    for (int v = 1; v <= policy.v_max; ++v) {
      FrequencyTable table = frequency_table(head, u, v);
      auto masses = oracle.cube_masses(u, v);
      double l1 = 0.0;
      for (const auto& [idx, count] : table.counts) {
        auto it = masses.find(idx);
        double m = it == masses.end() ? 0.0 : it->second;
        l1 += std::abs(static_cast<double>(count) / table.window_count - m);
      }
      for (const auto& [idx, m] : masses)
        if (!table.counts.contains(idx)) l1 += m;
      total += TruncationPolicy::weight(u) * TruncationPolicy::weight(v) * l1;
    }
  }
  return total;
}

inline double dhat_vs_measure(const TimeSeries& x, const MeasureOracle& oracle,
                              std::size_t n_eff,
                              const TruncationPolicy& policy) {
  return dhat_vs_measure(x.view(), oracle, n_eff, policy);
}

}  // namespace pwclust
