#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pwclust/measure.hpp"
#include "pwclust/time_series.hpp"

namespace pwclust {

/// Candidate change points of one sample: strictly increasing positions, each
/// at least floor(lambda * n) away from its neighbours and from both ends.
struct CandidateList {
  double lambda = 0.0;
  std::size_t n = 0;
  std::vector<std::size_t> candidates;  // 1-based positions, ascending
  std::vector<double> scores;           // parallel to candidates
};

/// Two-window divergence profile over a position grid.
struct ScoreProfile {
  std::size_t window = 0;     // half-window length w
  std::size_t grid_step = 0;  // g
  std::vector<std::pair<std::size_t, double>> entries;  // (t, score)
};

namespace detail {

struct ScanParams {
  std::size_t w = 0;
  std::size_t g = 0;
  TruncationPolicy policy;
};

inline ScanParams scan_params(const TimeSeries& y, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("lambda must be in (0,1)");
  const std::size_t n = y.size();
  if (static_cast<double>(n) * lambda < 6.0)
    throw std::invalid_argument(
        "sample too short: need n * lambda >= 6 for one window pair");
  ScanParams p;
  p.w = static_cast<std::size_t>(std::floor(lambda * n / 3.0));
  p.g = std::max<std::size_t>(1, p.w / 10);
  // One policy per sample, from the whole sample's own value gaps, so scores
  // at different positions are comparable.
  p.policy = default_policy(p.w, min_nonzero_gap(y.view(), y.view()));
  return p;
}

inline double window_score(const TimeSeries& y, std::size_t t,
                           const ScanParams& p) {
  return dhat(y.view(t - p.w + 1, t), y.view(t + 1, t + p.w), p.w, p.policy);
}

}  // namespace detail

/// Scores Delta(t) = dhat(left w-window ending at t, right w-window starting
/// at t+1) over the grid t in (w, n-w] with step g, where w = floor(lambda*n/3)
/// and g = max(1, floor(w/10)). Within a stationary stretch the two windows
/// see the same distribution and the score tends to 0; windows straddling a
/// change tend to the distance between the adjacent segment distributions.
inline ScoreProfile score_profile(const TimeSeries& y, double lambda) {
  const detail::ScanParams p = detail::scan_params(y, lambda);
  ScoreProfile profile;
  profile.window = p.w;
  profile.grid_step = p.g;
  for (std::size_t t = p.w + 1; t + p.w <= y.size(); t += p.g)
    profile.entries.emplace_back(t, detail::window_score(y, t, p));
  return profile;
}

/// List-estimator: greedy non-maximum suppression over the score grid.
/// Repeatedly selects the highest-score position at least floor(lambda * n)
/// away from every previous selection and from both ends, earlier position on
/// ties, stopping when nothing eligible remains or the best eligible score is
/// zero. Over-segmentation inside a stationary segment is acceptable to the
/// downstream max-min distance; missed true changes are not.
inline CandidateList list_estimate(const TimeSeries& y, double lambda) {
  const detail::ScanParams p = detail::scan_params(y, lambda);
  const std::size_t n = y.size();
  const auto d_min =
      static_cast<std::size_t>(std::floor(lambda * static_cast<double>(n)));

  // Only positions that clear both ends can ever be selected, so scores are
  // computed just for those.
  std::vector<std::size_t> positions;
  std::vector<double> scores;
  for (std::size_t t = p.w + 1; t + p.w <= n; t += p.g) {
    if (t - 1 < d_min || n - t < d_min) continue;
    positions.push_back(t);
    scores.push_back(detail::window_score(y, t, p));
  }

  // Hard cardinality cap; the floor() applied to the spacing can otherwise
  // admit one extra candidate for small lambda.
  const auto max_candidates =
      static_cast<std::size_t>(std::floor(1.0 / lambda));
  std::vector<std::size_t> picked;
  std::vector<double> picked_scores;
  std::vector<bool> suppressed(positions.size(), false);
  while (picked.size() < max_candidates) {
    std::size_t best = positions.size();
    for (std::size_t i = 0; i < positions.size(); ++i) {
      if (suppressed[i]) continue;
      if (best == positions.size() || scores[i] > scores[best]) best = i;
    }
    if (best == positions.size() || scores[best] == 0.0) break;
    picked.push_back(positions[best]);
    picked_scores.push_back(scores[best]);
    for (std::size_t i = 0; i < positions.size(); ++i) {
      std::size_t dist = positions[i] >= positions[best]
                             ? positions[i] - positions[best]
                             : positions[best] - positions[i];
      if (dist < d_min) suppressed[i] = true;
    }
  }

  CandidateList out;
  out.lambda = lambda;
  out.n = n;
  std::vector<std::size_t> order(picked.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return picked[a] < picked[b]; });
  for (std::size_t i : order) {
    out.candidates.push_back(picked[i]);
    out.scores.push_back(picked_scores[i]);
  }
  return out;
}

}  // namespace pwclust
