#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pwclust/changepoint.hpp"
#include "pwclust/measure.hpp"
#include "pwclust/time_series.hpp"

namespace pwclust {

/// Consecutive stationary-segment ranges of a sample, 1-based inclusive, with
/// boundaries {1} + candidates + {n}. Consecutive segments share a boundary
/// position.
struct SegmentSet {
  std::string parent;
  std::vector<std::pair<std::size_t, std::size_t>> segments;
};

inline SegmentSet split_segments(const TimeSeries& y,
                                 const CandidateList& cands) {
  if (cands.n != y.size())
    throw std::invalid_argument("split_segments: candidate list is for a "
                                "sample of different length");
  SegmentSet set;
  set.parent = y.id;
  std::size_t prev = 1;
  for (std::size_t psi : cands.candidates) {
    set.segments.emplace_back(prev, psi);
    prev = psi;
  }
  set.segments.emplace_back(prev, y.size());
  return set;
}

/// Per-pair provenance of one delta evaluation.
struct DeltaInfo {
  std::size_t n_eff = 0;
  TruncationPolicy policy;
};

/// Distance between two samples given their segmentations: both directed
/// max-min dhat terms over segments truncated to their first n_eff elements,
/// where n_eff = floor(min(lambda*n1, lambda*n2)) and one shared policy keeps
/// every term comparable.
inline double delta_hat_from_segments(const TimeSeries& y1,
                                      const SegmentSet& s1,
                                      const TimeSeries& y2,
                                      const SegmentSet& s2, double lambda,
                                      DeltaInfo* info = nullptr) {
  const auto n_eff = static_cast<std::size_t>(
      std::floor(std::min(lambda * static_cast<double>(y1.size()),
                          lambda * static_cast<double>(y2.size()))));
  if (n_eff == 0)
    throw std::invalid_argument("delta_hat: effective length is zero");
  const TruncationPolicy policy =
      default_policy(n_eff, min_nonzero_gap(y1.view(), y2.view()));
  if (info) {
    info->n_eff = n_eff;
    info->policy = policy;
  }
  const std::size_t k1 = s1.segments.size();
  const std::size_t k2 = s2.segments.size();
  std::vector<double> d(k1 * k2);
  for (std::size_t i = 0; i < k1; ++i) {
    auto [a1, b1] = s1.segments[i];
    if (b1 - a1 + 1 < n_eff)
      throw std::invalid_argument("delta_hat: segment shorter than n_eff");
    auto left = y1.view(a1, a1 + n_eff - 1);
    for (std::size_t j = 0; j < k2; ++j) {
      auto [a2, b2] = s2.segments[j];
      if (b2 - a2 + 1 < n_eff)
        throw std::invalid_argument("delta_hat: segment shorter than n_eff");
      d[i * k2 + j] = dhat(left, y2.view(a2, a2 + n_eff - 1), n_eff, policy);
    }
  }
  double forward = 0.0;
  for (std::size_t i = 0; i < k1; ++i) {
    double nearest = d[i * k2];
    for (std::size_t j = 1; j < k2; ++j)
      nearest = std::min(nearest, d[i * k2 + j]);
    forward = std::max(forward, nearest);
  }
  double backward = 0.0;
  for (std::size_t j = 0; j < k2; ++j) {
    double nearest = d[j];
    for (std::size_t i = 1; i < k1; ++i)
      nearest = std::min(nearest, d[i * k2 + j]);
    backward = std::max(backward, nearest);
  }
  return forward + backward;
}

/// Empirical distance between two piecewise stationary samples: estimate
/// candidate change points in each, split into segments, and sum the two
/// directed max-min distances between the segment sets.
inline double delta_hat(const TimeSeries& y1, const TimeSeries& y2,
                        double lambda, DeltaInfo* info = nullptr) {
  SegmentSet s1 = split_segments(y1, list_estimate(y1, lambda));
  SegmentSet s2 = split_segments(y2, list_estimate(y2, lambda));
  return delta_hat_from_segments(y1, s1, y2, s2, lambda, info);
}

}  // namespace pwclust
