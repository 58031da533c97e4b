#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pwclust/detail/parallel.hpp"
#include "pwclust/pwdelta.hpp"
#include "pwclust/time_series.hpp"

namespace pwclust {

/// Symmetric pairwise distances with a zero diagonal.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> cells;  // row-major n*n

  explicit DistanceMatrix(std::size_t size = 0)
      : n(size), cells(size * size, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return cells[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return cells[i * n + j]; }
};

/// Aggregate view of the per-pair truncation policies used in one run.
struct PairPolicyStats {
  std::size_t pairs = 0;
  int u_min = 0, u_max = 0, v_min = 0, v_max = 0;
  std::size_t n_eff_min = 0, n_eff_max = 0;

  void add(const DeltaInfo& info) {
    if (pairs == 0) {
      u_min = u_max = info.policy.u_max;
      v_min = v_max = info.policy.v_max;
      n_eff_min = n_eff_max = info.n_eff;
    } else {
      u_min = std::min(u_min, info.policy.u_max);
      u_max = std::max(u_max, info.policy.u_max);
      v_min = std::min(v_min, info.policy.v_max);
      v_max = std::max(v_max, info.policy.v_max);
      n_eff_min = std::min(n_eff_min, info.n_eff);
      n_eff_max = std::max(n_eff_max, info.n_eff);
    }
    ++pairs;
  }
};

struct PairwiseDeltaResult {
  DistanceMatrix matrix;
  std::vector<CandidateList> candidates;  // one list per sample
  PairPolicyStats policy_stats;
};

/// All pairwise delta estimates. Candidate lists are computed once per sample
/// (the estimator is deterministic, so this matches re-running it per pair)
/// and unordered pairs are evaluated independently, possibly concurrently.
inline PairwiseDeltaResult pairwise_delta_detailed(
    const std::vector<TimeSeries>& samples, double lambda) {
  const std::size_t n = samples.size();
  if (n < 2)
    throw std::invalid_argument("pairwise_delta: need at least two samples");
  PairwiseDeltaResult result;
  result.matrix = DistanceMatrix(n);
  result.candidates.resize(n);
  detail::parallel_for(n, [&](std::size_t i) {
    result.candidates[i] = list_estimate(samples[i], lambda);
  });
  std::vector<SegmentSet> segments(n);
  for (std::size_t i = 0; i < n; ++i)
    segments[i] = split_segments(samples[i], result.candidates[i]);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<DeltaInfo> infos(pairs.size());
  detail::parallel_for(pairs.size(), [&](std::size_t k) {
    auto [i, j] = pairs[k];
    double d = delta_hat_from_segments(samples[i], segments[i], samples[j],
                                       segments[j], lambda, &infos[k]);
    result.matrix.at(i, j) = d;
    result.matrix.at(j, i) = d;
  });
  for (const DeltaInfo& info : infos) result.policy_stats.add(info);
  return result;
}

inline DistanceMatrix pairwise_delta(const std::vector<TimeSeries>& samples,
                                     double lambda) {
  return pairwise_delta_detailed(samples, lambda).matrix;
}

/// Farthest-point center selection: the first sample seeds the centers, then
/// each next center maximizes its distance to the nearest existing center,
/// smallest index on ties. All-zero candidate distances mean the matrix
/// cannot support m distinct centers.
inline std::vector<std::size_t> farthest_point_init(const DistanceMatrix& d,
                                                    std::size_t m) {
  if (m < 1) throw std::invalid_argument("farthest_point_init: m must be >= 1");
  if (m > d.n)
    throw std::invalid_argument(
        "farthest_point_init: m exceeds the sample count N");
  std::vector<std::size_t> centers{0};
  while (centers.size() < m) {
    std::size_t best = 0;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < d.n; ++i) {
      double nearest = d.at(i, centers[0]);
      for (std::size_t c = 1; c < centers.size(); ++c)
        nearest = std::min(nearest, d.at(i, centers[c]));
      if (nearest > best_dist) {
        best_dist = nearest;
        best = i;
      }
    }
    if (best_dist == 0.0)
      throw std::domain_error(
          "degenerate distance matrix: every sample is at distance zero from "
          "an existing center, cannot pick distinct centers");
    centers.push_back(best);
  }
  return centers;
}

/// A partition of the samples into m labeled clusters, each containing its
/// center.
struct ClusteringResult {
  std::size_t m = 0;
  std::vector<std::size_t> centers;     // sample indices, one per cluster
  std::vector<std::size_t> assignment;  // sample index -> cluster label
  double lambda = 0.0;
  std::uint64_t seed = 0;
  PairPolicyStats policy_stats;
};

/// Nearest-center assignment; equidistant samples go to the smallest-index
/// center.
inline ClusteringResult assign_remaining(
    const DistanceMatrix& d, const std::vector<std::size_t>& centers) {
  for (std::size_t a = 0; a < centers.size(); ++a) {
    if (centers[a] >= d.n)
      throw std::invalid_argument("assign_remaining: center out of range");
    for (std::size_t b = a + 1; b < centers.size(); ++b)
      if (centers[a] == centers[b])
        throw std::invalid_argument("assign_remaining: duplicate centers");
  }
  ClusteringResult result;
  result.m = centers.size();
  result.centers = centers;
  result.assignment.resize(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    std::size_t best_center = centers[0];
    std::size_t best_label = 0;
    for (std::size_t c = 1; c < centers.size(); ++c) {
      double dist = d.at(i, centers[c]);
      double cur = d.at(i, best_center);
      if (dist < cur || (dist == cur && centers[c] < best_center)) {
        best_center = centers[c];
        best_label = c;
      }
    }
    result.assignment[i] = best_label;
  }
  return result;
}

/// Full clustering pass: pairwise distances, farthest-point initialization,
/// nearest-center assignment.
inline ClusteringResult cluster(const std::vector<TimeSeries>& samples,
                                std::size_t m, double lambda) {
  if (m > samples.size())
    throw std::invalid_argument("cluster: m exceeds the sample count N");
  PairwiseDeltaResult pd = pairwise_delta_detailed(samples, lambda);
  ClusteringResult result =
      assign_remaining(pd.matrix, farthest_point_init(pd.matrix, m));
  result.lambda = lambda;
  result.policy_stats = pd.policy_stats;
  return result;
}

/// A reference partition, as cluster labels per sample.
struct GroundTruth {
  std::vector<std::size_t> labels;
};

struct PartitionComparison {
  bool exact_match = false;
  double pair_accuracy = 0.0;  // fraction of unordered pairs agreeing on
                               // co-membership
};

namespace detail {

/// Relabels a partition by first occurrence so label permutations compare
/// equal.
inline std::vector<std::size_t> canonical_labels(
    const std::vector<std::size_t>& labels) {
  std::vector<std::size_t> mapping;
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::size_t found = mapping.size();
    for (std::size_t k = 0; k < mapping.size(); ++k)
      if (mapping[k] == labels[i]) {
        found = k;
        break;
      }
    if (found == mapping.size()) mapping.push_back(labels[i]);
    out[i] = found;
  }
  return out;
}

}  // namespace detail

inline PartitionComparison compare_partitions(
    const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("compare_partitions: size mismatch");
  PartitionComparison cmp;
  cmp.exact_match =
      detail::canonical_labels(a) == detail::canonical_labels(b);
  const std::size_t n = a.size();
  if (n < 2) {
    cmp.pair_accuracy = 1.0;
    return cmp;
  }
  std::size_t agree = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      ++total;
      agree += (a[i] == a[j]) == (b[i] == b[j]);
    }
  cmp.pair_accuracy = static_cast<double>(agree) / total;
  return cmp;
}

inline PartitionComparison compare_partitions(const ClusteringResult& result,
                                              const GroundTruth& truth) {
  return compare_partitions(result.assignment, truth.labels);
}

}  // namespace pwclust
