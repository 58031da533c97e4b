#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pwclust {

/// A finite real-valued sample. One TimeSeries is one data point of the
/// clustering problem. The distance machinery assumes values in [0,1);
/// ingestion applies a shared affine rescale to get there (see io.hpp).
struct TimeSeries {
  std::string id;
  std::vector<double> values;

  TimeSeries() = default;
  TimeSeries(std::string series_id, std::vector<double> series_values)
      : id(std::move(series_id)), values(std::move(series_values)) {
    if (values.empty())
      throw std::invalid_argument("TimeSeries '" + id + "': sample is empty");
    for (double v : values)
      if (!std::isfinite(v))
        throw std::invalid_argument("TimeSeries '" + id +
                                    "': non-finite value");
  }

  std::size_t size() const { return values.size(); }

  std::span<const double> view() const { return values; }

  /// View of positions [first, last], 1-based inclusive.
  std::span<const double> view(std::size_t first, std::size_t last) const {
    if (first < 1 || last < first || last > values.size())
      throw std::out_of_range("TimeSeries '" + id + "': bad range");
    return std::span<const double>(values).subspan(first - 1,
                                                   last - first + 1);
  }
};

}  // namespace pwclust
