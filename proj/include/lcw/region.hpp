#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcw/metric.hpp"

namespace lcw {

// A rectangular sample region: a regular grid plus a deterministic batch of
// quasi-random interior points (Halton, offset by the seed).
struct RegionSpec {
  struct Interval {
    double lo = 0.0, hi = 1.0;
  };
  std::vector<Interval> intervals;
  int samples_per_axis = 5;
  int extra_samples = 50;
  std::uint64_t seed = 12345;

  int dim() const { return static_cast<int>(intervals.size()); }

  int grid_count() const {
    int n = 1;
    for (int d = 0; d < dim(); ++d) n *= samples_per_axis;
    return n;
  }

  std::vector<int> grid_multi_index(int flat) const {
    std::vector<int> idx(dim());
    for (int d = dim() - 1; d >= 0; --d) {
      idx[d] = flat % samples_per_axis;
      flat /= samples_per_axis;
    }
    return idx;
  }

  std::vector<double> grid_point(const std::vector<int>& idx) const {
    std::vector<double> p(dim());
    for (int d = 0; d < dim(); ++d) {
      double f = samples_per_axis == 1 ? 0.5
                                       : static_cast<double>(idx[d]) / (samples_per_axis - 1);
      p[d] = intervals[d].lo + f * (intervals[d].hi - intervals[d].lo);
    }
    return p;
  }

  std::vector<double> center() const {
    std::vector<double> p(dim());
    for (int d = 0; d < dim(); ++d) p[d] = 0.5 * (intervals[d].lo + intervals[d].hi);
    return p;
  }

  static double halton(std::uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
      f /= base;
      r += f * (index % base);
      index /= base;
    }
    return r;
  }

  // Grid points first (row-major), then the Halton batch.
  std::vector<std::vector<double>> sample_points() const {
    static const int bases[4] = {2, 3, 5, 7};
    std::vector<std::vector<double>> pts;
    int n = grid_count();
    pts.reserve(n + extra_samples);
    for (int i = 0; i < n; ++i) pts.push_back(grid_point(grid_multi_index(i)));
    for (int k = 0; k < extra_samples; ++k) {
      std::vector<double> p(dim());
      for (int d = 0; d < dim(); ++d) {
        double f = halton(seed + 17 + k, bases[d]);
        p[d] = intervals[d].lo + f * (intervals[d].hi - intervals[d].lo);
      }
      pts.push_back(p);
    }
    return pts;
  }

  // Pairs of adjacent grid nodes (for sign propagation over the grid graph).
  std::vector<std::pair<int, int>> grid_edges() const {
    std::vector<std::pair<int, int>> edges;
    int n = grid_count();
    for (int i = 0; i < n; ++i) {
      auto idx = grid_multi_index(i);
      int stride = 1;
      for (int d = dim() - 1; d >= 0; --d) {
        if (idx[d] + 1 < samples_per_axis) edges.push_back({i, i + stride});
        stride *= samples_per_axis;
      }
    }
    return edges;
  }
};

// Builds a region from a CLI string like "x:1:3,y:0:1". Unspecified variables
// get a unit interval offset away from declared singular loci: a unit box at
// [b+1, b+2] for a 'var > b' constraint, [b-2, b-1] for 'var < b', [0, 1]
// otherwise.
inline RegionSpec region_from_string(const std::string& text, const MetricSpec& m) {
  RegionSpec r;
  r.intervals.resize(m.dim);
  std::vector<bool> given(m.dim, false);
  for (int d = 0; d < m.dim; ++d) {
    r.intervals[d] = {0.0, 1.0};
    for (const auto& c : m.domain) {
      if (c.var != d) continue;
      if (c.greater)
        r.intervals[d] = {c.bound + 1.0, c.bound + 2.0};
      else
        r.intervals[d] = {c.bound - 2.0, c.bound - 1.0};
    }
  }
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto comma = text.find(',', pos);
    std::string part = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    pos = comma == std::string::npos ? text.size() : comma + 1;
    if (part.empty()) continue;
    auto c1 = part.find(':');
    auto c2 = c1 == std::string::npos ? std::string::npos : part.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::invalid_argument("region syntax: '<var>:<lo>:<hi>[,...]', got '" + part + "'");
    std::string name = part.substr(0, c1);
    int vi = -1;
    for (int d = 0; d < m.dim; ++d)
      if (m.var_names[d] == name) vi = d;
    if (vi < 0) throw std::invalid_argument("unknown region variable '" + name + "'");
    double lo = std::stod(part.substr(c1 + 1, c2 - c1 - 1));
    double hi = std::stod(part.substr(c2 + 1));
    if (!(lo <= hi)) throw std::invalid_argument("empty region interval for '" + name + "'");
    r.intervals[vi] = {lo, hi};
    given[vi] = true;
  }
  for (int d = 0; d < m.dim; ++d) {
    for (const auto& c : m.domain) {
      if (c.var != d || !given[d]) continue;
      bool ok_lo = c.greater ? r.intervals[d].lo > c.bound : r.intervals[d].lo < c.bound;
      bool ok_hi = c.greater ? r.intervals[d].hi > c.bound : r.intervals[d].hi < c.bound;
      if (!ok_lo || !ok_hi)
        throw std::invalid_argument("region for '" + m.var_names[d] +
                                    "' violates the metric's domain constraint");
    }
  }
  return r;
}

}  // namespace lcw
