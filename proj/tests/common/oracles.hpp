// SPDX-License-Identifier: Apache-2.0
// Brute-force reference implementations used by the unit and acceptance
// tests. Written from the metric definitions, sharing no code with core.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <tuple>
#include <vector>

namespace oracle {

struct Pt {
  double x = 0.0;
  double y = 0.0;
};

// Top-W endpoints from raw logits on a rows x cols grid with the given
// origin corner and cell size. Probabilities are monotone in the logits, so
// comparisons use the logits directly.
inline std::vector<Pt> endpoints(const std::vector<double>& logits, int rows, int cols, Pt origin, double cell,
                                 std::size_t w) {
  static constexpr std::array<std::pair<int, int>, 8> kNeighbors{
      {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};
  using Key = std::tuple<double, int, int>;  // (-logit, row, col)
  std::vector<Key> peaks, others;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = logits[static_cast<std::size_t>(r * cols + c)];
      bool peak = true;
      for (auto [dr, dc] : kNeighbors) {
        const int rr = r + dr, cc = c + dc;
        if (rr < 0 || cc < 0 || rr >= rows || cc >= cols) continue;
        if (!(logits[static_cast<std::size_t>(rr * cols + cc)] < v)) peak = false;
      }
      (peak ? peaks : others).emplace_back(-v, r, c);
    }
  }
  std::sort(peaks.begin(), peaks.end());
  std::sort(others.begin(), others.end());
  std::vector<Key> chosen(peaks.begin(), peaks.begin() + static_cast<std::ptrdiff_t>(std::min(w, peaks.size())));
  for (std::size_t k = 0; chosen.size() < w && k < others.size(); ++k) chosen.push_back(others[k]);
  std::vector<Pt> out;
  for (const auto& [neg, r, c] : chosen) out.push_back({origin.x + (c + 0.5) * cell, origin.y + (r + 0.5) * cell});
  return out;
}

inline double fde(const std::vector<Pt>& pred, Pt truth) {
  double best = std::numeric_limits<double>::infinity();
  for (const Pt& p : pred) best = std::min(best, std::hypot(p.x - truth.x, p.y - truth.y));
  return best;
}

inline double threshold(double v) {
  if (v < 1.4) return 1.0;
  if (v <= 11.0) return 1.0 + (v - 1.4) / 9.6;
  return 2.0;
}

struct MissInput {
  std::vector<Pt> pred;
  Pt truth;
  double speed = 0.0;
  double heading_angle = 0.0;  // radians
};

// Percent of all predicted endpoints outside the heading-aligned box.
inline double miss_rate(const std::vector<MissInput>& cases) {
  double misses = 0.0, total = 0.0;
  for (const MissInput& m : cases) {
    const double c = std::cos(m.heading_angle), s = std::sin(m.heading_angle);
    for (const Pt& p : m.pred) {
      const double dx = p.x - m.truth.x, dy = p.y - m.truth.y;
      const double lon = dx * c + dy * s;
      const double lat = -dx * s + dy * c;
      const bool hit = std::abs(lon) <= threshold(m.speed) && std::abs(lat) <= 1.0;
      misses += hit ? 0.0 : 1.0;
      total += 1.0;
    }
  }
  return total == 0.0 ? 0.0 : 100.0 * misses / total;
}

// r[i][j], 0-based, lower triangle filled.
inline double bwt(const std::vector<std::vector<double>>& r, std::size_t c) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < c; ++i) s += r[c - 1][i] - r[i][i];
  return s / static_cast<double>(c - 1);
}

}  // namespace oracle
