// SPDX-License-Identifier: Apache-2.0
#include "trajcl/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "trajcl/error.hpp"
#include "trajcl/grid.hpp"

namespace trajcl {

PredictionSet extract_endpoints(const Heatmap& heatmap, std::size_t w) {
  if (w == 0) throw Error("extract_endpoints needs W >= 1");
  const GridSpec& g = heatmap.spec();
  const std::vector<double> p = heatmap.probabilities();
  const auto rows = static_cast<std::ptrdiff_t>(g.rows_h);
  const auto cols = static_cast<std::ptrdiff_t>(g.cols_w);

  std::vector<std::size_t> maxima;
  std::vector<std::size_t> rest;
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    for (std::ptrdiff_t c = 0; c < cols; ++c) {
      const double v = p[static_cast<std::size_t>(r * cols + c)];
      bool strict = true;
      for (std::ptrdiff_t dr = -1; dr <= 1 && strict; ++dr) {
        for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
          const std::ptrdiff_t rr = r + dr;
          const std::ptrdiff_t cc = c + dc;
          if ((dr == 0 && dc == 0) || rr < 0 || cc < 0 || rr >= rows || cc >= cols) continue;
          if (p[static_cast<std::size_t>(rr * cols + cc)] >= v) {
            strict = false;
            break;
          }
        }
      }
      (strict ? maxima : rest).push_back(static_cast<std::size_t>(r * cols + c));
    }
  }

  // Row-major index order equals (row, col) lexicographic order.
  auto by_probability = [&](std::size_t a, std::size_t b) { return p[a] > p[b] || (p[a] == p[b] && a < b); };
  std::sort(maxima.begin(), maxima.end(), by_probability);
  if (maxima.size() < w) {
    const std::size_t need = std::min(w - maxima.size(), rest.size());
    std::partial_sort(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(need), rest.end(), by_probability);
    maxima.insert(maxima.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(need));
  }

  PredictionSet out;
  const std::size_t take = std::min(w, maxima.size());
  out.endpoints.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.endpoints.push_back(cell_to_center(g.cell_at(maxima[i]), g));
  return out;
}

double fde_sample(const PredictionSet& pred, const GroundTruth& truth) {
  if (pred.endpoints.empty()) throw Error("fde_sample needs at least one predicted endpoint");
  double best = std::numeric_limits<double>::infinity();
  for (Vec2 e : pred.endpoints) best = std::min(best, (e - truth.endpoint).norm());
  return best;
}

double mr_threshold(double v) {
  if (!(v >= 0.0)) throw Error("mr_threshold needs a non-negative speed");
  if (v < 1.4) return 1.0;
  if (v > 11.0) return 2.0;
  return 1.0 + (v - 1.4) / (11.0 - 1.4);
}

double mr_task(std::span<const MissCase> cases) {
  std::size_t misses = 0;
  std::size_t total = 0;
  for (const MissCase& mc : cases) {
    const double hn = mc.heading.norm();
    if (hn == 0.0 || !std::isfinite(hn)) throw Error("mr_task needs a non-zero heading");
    const Vec2 h = (1.0 / hn) * mc.heading;
    const double lon_th = mr_threshold(mc.truth.speed_v);
    for (Vec2 e : mc.pred.endpoints) {
      const Vec2 d = e - mc.truth.endpoint;
      const double lon = d.dot(h);
      const double lat = h.x * d.y - h.y * d.x;
      if (std::abs(lat) > kLateralMissThreshold || std::abs(lon) > lon_th) ++misses;
      ++total;
    }
  }
  if (total == 0) return 0.0;
  return 100.0 * static_cast<double>(misses) / static_cast<double>(total);
}

double bwt(const ResultMatrix& matrix, std::size_t c) {
  if (c < 2) throw Error("BWT needs c >= 2");
  if (c > matrix.n_tasks()) throw Error("BWT index beyond the number of tasks");
  double sum = 0.0;
  for (std::size_t i = 1; i < c; ++i) sum += matrix.at(c, i) - matrix.at(i, i);
  return sum / static_cast<double>(c - 1);
}

double averages(std::span<const double> per_task) {
  if (per_task.empty()) throw Error("averages needs at least one task");
  double sum = 0.0;
  for (double v : per_task) sum += v;
  return sum / static_cast<double>(per_task.size());
}

TaskScore evaluate_task(const HeatmapPredictor& model, const ParamVector& params, std::span<const Sample> test,
                        std::size_t w) {
  if (test.empty()) throw Error("evaluate_task needs test samples");
  std::vector<MissCase> cases;
  cases.reserve(test.size());
  double fde_sum = 0.0;
  for (const Sample& s : test) {
    const TargetFrame frame = TargetFrame::of(s.scene());
    PredictionSet local = extract_endpoints(model.forward(params, s.scene()), w);
    for (Vec2& e : local.endpoints) e = frame.to_world(e);
    fde_sum += fde_sample(local, s.truth());
    cases.push_back({std::move(local), s.truth(), frame.heading});
  }
  return {fde_sum / static_cast<double>(test.size()), mr_task(cases)};
}

EvalReport make_report(ResultMatrix fde, ResultMatrix mr) {
  const std::size_t n = fde.n_tasks();
  if (n == 0 || mr.n_tasks() != n) throw Error("report needs matching non-empty result matrices");
  EvalReport report;
  for (std::size_t j = 1; j <= n; ++j) {
    report.fde_per_task.push_back(fde.at(n, j));
    report.mr_per_task.push_back(mr.at(n, j));
  }
  report.fde_avg = averages(report.fde_per_task);
  report.mr_avg = averages(report.mr_per_task);
  bool diagonal = n >= 2;
  for (std::size_t i = 1; i < n && diagonal; ++i) diagonal = fde.has(i, i) && mr.has(i, i);
  if (diagonal) {
    report.fde_bwt = bwt(fde, n);
    report.mr_bwt = bwt(mr, n);
  }
  report.fde = std::move(fde);
  report.mr = std::move(mr);
  return report;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "after_task,tested_task,fde,mr\n";
  const std::size_t n = report.fde.n_tasks();
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= i; ++j) {
      if (!report.fde.has(i, j)) continue;
      out << i << ',' << j << ',' << format_double(report.fde.at(i, j)) << ','
          << format_double(report.mr.at(i, j)) << '\n';
    }
  }
  return out.str();
}

EvalReport report_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::size_t line_no = 0;
  struct Row {
    std::size_t i, j;
    double fde, mr;
  };
  std::vector<Row> rows;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "after_task,tested_task,fde,mr") throw ParseError("unexpected result matrix header", 1);
      continue;
    }
    if (line.empty()) continue;
    Row row{};
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream fields(line);
    if (!(fields >> row.i >> c1 >> row.j >> c2 >> row.fde >> c3 >> row.mr) || c1 != ',' || c2 != ',' || c3 != ',') {
      throw ParseError("malformed result matrix row", line_no);
    }
    n = std::max(n, row.i);
    rows.push_back(row);
  }
  if (n == 0) throw ParseError("result matrix CSV has no rows", line_no);
  ResultMatrix fde(n);
  ResultMatrix mr(n);
  for (const Row& r : rows) {
    fde.set(r.i, r.j, r.fde);
    mr.set(r.i, r.j, r.mr);
  }
  return make_report(std::move(fde), std::move(mr));
}

}  // namespace trajcl
