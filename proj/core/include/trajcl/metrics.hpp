// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajcl/predictor.hpp"
#include "trajcl/types.hpp"

namespace trajcl {

/// W candidate endpoints, meters, in the frame of the heatmap they came from.
struct PredictionSet {
  std::vector<Vec2> endpoints;
};

inline constexpr std::size_t kDefaultEndpointCount = 6;

/// Cells that are strict maxima of their (border-clipped) 3x3 neighborhood,
/// by descending probability with (row, col) tie order; the top W become
/// cell centers. When fewer than W local maxima exist the remaining slots
/// take the most probable unselected cells.
PredictionSet extract_endpoints(const Heatmap& heatmap, std::size_t w);

/// min_k ||Y_k - Y||. Throws on an empty prediction set.
double fde_sample(const PredictionSet& pred, const GroundTruth& truth);

/// Longitudinal miss threshold (m) as a function of TV speed (m/s).
double mr_threshold(double v);

/// Lateral miss threshold (m).
inline constexpr double kLateralMissThreshold = 1.0;

struct MissCase {
  PredictionSet pred;
  GroundTruth truth;
  Vec2 heading;  // TV velocity direction at t_c
};

/// Percentage of all predicted endpoints (N cases x W each) that fall
/// outside the heading-aligned box around the truth.
double mr_task(std::span<const MissCase> cases);

/// Mean of R(c, i) - R(i, i) over i < c.
double bwt(const ResultMatrix& matrix, std::size_t c);

/// Arithmetic mean; throws on empty input.
double averages(std::span<const double> per_task);

struct TaskScore {
  double fde = 0.0;
  double mr = 0.0;  // percent
};

/// FDE_T and MR_T of `params` on one task's test samples.
TaskScore evaluate_task(const HeatmapPredictor& model, const ParamVector& params, std::span<const Sample> test,
                        std::size_t w = kDefaultEndpointCount);

struct EvalReport {
  ResultMatrix fde;
  ResultMatrix mr;
  std::vector<double> fde_per_task;  // final row
  std::vector<double> mr_per_task;
  double fde_avg = 0.0;
  double mr_avg = 0.0;
  std::optional<double> fde_bwt;  // undefined for single-task runs or jointly trained models
  std::optional<double> mr_bwt;
};

/// Averages over the final row; BWT at c = N when the diagonal is complete.
EvalReport make_report(ResultMatrix fde, ResultMatrix mr);

/// Flat CSV: after_task,tested_task,fde,mr (one row per defined cell).
std::string report_to_csv(const EvalReport& report);
EvalReport report_from_csv(const std::string& csv);

}  // namespace trajcl
