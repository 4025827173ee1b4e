#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "funfuse/basis.hpp"

namespace funfuse {

/// One functional observation: values y sampled at strictly increasing
/// timepoints. Curves in a dataset may have different lengths and grids.
struct Curve {
  std::string id;
  std::vector<double> timepoints;
  std::vector<double> values;

  /// Throws std::invalid_argument on length mismatch, non-finite
  /// entries, or non-increasing timepoints.
  void validate() const;
};

struct Dataset {
  Interval domain;
  std::vector<Curve> curves;
  std::optional<std::vector<int>> true_labels;  // 1-based cluster indices

  int n_curves() const { return static_cast<int>(curves.size()); }
  long total_points() const;

  /// Checks curve invariants, containment in the domain, and label shape.
  void validate() const;
};

/// Domain intervals attached to an unordered cluster pair (g1 < g2,
/// 1-based). Used both for ground-truth noninformative regions and for
/// fitted fused regions.
struct PairIntervals {
  int g1 = 1;
  int g2 = 2;
  std::vector<Interval> intervals;

  double total_measure() const;
};

/// Simulation ground truth: generating labels, generating coefficient
/// means, and the per-pair noninformative portions of domain.
struct GroundTruth {
  Eigen::MatrixXd true_mean_coefficients;  // G_true x q
  std::vector<int> true_labels;            // 1-based, length N
  std::vector<PairIntervals> noninformative_intervals;
};

/// Reads the long-CSV format: header `curve_id,t,y` with an optional
/// trailing `label` column, one row per sampled point. Rows are grouped
/// by curve_id and sorted by t; curves are ordered by id. The domain is
/// inferred as [min t, max t] unless given. Duplicate (curve_id, t)
/// pairs, non-numeric fields, and empty files are rejected with
/// std::runtime_error.
Dataset read_dataset(std::istream& in,
                     std::optional<Interval> domain = std::nullopt);
Dataset read_dataset_file(const std::string& path,
                          std::optional<Interval> domain = std::nullopt);

/// Inverse of read_dataset. Rows are ordered by curve_id then t, values
/// are emitted with 17 significant digits so a read round-trip is exact,
/// and the label column appears only when true_labels is present.
void write_dataset(const Dataset& dataset, std::ostream& out);
void write_dataset_file(const Dataset& dataset, const std::string& path);

/// Affine time-axis change mapping `from` onto `to`; timepoint rescaling
/// is never applied implicitly because penalty magnitudes depend on the
/// domain length.
Dataset rescale_time(const Dataset& dataset, Interval from, Interval to);

}  // namespace funfuse
