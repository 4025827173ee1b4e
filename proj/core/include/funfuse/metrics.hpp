#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "funfuse/basis.hpp"
#include "funfuse/dataset.hpp"

namespace funfuse {

/// Hubert-Arabie adjusted Rand index between two partitions given as
/// label vectors (any integer labelling). 1 for identical partitions up
/// to renaming, expected 0 under independent random partitions; returns
/// 1 when the chance-corrected denominator vanishes.
double adjusted_rand(std::span<const int> labels_a,
                     std::span<const int> labels_b);

/// Permutation aligning estimated clusters to true ones: entry g is the
/// 0-based estimated cluster assigned to true cluster g, chosen to
/// minimize the total integrated squared mean difference (exhaustive
/// search, G <= 8).
std::vector<int> align_clusters(const Eigen::MatrixXd& true_coeffs,
                                const Eigen::MatrixXd& est_coeffs,
                                const BSplineBasis& basis);

/// Root mean integrated squared error between cluster mean functions,
///   sqrt( (1/G) sum_g integral (mu_g - mu-hat_g)^2 ),
/// with clusters aligned by the best permutation. Integrals are exact
/// through the basis Gram matrix.
double mean_rmse(const Eigen::MatrixXd& true_coeffs,
                 const Eigen::MatrixXd& est_coeffs,
                 const BSplineBasis& basis);

/// Fraction of the true noninformative domain recovered by the fitted
/// fused regions: per pair, measure(fused intersect true)/measure(true),
/// averaged over pairs weighted by the true measure; pairs with zero
/// true measure are excluded (all zero -> error). `true_to_est` maps
/// true cluster indices (0-based) to estimated ones, as produced by
/// align_clusters; empty means identity.
double noninformative_fraction(const std::vector<PairIntervals>& fused_pairs,
                               const GroundTruth& truth,
                               const std::vector<int>& true_to_est = {});

/// Measure of the intersection of two interval unions (half-open
/// internally so shared endpoints are not double counted).
double intersection_measure(const std::vector<Interval>& a,
                            const std::vector<Interval>& b);

}  // namespace funfuse
