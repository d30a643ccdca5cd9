#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lifexp/matrix.hpp"

namespace lifexp {

enum class ScalerKind { Standard, MinMax, MaxAbs };

std::string to_string(ScalerKind kind);
ScalerKind scaler_kind_from_string(const std::string& name);

/// Per-column affine transform x ↦ (x − offset) / scale. Columns with zero
/// spread get scale 0 and map to 0.
struct Scaler {
  ScalerKind kind = ScalerKind::Standard;
  Vector offset;
  Vector scale;
};

Scaler fit_scaler(ScalerKind kind, const Matrix& x);
Matrix transform(const Scaler& scaler, const Matrix& x);

enum class ClusterAlgorithm { KMeans, Agglomerative };
std::string to_string(ClusterAlgorithm algorithm);

struct ClusterResult {
  std::vector<std::size_t> labels;
  std::size_t k = 0;
  Matrix centroids;      // k-means only
  double inertia = 0.0;  // k-means only
  double silhouette = 0.0;
  /// Inertia after every Lloyd iteration of the winning restart (k-means only).
  Vector inertia_history;
};

struct KMeansOptions {
  std::uint64_t seed = 42;
  std::size_t max_iter = 300;
  std::size_t n_init = 10;
};

/// Lloyd iterations from k-means++ seeding; keeps the restart with the
/// lowest inertia. The silhouette field is left at 0; score separately.
ClusterResult kmeans(const Matrix& x, std::size_t k, const KMeansOptions& options = {});

/// Full Ward-linkage merge history on squared Euclidean distances.
/// merges[i] = (a, b) joins the clusters currently represented by points
/// a < b; the merged cluster is represented by a.
struct Dendrogram {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> merges;
  Vector heights;

  /// Labels after cutting at k clusters, numbered by first appearance.
  std::vector<std::size_t> cut(std::size_t k) const;
};

Dendrogram ward_dendrogram(const Matrix& x);
std::vector<std::size_t> agglomerative(const Matrix& x, std::size_t k);

/// Mean silhouette; 0 for a single-cluster labeling, singleton points
/// contribute 0.
double silhouette(const Matrix& x, const std::vector<std::size_t>& labels);

/// Silhouette from precomputed pairwise Euclidean distances (n × n).
double silhouette_from_distances(const Matrix& distances, const std::vector<std::size_t>& labels);

/// Pairwise Euclidean distance matrix.
Matrix pairwise_distances(const Matrix& x);

struct ClusterConfigRecord {
  ScalerKind scaler = ScalerKind::Standard;
  ClusterAlgorithm algorithm = ClusterAlgorithm::KMeans;
  std::size_t k = 0;
  double silhouette = 0.0;
};

struct ClusterSelectionReport {
  std::vector<ClusterConfigRecord> records;  // scaler-major, then algorithm, then k
  ClusterConfigRecord winner;
  /// (k, silhouette) for the winning scaler and algorithm.
  std::vector<std::pair<std::size_t, double>> silhouette_curve;
  std::vector<std::size_t> winner_labels;
};

struct ClusterSelectionOptions {
  std::size_t k_min = 1;
  std::size_t k_max = 50;
  std::uint64_t seed = 42;
  std::vector<ScalerKind> scalers{ScalerKind::Standard, ScalerKind::MinMax, ScalerKind::MaxAbs};
  std::vector<ClusterAlgorithm> algorithms{ClusterAlgorithm::KMeans,
                                           ClusterAlgorithm::Agglomerative};
  KMeansOptions kmeans{};
  std::size_t threads = 0;  // 0: hardware concurrency
};

/// Scores every scaler × algorithm × k configuration and keeps the best
/// silhouette. Ties prefer smaller k, then scaler order, then k-means.
ClusterSelectionReport select_clustering(const Matrix& x_raw,
                                         const ClusterSelectionOptions& options);

struct PcaModel {
  Vector column_means;
  Matrix components;           // p × m, orthonormal columns
  Vector explained_variance;   // length m, non-increasing
  double total_variance = 0.0;
};

/// Top-m principal axes of the sample covariance (n − 1 divisor). Each
/// component's largest-magnitude entry is made positive.
PcaModel pca_fit(const Matrix& x, std::size_t m);
Matrix pca_transform(const PcaModel& model, const Matrix& x);

}  // namespace lifexp
