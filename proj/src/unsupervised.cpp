#include "lifexp/unsupervised.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "lifexp/errors.hpp"
#include "lifexp/linalg.hpp"
#include "lifexp/parallel.hpp"
#include "lifexp/rng.hpp"

namespace lifexp {

std::string to_string(ScalerKind kind) {
  switch (kind) {
    case ScalerKind::Standard:
      return "standard";
    case ScalerKind::MinMax:
      return "minmax";
    case ScalerKind::MaxAbs:
      return "maxabs";
  }
  return {};
}

ScalerKind scaler_kind_from_string(const std::string& name) {
  if (name == "standard") return ScalerKind::Standard;
  if (name == "minmax") return ScalerKind::MinMax;
  if (name == "maxabs") return ScalerKind::MaxAbs;
  throw ConfigError("unknown scaler '" + name + "'");
}

std::string to_string(ClusterAlgorithm algorithm) {
  return algorithm == ClusterAlgorithm::KMeans ? "kmeans" : "agglomerative";
}

Scaler fit_scaler(ScalerKind kind, const Matrix& x) {
  if (x.empty()) throw ContractError("fit_scaler: empty matrix");
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  Scaler s{kind, Vector(p, 0.0), Vector(p, 0.0)};
  for (std::size_t j = 0; j < p; ++j) {
    const Vector col = x.column(j);
    switch (kind) {
      case ScalerKind::Standard: {
        const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
        double ss = 0.0;
        for (double v : col) ss += (v - mean) * (v - mean);
        s.offset[j] = mean;
        s.scale[j] = std::sqrt(ss / static_cast<double>(n));
        break;
      }
      case ScalerKind::MinMax: {
        const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        s.offset[j] = *lo;
        s.scale[j] = *hi - *lo;
        break;
      }
      case ScalerKind::MaxAbs: {
        double m = 0.0;
        for (double v : col) m = std::max(m, std::abs(v));
        s.scale[j] = m;
        break;
      }
    }
  }
  return s;
}

Matrix transform(const Scaler& scaler, const Matrix& x) {
  if (x.cols() != scaler.scale.size())
    throw ShapeError("scaler fitted on " + std::to_string(scaler.scale.size()) +
                     " columns, got " + std::to_string(x.cols()));
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j)
      out(r, j) = scaler.scale[j] == 0.0 ? 0.0 : (x(r, j) - scaler.offset[j]) / scaler.scale[j];
  return out;
}

namespace {

std::size_t nearest_centroid(std::span<const double> point, const Matrix& centroids,
                             double& best_dist) {
  std::size_t best = 0;
  best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(point, centroids.row(c));
    if (d < best_dist) {
      best_dist = d;
      best = c;
    }
  }
  return best;
}

Matrix kmeans_plus_plus(const Matrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  Matrix centroids(k, x.cols());
  const auto first = static_cast<std::size_t>(rng.below(n));
  std::copy(x.row(first).begin(), x.row(first).end(), centroids.row(0).begin());
  Vector closest(n);
  for (std::size_t i = 0; i < n; ++i) closest[i] = squared_distance(x.row(i), centroids.row(0));

  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(closest.begin(), closest.end(), 0.0);
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cumulative = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cumulative += closest[i];
        if (cumulative > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(n));
    }
    std::copy(x.row(pick).begin(), x.row(pick).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i)
      closest[i] = std::min(closest[i], squared_distance(x.row(i), centroids.row(c)));
  }
  return centroids;
}

ClusterResult lloyd(const Matrix& x, Matrix centroids, std::size_t max_iter) {
  const std::size_t n = x.rows();
  const std::size_t k = centroids.rows();
  const std::size_t p = x.cols();
  std::vector<std::size_t> labels(n, k);  // k = unassigned
  Vector dist(n);
  Vector history;
  double inertia = 0.0;

  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = nearest_centroid(x.row(i), centroids, dist[i]);
      if (c != labels[i]) changed = true;
      labels[i] = c;
    }

    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t l : labels) ++sizes[l];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      // Seize the point farthest from its centroid among clusters that can
      // spare one.
      std::size_t far = n;
      double far_dist = -1.0;
      for (std::size_t i = 0; i < n; ++i)
        if (sizes[labels[i]] > 1 && dist[i] > far_dist) {
          far_dist = dist[i];
          far = i;
        }
      if (far == n) break;
      --sizes[labels[far]];
      labels[far] = c;
      sizes[c] = 1;
      dist[far] = 0.0;
      std::copy(x.row(far).begin(), x.row(far).end(), centroids.row(c).begin());
      changed = true;
    }

    Matrix updated(k, p);
    for (std::size_t i = 0; i < n; ++i) {
      auto dst = updated.row(labels[i]);
      const auto src = x.row(i);
      for (std::size_t j = 0; j < p; ++j) dst[j] += src[j];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      auto row = updated.row(c);
      if (sizes[c] == 0) {
        std::copy(centroids.row(c).begin(), centroids.row(c).end(), row.begin());
        continue;
      }
      for (double& v : row) v /= static_cast<double>(sizes[c]);
      shift = std::max(shift, std::sqrt(squared_distance(row, centroids.row(c))));
    }
    centroids = std::move(updated);

    inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) inertia += squared_distance(x.row(i), centroids.row(labels[i]));
    history.push_back(inertia);

    if (!changed || shift < 1e-6) break;
  }

  ClusterResult r;
  r.labels = std::move(labels);
  r.k = k;
  r.centroids = std::move(centroids);
  r.inertia = inertia;
  r.inertia_history = std::move(history);
  return r;
}

}  // namespace

ClusterResult kmeans(const Matrix& x, std::size_t k, const KMeansOptions& options) {
  if (k == 0 || k > x.rows())
    throw ContractError("kmeans: k must lie in [1, n]; k = " + std::to_string(k) +
                        ", n = " + std::to_string(x.rows()));
  if (options.n_init == 0 || options.max_iter == 0)
    throw ContractError("kmeans: n_init and max_iter must be positive");
  ClusterResult best;
  bool have_best = false;
  for (std::size_t restart = 0; restart < options.n_init; ++restart) {
    Rng rng(derive_seed(options.seed, restart));
    ClusterResult r = lloyd(x, kmeans_plus_plus(x, k, rng), options.max_iter);
    if (!have_best || r.inertia < best.inertia) {
      best = std::move(r);
      have_best = true;
    }
  }
  return best;
}

std::vector<std::size_t> Dendrogram::cut(std::size_t k) const {
  if (k == 0 || k > n) throw ContractError("dendrogram cut: k must lie in [1, n]");
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t m = 0; m < n - k; ++m) parent[find(merges[m].second)] = find(merges[m].first);

  std::vector<std::size_t> labels(n);
  std::map<std::size_t, std::size_t> numbering;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [it, inserted] = numbering.emplace(find(i), numbering.size());
    labels[i] = it->second;
  }
  return labels;
}

Dendrogram ward_dendrogram(const Matrix& x) {
  const std::size_t n = x.rows();
  Dendrogram dendro;
  dendro.n = n;
  if (n < 2) return dendro;

  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d(i, j) = d(j, i) = squared_distance(x.row(i), x.row(j));

  std::vector<double> size(n, 1.0);
  std::vector<bool> active(n, true);
  std::vector<std::size_t> nn(n, n);
  Vector nn_dist(n, std::numeric_limits<double>::infinity());

  // Nearest active neighbour with a larger index; ties go to the smaller index.
  auto refresh = [&](std::size_t i) {
    nn[i] = n;
    nn_dist[i] = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < n; ++j)
      if (active[j] && d(i, j) < nn_dist[i]) {
        nn_dist[i] = d(i, j);
        nn[i] = j;
      }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      if (active[i] && nn[i] < n && nn_dist[i] < best) {
        best = nn_dist[i];
        a = i;
      }
    const std::size_t b = nn[a];
    dendro.merges.emplace_back(a, b);
    dendro.heights.push_back(std::sqrt(best));

    // Lance-Williams update for Ward on squared distances.
    const double dab = d(a, b);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a || k == b) continue;
      const double t = size[k] + size[a] + size[b];
      const double v = ((size[k] + size[a]) * d(k, a) + (size[k] + size[b]) * d(k, b) -
                        size[k] * dab) / t;
      d(k, a) = d(a, k) = v;
    }
    size[a] += size[b];
    active[b] = false;

    refresh(a);
    for (std::size_t k = 0; k < b; ++k) {
      if (!active[k] || k == a) continue;
      if (nn[k] == a || nn[k] == b) {
        refresh(k);
      } else if (k < a && (d(k, a) < nn_dist[k] || (d(k, a) == nn_dist[k] && a < nn[k]))) {
        nn[k] = a;
        nn_dist[k] = d(k, a);
      }
    }
  }
  return dendro;
}

std::vector<std::size_t> agglomerative(const Matrix& x, std::size_t k) {
  if (k == 0 || k > x.rows())
    throw ContractError("agglomerative: k must lie in [1, n]; k = " + std::to_string(k));
  return ward_dendrogram(x).cut(k);
}

Matrix pairwise_distances(const Matrix& x) {
  const std::size_t n = x.rows();
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      d(i, j) = d(j, i) = std::sqrt(squared_distance(x.row(i), x.row(j)));
  return d;
}

double silhouette_from_distances(const Matrix& distances, const std::vector<std::size_t>& labels) {
  const std::size_t n = labels.size();
  if (distances.rows() != n || distances.cols() != n)
    throw ShapeError("silhouette: distance matrix does not match label count");
  if (n < 2) throw ContractError("silhouette: need at least two points");

  std::map<std::size_t, std::size_t> compact;
  for (std::size_t l : labels) compact.emplace(l, compact.size());
  const std::size_t k = compact.size();
  if (k < 2) return 0.0;
  std::vector<std::size_t> lab(n);
  std::vector<double> sizes(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    lab[i] = compact[labels[i]];
    sizes[lab[i]] += 1.0;
  }

  double total = 0.0;
  Vector sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    const auto row = distances.row(i);
    for (std::size_t j = 0; j < n; ++j) sums[lab[j]] += row[j];
    const std::size_t own = lab[i];
    if (sizes[own] <= 1.0) continue;  // singleton contributes 0
    const double a = sums[own] / (sizes[own] - 1.0);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != own) b = std::min(b, sums[c] / sizes[c]);
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

double silhouette(const Matrix& x, const std::vector<std::size_t>& labels) {
  if (labels.size() != x.rows()) throw ShapeError("silhouette: label count differs from rows");
  return silhouette_from_distances(pairwise_distances(x), labels);
}

ClusterSelectionReport select_clustering(const Matrix& x_raw,
                                         const ClusterSelectionOptions& options) {
  const std::size_t n = x_raw.rows();
  if (options.k_min == 0 || options.k_min > options.k_max)
    throw ContractError("select_clustering: invalid k range");
  if (options.k_max > n)
    throw ContractError("select_clustering: k_max " + std::to_string(options.k_max) +
                        " exceeds sample count " + std::to_string(n));
  if (options.scalers.empty() || options.algorithms.empty())
    throw ContractError("select_clustering: empty scaler or algorithm list");

  struct Prepared {
    Matrix scaled;
    Matrix distances;
    Dendrogram dendrogram;
  };
  const bool need_ward = std::find(options.algorithms.begin(), options.algorithms.end(),
                                   ClusterAlgorithm::Agglomerative) != options.algorithms.end();
  std::vector<Prepared> prepared(options.scalers.size());
  parallel_for(options.scalers.size(), options.threads, [&](std::size_t s) {
    Prepared& p = prepared[s];
    p.scaled = transform(fit_scaler(options.scalers[s], x_raw), x_raw);
    p.distances = pairwise_distances(p.scaled);
    if (need_ward) p.dendrogram = ward_dendrogram(p.scaled);
  });

  const std::size_t n_k = options.k_max - options.k_min + 1;
  const std::size_t n_alg = options.algorithms.size();
  const std::size_t cells = options.scalers.size() * n_alg * n_k;
  std::vector<ClusterConfigRecord> records(cells);
  std::vector<std::vector<std::size_t>> labels(cells);
  parallel_for(cells, options.threads, [&](std::size_t cell) {
    const std::size_t s = cell / (n_alg * n_k);
    const std::size_t a = (cell / n_k) % n_alg;
    const std::size_t k = options.k_min + cell % n_k;
    const Prepared& p = prepared[s];
    std::vector<std::size_t> lab;
    if (options.algorithms[a] == ClusterAlgorithm::KMeans)
      lab = kmeans(p.scaled, k, options.kmeans).labels;
    else
      lab = p.dendrogram.cut(k);
    records[cell] = {options.scalers[s], options.algorithms[a], k,
                     n >= 2 ? silhouette_from_distances(p.distances, lab) : 0.0};
    labels[cell] = std::move(lab);
  });

  // Strictly better silhouette wins; equal scores fall back to
  // (smaller k, earlier scaler, earlier algorithm).
  std::size_t best = 0;
  auto tie_key = [&](std::size_t cell) {
    return std::tuple(options.k_min + cell % n_k, cell / (n_alg * n_k), (cell / n_k) % n_alg);
  };
  for (std::size_t cell = 1; cell < cells; ++cell) {
    if (records[cell].silhouette > records[best].silhouette ||
        (records[cell].silhouette == records[best].silhouette && tie_key(cell) < tie_key(best)))
      best = cell;
  }

  ClusterSelectionReport report;
  report.records = records;
  report.winner = records[best];
  report.winner_labels = labels[best];
  const std::size_t first = best - best % n_k;
  for (std::size_t i = 0; i < n_k; ++i)
    report.silhouette_curve.emplace_back(records[first + i].k, records[first + i].silhouette);
  return report;
}

PcaModel pca_fit(const Matrix& x, std::size_t m) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (n < 2) throw ContractError("pca: need at least two samples");
  if (m > p) throw ContractError("pca: m = " + std::to_string(m) + " exceeds p = " + std::to_string(p));

  PcaModel model;
  model.column_means.assign(p, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < p; ++j) model.column_means[j] += x(r, j);
  for (double& v : model.column_means) v /= static_cast<double>(n);

  Matrix cov(p, p);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < p; ++i) {
      const double di = x(r, i) - model.column_means[i];
      for (std::size_t j = i; j < p; ++j) cov(i, j) += di * (x(r, j) - model.column_means[j]);
    }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) {
      cov(i, j) /= static_cast<double>(n - 1);
      cov(j, i) = cov(i, j);
    }

  const EigenDecomposition eig = eig_symmetric(cov);
  model.components = Matrix(p, m);
  model.explained_variance.resize(m);
  for (std::size_t i = 0; i < p; ++i) model.total_variance += cov(i, i);
  for (std::size_t c = 0; c < m; ++c) {
    model.explained_variance[c] = std::max(0.0, eig.eigenvalues[c]);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < p; ++i)
      if (std::abs(eig.eigenvectors(i, c)) > std::abs(eig.eigenvectors(arg, c))) arg = i;
    const double sign = eig.eigenvectors(arg, c) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < p; ++i) model.components(i, c) = sign * eig.eigenvectors(i, c);
  }
  return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& x) {
  const std::size_t p = model.column_means.size();
  if (x.cols() != p) throw ShapeError("pca_transform: column count differs from fit");
  const std::size_t m = model.components.cols();
  Matrix out(x.rows(), m);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < p; ++i) s += (x(r, i) - model.column_means[i]) * model.components(i, c);
      out(r, c) = s;
    }
  return out;
}

}  // namespace lifexp
