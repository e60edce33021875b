#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "occ/random.hpp"

namespace occ {

enum class LaplacianKind { knn, within_cluster, between_cluster };

/// Symmetric PSD graph Laplacian over the training samples. `param` is k for
/// the kNN kind and the cluster count for the cluster kinds;
/// `cluster_assignments` is empty for the kNN kind.
struct LaplacianMatrix {
    Eigen::MatrixXd matrix;  // N x N
    LaplacianKind kind;
    int param = 0;
    std::vector<int> cluster_assignments;
};

struct ClusterModel {
    Eigen::MatrixXd centroids;     // n_clusters x D
    std::vector<int> assignments;  // N, values in [0, n_clusters)
    std::uint64_t seed = 0;

    int n_clusters() const { return static_cast<int>(centroids.rows()); }
};

/// Laplacian of the symmetrized k-nearest-neighbor graph: A_ij = 1 iff i is
/// among j's k nearest neighbors or vice versa (Euclidean metric, distance
/// ties broken by lower index), L = D - A with D the degree matrix.
inline LaplacianMatrix knn_laplacian(const Eigen::MatrixXd& data, int k) {
    const Eigen::Index n = data.rows();
    if (k < 1 || k > n - 1) throw std::invalid_argument("knn_laplacian: k must lie in [1, N-1]");
    if (!data.allFinite()) throw std::invalid_argument("knn_laplacian: data contains non-finite values");

    const Eigen::VectorXd sq_norms = data.rowwise().squaredNorm();
    Eigen::MatrixXd dist2 = sq_norms.replicate(1, n) + sq_norms.transpose().replicate(n, 1) -
                            2.0 * (data * data.transpose());

    Eigen::MatrixXd adjacency = Eigen::MatrixXd::Zero(n, n);
    std::vector<int> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), 0);
        order.erase(order.begin() + i);
        std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
            const double da = dist2(i, a);
            const double db = dist2(i, b);
            return da < db || (da == db && a < b);
        });
        for (int j = 0; j < k; ++j) {
            adjacency(i, order[static_cast<std::size_t>(j)]) = 1.0;
            adjacency(order[static_cast<std::size_t>(j)], i) = 1.0;
        }
    }

    LaplacianMatrix lap;
    lap.matrix = Eigen::MatrixXd(adjacency.rowwise().sum().asDiagonal()) - adjacency;
    lap.kind = LaplacianKind::knn;
    lap.param = k;
    return lap;
}

namespace detail {

// Re-seats empty clusters with the farthest member of the largest cluster.
inline void repair_empty_clusters(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids,
                                  std::vector<int>& assignments, int n_clusters) {
    std::vector<int> sizes(static_cast<std::size_t>(n_clusters), 0);
    for (int a : assignments) ++sizes[static_cast<std::size_t>(a)];
    for (int c = 0; c < n_clusters; ++c) {
        if (sizes[static_cast<std::size_t>(c)] > 0) continue;
        const int donor = static_cast<int>(
            std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
        int farthest = -1;
        double best = -1.0;
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            if (assignments[static_cast<std::size_t>(i)] != donor) continue;
            const double d = (data.row(i) - centroids.row(donor)).squaredNorm();
            if (d > best) {
                best = d;
                farthest = static_cast<int>(i);
            }
        }
        assignments[static_cast<std::size_t>(farthest)] = c;
        --sizes[static_cast<std::size_t>(donor)];
        ++sizes[static_cast<std::size_t>(c)];
    }
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ style seeding; fully deterministic for a
/// fixed seed. Stops when assignments stabilize or after max_iters rounds.
inline ClusterModel kmeans(const Eigen::MatrixXd& data, int n_clusters, std::uint64_t seed,
                           int max_iters = 100) {
    const Eigen::Index n = data.rows();
    if (n_clusters < 1 || n_clusters > n) {
        throw std::invalid_argument("kmeans: cluster count must lie in [1, N]");
    }
    if (!data.allFinite()) throw std::invalid_argument("kmeans: data contains non-finite values");

    auto rng = seeded_rng(seed, 0x6b6d6e73ULL);  // "kmns"
    Eigen::MatrixXd centroids(n_clusters, data.cols());
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);
    {
        const std::size_t first = uniform_index(rng, static_cast<std::size_t>(n));
        centroids.row(0) = data.row(static_cast<Eigen::Index>(first));
        chosen[first] = true;
    }
    Eigen::VectorXd d2 = (data.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < n_clusters; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double u = uniform_real(rng) * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > u) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) pick = n - 1;  // guard against rounding in the cumulative sum
        } else {
            // All remaining mass is on duplicates; take the lowest unchosen index.
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!chosen[static_cast<std::size_t>(i)]) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.row(c) = data.row(pick);
        chosen[static_cast<std::size_t>(pick)] = true;
        d2 = d2.cwiseMin((data.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> assignments(static_cast<std::size_t>(n), 0);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best_c = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < n_clusters; ++c) {
                const double d = (data.row(i) - centroids.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best_c = c;
                }
            }
            if (assignments[static_cast<std::size_t>(i)] != best_c) {
                assignments[static_cast<std::size_t>(i)] = best_c;
                changed = true;
            }
        }
        detail::repair_empty_clusters(data, centroids, assignments, n_clusters);

        centroids.setZero();
        std::vector<int> sizes(static_cast<std::size_t>(n_clusters), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            centroids.row(assignments[static_cast<std::size_t>(i)]) += data.row(i);
            ++sizes[static_cast<std::size_t>(assignments[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < n_clusters; ++c) {
            centroids.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
        }
        if (!changed && iter > 0) break;
    }

    ClusterModel model;
    model.centroids = std::move(centroids);
    model.assignments = std::move(assignments);
    model.seed = seed;
    return model;
}

namespace detail {

inline std::vector<int> cluster_sizes(const ClusterModel& clusters, int n) {
    if (static_cast<int>(clusters.assignments.size()) != n) {
        throw std::invalid_argument("cluster Laplacian: assignment length mismatch");
    }
    std::vector<int> sizes(static_cast<std::size_t>(clusters.n_clusters()), 0);
    for (int a : clusters.assignments) ++sizes[static_cast<std::size_t>(a)];
    for (int s : sizes) {
        if (s == 0) throw std::invalid_argument("cluster Laplacian: empty cluster");
    }
    return sizes;
}

}  // namespace detail

/// L_w = I - sum_c (1/N_c) 1_c 1_c^T; its quadratic form is the total
/// within-cluster scatter of the projected samples.
inline LaplacianMatrix within_cluster_laplacian(const ClusterModel& clusters, int n) {
    const std::vector<int> sizes = detail::cluster_sizes(clusters, n);
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (clusters.assignments[static_cast<std::size_t>(i)] ==
                clusters.assignments[static_cast<std::size_t>(j)]) {
                m(i, j) -= 1.0 / sizes[static_cast<std::size_t>(clusters.assignments[static_cast<std::size_t>(i)])];
            }
        }
    }
    LaplacianMatrix lap;
    lap.matrix = std::move(m);
    lap.kind = LaplacianKind::within_cluster;
    lap.param = clusters.n_clusters();
    lap.cluster_assignments = clusters.assignments;
    return lap;
}

/// L_b = sum_c N_c (1_c/N_c - 1/N)(1_c/N_c - 1/N)^T; its quadratic form is
/// sum_c N_c * ||cluster mean - global mean||^2 of the projected samples.
inline LaplacianMatrix between_cluster_laplacian(const ClusterModel& clusters, int n) {
    const std::vector<int> sizes = detail::cluster_sizes(clusters, n);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (int c = 0; c < clusters.n_clusters(); ++c) {
        Eigen::VectorXd v = Eigen::VectorXd::Constant(n, -inv_n);
        for (int i = 0; i < n; ++i) {
            if (clusters.assignments[static_cast<std::size_t>(i)] == c) {
                v[i] += 1.0 / sizes[static_cast<std::size_t>(c)];
            }
        }
        m += static_cast<double>(sizes[static_cast<std::size_t>(c)]) * (v * v.transpose());
    }
    LaplacianMatrix lap;
    lap.matrix = std::move(m);
    lap.kind = LaplacianKind::between_cluster;
    lap.param = clusters.n_clusters();
    lap.cluster_assignments = clusters.assignments;
    return lap;
}

enum class PsiVariant { psi1, psi2, psi3, psi4 };

/// Sample-selection vector for the class-variance penalty. psi1 drops the
/// penalty, psi2 keeps every sample, psi3 keeps all support vectors, psi4
/// keeps only the free support vectors strictly inside the box. Comparisons
/// against the bounds {0, C} use tolerance 1e-7 * C.
inline Eigen::VectorXd lambda_vector(PsiVariant variant, const Eigen::VectorXd& alpha, double C) {
    const double slack = 1e-9 * std::max(C, 1.0);
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        if (alpha[i] < -slack || alpha[i] > C + slack) {
            throw std::invalid_argument("lambda_vector: alpha outside [0, C]");
        }
    }
    const double tol = 1e-7 * C;
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(alpha.size());
    switch (variant) {
        case PsiVariant::psi1:
            break;
        case PsiVariant::psi2:
            lambda.setOnes();
            break;
        case PsiVariant::psi3:
            for (Eigen::Index i = 0; i < alpha.size(); ++i) {
                if (alpha[i] > tol) lambda[i] = alpha[i];
            }
            break;
        case PsiVariant::psi4:
            for (Eigen::Index i = 0; i < alpha.size(); ++i) {
                if (alpha[i] > tol && alpha[i] < C - tol) lambda[i] = alpha[i];
            }
            break;
    }
    return lambda;
}

}  // namespace occ
