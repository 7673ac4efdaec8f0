#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dermseg/image.hpp"

namespace dermseg {

// Per-pixel feature rows (RGB by default) for the pixels that survive border
// exclusion; index_map remembers where each row came from.
struct FeatureMatrix {
    int n = 0;
    int d = 0;
    std::vector<double> rows;                      // n x d, row-major
    std::vector<std::pair<int, int>> index_map;    // row -> (x, y)

    double at(int row, int col) const { return rows[static_cast<size_t>(row) * d + col]; }
};

struct MembershipMatrix {
    int c = 0;
    int n = 0;
    std::vector<double> u;  // c x n, row-major

    double at(int cluster, int point) const { return u[static_cast<size_t>(cluster) * n + point]; }
};

struct Centroids {
    int c = 0;
    int d = 0;
    std::vector<double> v;  // c x d, row-major

    double at(int cluster, int col) const { return v[static_cast<size_t>(cluster) * d + col]; }
};

struct FcmResult {
    MembershipMatrix memberships;
    Centroids centroids;
    std::vector<double> objective_trace;  // J_m after each full update, non-increasing
    int iterations = 0;
};

// Standard FCM: memberships from inverse-distance ratios, centroids from
// u^m-weighted means, objective J_m = sum u^m d^2. Stops when the largest
// centroid coordinate change drops below tol. Points coincident with a
// centroid get crisp membership there. Initial centroids are drawn uniformly
// from the data; coincident draws are retried up to 10 times.
FcmResult fcm_fit(const FeatureMatrix& x, int c = 5, double fuzzifier = 2.0, double tol = 1e-4,
                  int max_iter = 100, uint64_t seed = 0);

// Lloyd's algorithm on the FCM centroids, best of `restarts` seeded
// initializations by within-group sum of squares. Returns a group label per
// point.
std::vector<int> kmeans_fit(const Centroids& points, int k = 2, int restarts = 10,
                            uint64_t seed = 0);

// Indices of the clusters in the group with the lowest mean luminance; ties
// go to the group holding the smallest cluster index.
std::vector<int> select_darkest_group(const std::vector<int>& groups, const Centroids& centroids);

struct ClusterConfig {
    int fcm_c = 5;
    double fcm_m = 2.0;
    double fcm_tol = 1e-4;
    int fcm_max_iter = 100;
    int kmeans_k = 2;
    int kmeans_restarts = 10;
    bool hair_enabled = true;
    int hair_radius = 7;
    double hair_thresh = 0.04;
    double border_lum_thresh = 0.1;
    uint64_t seed = 0;
};

// Full unsupervised pipeline: rescale to the 250 scale, remove hair, exclude
// dark border regions, FCM with C clusters on RGB, group centroids with
// k-means, keep the darkest group's pixels, fill holes, keep the largest
// component, and rescale the mask back to the original resolution.
BinaryMask cluster_segment(const RgbImage& img, const ClusterConfig& config = {});

}  // namespace dermseg
