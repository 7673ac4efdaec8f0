#include "dermseg/fuzzyclust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dermseg/colorspace.hpp"
#include "dermseg/errors.hpp"
#include "dermseg/morphology.hpp"
#include "dermseg/rng.hpp"

namespace dermseg {

namespace {

double sq_dist(const double* a, const double* b, int d) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
        double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

bool rows_equal(const double* a, const double* b, int d) {
    for (int i = 0; i < d; ++i) {
        if (a[i] != b[i]) return false;
    }
    return true;
}

Centroids draw_initial_centroids(const FeatureMatrix& x, int c, Rng& rng) {
    for (int attempt = 0; attempt < 10; ++attempt) {
        std::vector<int> picks;
        picks.reserve(c);
        while (static_cast<int>(picks.size()) < c) {
            int idx = static_cast<int>(rng.uniform_index(x.n));
            if (std::find(picks.begin(), picks.end(), idx) == picks.end()) picks.push_back(idx);
        }
        Centroids v;
        v.c = c;
        v.d = x.d;
        v.v.resize(static_cast<size_t>(c) * x.d);
        for (int i = 0; i < c; ++i) {
            for (int j = 0; j < x.d; ++j) v.v[static_cast<size_t>(i) * x.d + j] = x.at(picks[i], j);
        }
        bool duplicate = false;
        for (int i = 0; i < c && !duplicate; ++i) {
            for (int j = i + 1; j < c; ++j) {
                if (rows_equal(&v.v[static_cast<size_t>(i) * x.d],
                               &v.v[static_cast<size_t>(j) * x.d], x.d)) {
                    duplicate = true;
                    break;
                }
            }
        }
        if (!duplicate) return v;
    }
    throw std::invalid_argument("fcm_fit: could not draw distinct initial centroids");
}

}  // namespace

FcmResult fcm_fit(const FeatureMatrix& x, int c, double fuzzifier, double tol, int max_iter,
                  uint64_t seed) {
    if (c < 1) throw std::invalid_argument("fcm_fit: c must be >= 1");
    if (x.n < c) throw std::invalid_argument("fcm_fit: need at least c data points");
    if (!(fuzzifier > 1.0)) throw std::invalid_argument("fcm_fit: fuzzifier must be > 1");

    Rng rng(seed);
    FcmResult result;
    result.centroids = draw_initial_centroids(x, c, rng);
    result.memberships.c = c;
    result.memberships.n = x.n;
    result.memberships.u.assign(static_cast<size_t>(c) * x.n, 0.0);

    const double inv_exp = 1.0 / (fuzzifier - 1.0);
    const bool quadratic = fuzzifier == 2.0;  // skip pow on the default path
    auto weight = [&](double u) { return quadratic ? u * u : std::pow(u, fuzzifier); };
    std::vector<double> d2(c);
    std::vector<double> inv(c);
    Centroids next = result.centroids;

    for (int iter = 0; iter < max_iter; ++iter) {
        // membership update from the current centroids
        for (int j = 0; j < x.n; ++j) {
            const double* row = &x.rows[static_cast<size_t>(j) * x.d];
            int coincident = -1;
            for (int i = 0; i < c; ++i) {
                d2[i] = sq_dist(row, &result.centroids.v[static_cast<size_t>(i) * x.d], x.d);
                if (d2[i] == 0.0 && coincident < 0) coincident = i;
            }
            if (coincident >= 0) {
                for (int i = 0; i < c; ++i) {
                    result.memberships.u[static_cast<size_t>(i) * x.n + j] =
                        i == coincident ? 1.0 : 0.0;
                }
                continue;
            }
            double total = 0.0;
            for (int i = 0; i < c; ++i) {
                inv[i] = quadratic ? 1.0 / d2[i] : std::pow(d2[i], -inv_exp);
                total += inv[i];
            }
            for (int i = 0; i < c; ++i) {
                result.memberships.u[static_cast<size_t>(i) * x.n + j] = inv[i] / total;
            }
        }

        // centroid update from the new memberships
        double max_shift = 0.0;
        for (int i = 0; i < c; ++i) {
            double weight_sum = 0.0;
            std::vector<double> acc(x.d, 0.0);
            for (int j = 0; j < x.n; ++j) {
                double w = weight(result.memberships.u[static_cast<size_t>(i) * x.n + j]);
                weight_sum += w;
                const double* row = &x.rows[static_cast<size_t>(j) * x.d];
                for (int k = 0; k < x.d; ++k) acc[k] += w * row[k];
            }
            for (int k = 0; k < x.d; ++k) {
                double updated = weight_sum > 0.0
                                     ? acc[k] / weight_sum
                                     : result.centroids.v[static_cast<size_t>(i) * x.d + k];
                max_shift = std::max(
                    max_shift, std::abs(updated - result.centroids.v[static_cast<size_t>(i) * x.d + k]));
                next.v[static_cast<size_t>(i) * x.d + k] = updated;
            }
        }
        result.centroids = next;

        double objective = 0.0;
        for (int j = 0; j < x.n; ++j) {
            const double* row = &x.rows[static_cast<size_t>(j) * x.d];
            for (int i = 0; i < c; ++i) {
                double u = result.memberships.u[static_cast<size_t>(i) * x.n + j];
                objective += weight(u) *
                             sq_dist(row, &result.centroids.v[static_cast<size_t>(i) * x.d], x.d);
            }
        }
        result.objective_trace.push_back(objective);
        result.iterations = iter + 1;
        if (max_shift < tol) break;
    }
    return result;
}

namespace {

double lloyd_once(const Centroids& points, int k, Rng& rng, std::vector<int>& labels) {
    int n = points.c, d = points.d;
    std::vector<int> picks;
    while (static_cast<int>(picks.size()) < k) {
        int idx = static_cast<int>(rng.uniform_index(n));
        if (std::find(picks.begin(), picks.end(), idx) == picks.end()) picks.push_back(idx);
    }
    std::vector<double> centers(static_cast<size_t>(k) * d);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < d; ++j) {
            centers[static_cast<size_t>(i) * d + j] = points.at(picks[i], j);
        }
    }

    labels.assign(n, 0);
    for (int round = 0; round < 100; ++round) {
        bool changed = false;
        for (int p = 0; p < n; ++p) {
            double best = std::numeric_limits<double>::infinity();
            int best_k = 0;
            for (int i = 0; i < k; ++i) {
                double dist = sq_dist(&points.v[static_cast<size_t>(p) * d],
                                      &centers[static_cast<size_t>(i) * d], d);
                if (dist < best) {
                    best = dist;
                    best_k = i;
                }
            }
            if (labels[p] != best_k) {
                labels[p] = best_k;
                changed = true;
            }
        }
        std::vector<double> acc(static_cast<size_t>(k) * d, 0.0);
        std::vector<int> counts(k, 0);
        for (int p = 0; p < n; ++p) {
            ++counts[labels[p]];
            for (int j = 0; j < d; ++j) {
                acc[static_cast<size_t>(labels[p]) * d + j] += points.at(p, j);
            }
        }
        for (int i = 0; i < k; ++i) {
            if (counts[i] == 0) continue;  // empty group keeps its center
            for (int j = 0; j < d; ++j) {
                centers[static_cast<size_t>(i) * d + j] = acc[static_cast<size_t>(i) * d + j] / counts[i];
            }
        }
        if (!changed && round > 0) break;
    }

    double wgss = 0.0;
    for (int p = 0; p < n; ++p) {
        wgss += sq_dist(&points.v[static_cast<size_t>(p) * d],
                        &centers[static_cast<size_t>(labels[p]) * d], d);
    }
    return wgss;
}

}  // namespace

std::vector<int> kmeans_fit(const Centroids& points, int k, int restarts, uint64_t seed) {
    if (k < 1) throw std::invalid_argument("kmeans_fit: k must be >= 1");
    if (points.c < k) throw std::invalid_argument("kmeans_fit: need at least k points");
    Rng rng(seed);
    std::vector<int> best_labels;
    double best_wgss = std::numeric_limits<double>::infinity();
    std::vector<int> labels;
    for (int r = 0; r < std::max(1, restarts); ++r) {
        double wgss = lloyd_once(points, k, rng, labels);
        if (wgss < best_wgss) {
            best_wgss = wgss;
            best_labels = labels;
        }
    }
    return best_labels;
}

std::vector<int> select_darkest_group(const std::vector<int>& groups, const Centroids& centroids) {
    if (groups.empty()) throw std::invalid_argument("select_darkest_group: no groups");
    int max_group = *std::max_element(groups.begin(), groups.end());
    std::vector<double> lum_sum(max_group + 1, 0.0);
    std::vector<int> count(max_group + 1, 0);
    std::vector<int> smallest_member(max_group + 1, std::numeric_limits<int>::max());
    for (size_t i = 0; i < groups.size(); ++i) {
        int g = groups[i];
        lum_sum[g] += luminance(centroids.at(static_cast<int>(i), 0),
                                centroids.at(static_cast<int>(i), 1),
                                centroids.at(static_cast<int>(i), 2));
        ++count[g];
        smallest_member[g] = std::min(smallest_member[g], static_cast<int>(i));
    }
    int best = -1;
    double best_lum = std::numeric_limits<double>::infinity();
    for (int g = 0; g <= max_group; ++g) {
        if (count[g] == 0) continue;
        double mean = lum_sum[g] / count[g];
        if (mean < best_lum ||
            (mean == best_lum && best >= 0 && smallest_member[g] < smallest_member[best])) {
            best_lum = mean;
            best = g;
        }
    }
    std::vector<int> members;
    for (size_t i = 0; i < groups.size(); ++i) {
        if (groups[i] == best) members.push_back(static_cast<int>(i));
    }
    return members;
}

BinaryMask cluster_segment(const RgbImage& img, const ClusterConfig& config) {
    RgbImage scaled = rescale_max_dim(img, 250);
    RgbImage cleaned = scaled;
    if (config.hair_enabled) {
        cleaned = remove_hair(scaled, config.hair_radius, config.hair_thresh).cleaned;
    }
    BinaryMask excluded = dark_border_mask(cleaned, config.border_lum_thresh);

    FeatureMatrix features;
    features.d = 3;
    for (int y = 0; y < cleaned.height; ++y) {
        for (int x = 0; x < cleaned.width; ++x) {
            if (excluded.get(x, y)) continue;
            for (int c = 0; c < 3; ++c) features.rows.push_back(cleaned.at(x, y, c));
            features.index_map.emplace_back(x, y);
        }
    }
    features.n = static_cast<int>(features.index_map.size());
    if (features.n < config.fcm_c) {
        throw std::invalid_argument("cluster_segment: fewer valid pixels than clusters");
    }

    FcmResult fcm = fcm_fit(features, config.fcm_c, config.fcm_m, config.fcm_tol,
                            config.fcm_max_iter, config.seed);

    std::vector<int> assignment(features.n);
    for (int j = 0; j < features.n; ++j) {
        int best = 0;
        double best_u = fcm.memberships.at(0, j);
        for (int i = 1; i < config.fcm_c; ++i) {
            double u = fcm.memberships.at(i, j);
            if (u > best_u) {
                best_u = u;
                best = i;
            }
        }
        assignment[j] = best;
    }

    std::vector<int> groups = kmeans_fit(fcm.centroids, config.kmeans_k, config.kmeans_restarts,
                                         Rng::mix(config.seed, 17));
    std::vector<int> darkest = select_darkest_group(groups, fcm.centroids);

    BinaryMask lesion(cleaned.width, cleaned.height);
    for (int j = 0; j < features.n; ++j) {
        if (std::find(darkest.begin(), darkest.end(), assignment[j]) != darkest.end()) {
            auto [x, y] = features.index_map[j];
            lesion.set(x, y, true);
        }
    }

    lesion = largest_component(fill_holes(lesion));
    // excluded pixels can never be lesion, even after hole filling
    for (size_t i = 0; i < lesion.data.size(); ++i) {
        if (excluded.data[i]) lesion.data[i] = 0;
    }
    return resize_nearest(lesion, img.width, img.height);
}

}  // namespace dermseg
