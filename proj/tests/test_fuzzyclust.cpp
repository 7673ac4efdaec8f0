#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dermseg/dataio.hpp"
#include "dermseg/fuzzyclust.hpp"
#include "dermseg/metrics.hpp"
#include "dermseg/morphology.hpp"
#include "dermseg/rng.hpp"

using namespace dermseg;

namespace {

FeatureMatrix matrix_from(const std::vector<std::vector<double>>& rows) {
    FeatureMatrix m;
    m.n = static_cast<int>(rows.size());
    m.d = static_cast<int>(rows[0].size());
    for (int i = 0; i < m.n; ++i) {
        for (double v : rows[i]) m.rows.push_back(v);
        m.index_map.emplace_back(i, 0);
    }
    return m;
}

FeatureMatrix two_blobs(int per_blob, double sigma, uint64_t seed, std::vector<double>* mean_a,
                        std::vector<double>* mean_b) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    *mean_a = {0, 0, 0};
    *mean_b = {0, 0, 0};
    for (int i = 0; i < per_blob; ++i) {
        std::vector<double> row(3);
        for (int c = 0; c < 3; ++c) {
            row[c] = 0.2 + rng.normal(0.0, sigma);
            (*mean_a)[c] += row[c] / per_blob;
        }
        rows.push_back(row);
    }
    for (int i = 0; i < per_blob; ++i) {
        std::vector<double> row(3);
        for (int c = 0; c < 3; ++c) {
            row[c] = 0.8 + rng.normal(0.0, sigma);
            (*mean_b)[c] += row[c] / per_blob;
        }
        rows.push_back(row);
    }
    return matrix_from(rows);
}

}  // namespace

TEST_CASE("fcm with one cluster returns the mean with crisp membership") {
    Rng rng(3);
    std::vector<std::vector<double>> rows;
    std::vector<double> mean(3, 0.0);
    for (int i = 0; i < 40; ++i) {
        rows.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
        for (int c = 0; c < 3; ++c) mean[c] += rows.back()[c] / 40;
    }
    FcmResult r = fcm_fit(matrix_from(rows), 1);
    for (int c = 0; c < 3; ++c) CHECK(r.centroids.at(0, c) == doctest::Approx(mean[c]));
    for (int j = 0; j < 40; ++j) CHECK(r.memberships.at(0, j) == doctest::Approx(1.0));
}

TEST_CASE("fcm recovers two well-separated blobs") {
    std::vector<double> mean_a, mean_b;
    FeatureMatrix x = two_blobs(150, 0.02, 21, &mean_a, &mean_b);
    FcmResult r = fcm_fit(x, 2, 2.0, 1e-6, 200, 5);

    // match centroids to blobs by distance to 0.2
    int a = std::abs(r.centroids.at(0, 0) - 0.2) < std::abs(r.centroids.at(1, 0) - 0.2) ? 0 : 1;
    int b = 1 - a;
    for (int c = 0; c < 3; ++c) {
        CHECK(std::abs(r.centroids.at(a, c) - mean_a[c]) < 0.02);
        CHECK(std::abs(r.centroids.at(b, c) - mean_b[c]) < 0.02);
    }
}

TEST_CASE("fcm objective is non-increasing and memberships sum to one") {
    for (uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        int n = 30 + static_cast<int>(seed % 40);
        int c = 2 + static_cast<int>(seed % 4);
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < n; ++i) rows.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
        FcmResult r = fcm_fit(matrix_from(rows), c, 2.0, 1e-5, 60, seed);

        for (size_t t = 1; t < r.objective_trace.size(); ++t) {
            CHECK(r.objective_trace[t] <= r.objective_trace[t - 1] + 1e-9);
        }
        for (int j = 0; j < n; ++j) {
            double col = 0.0;
            for (int i = 0; i < c; ++i) {
                double u = r.memberships.at(i, j);
                CHECK(u >= 0.0);
                CHECK(u <= 1.0);
                col += u;
            }
            CHECK(std::abs(col - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("a point coincident with a centroid gets crisp membership") {
    // one far outlier becomes its own centroid; running a second fit seeded
    // from data guarantees some point sits exactly on an initial centroid
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 10; ++i) rows.push_back({0.1 * i, 0.2, 0.3});
    FeatureMatrix x = matrix_from(rows);
    FcmResult r = fcm_fit(x, 3, 2.0, 1e-4, 100, 0);
    // construct the coincidence directly: ask for memberships of a point equal
    // to centroid 0 by appending it and refitting with max_iter=1 from the
    // same seed is fragile; instead verify the rule on a degenerate dataset
    std::vector<std::vector<double>> dupes = {{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}, {0.9, 0.1, 0.2}};
    FcmResult crisp = fcm_fit(matrix_from(dupes), 2, 2.0, 1e-4, 50, 1);
    for (int j = 0; j < 3; ++j) {
        int best = crisp.memberships.at(0, j) > crisp.memberships.at(1, j) ? 0 : 1;
        double d = 0.0;
        for (int c = 0; c < 3; ++c) {
            double diff = dupes[j][c] - crisp.centroids.at(best, c);
            d += diff * diff;
        }
        if (d == 0.0) {
            CHECK(crisp.memberships.at(best, j) == 1.0);
            CHECK(crisp.memberships.at(1 - best, j) == 0.0);
        }
    }
    CHECK(r.iterations >= 1);
}

TEST_CASE("fcm errors: too few points, bad fuzzifier") {
    std::vector<std::vector<double>> rows = {{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}};
    CHECK_THROWS_AS(fcm_fit(matrix_from(rows), 3), std::invalid_argument);
    CHECK_THROWS_AS(fcm_fit(matrix_from(rows), 2, 1.0), std::invalid_argument);
    // all points identical: distinct initial centroids are impossible
    std::vector<std::vector<double>> same(5, {0.3, 0.3, 0.3});
    CHECK_THROWS_AS(fcm_fit(matrix_from(same), 2), std::invalid_argument);
}

TEST_CASE("fcm is deterministic and permutation-equivariant") {
    Rng rng(8);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 25; ++i) rows.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    FcmResult r1 = fcm_fit(matrix_from(rows), 3, 2.0, 1e-5, 40, 17);
    FcmResult r2 = fcm_fit(matrix_from(rows), 3, 2.0, 1e-5, 40, 17);
    CHECK(r1.memberships.u == r2.memberships.u);
    CHECK(r1.centroids.v == r2.centroids.v);
    CHECK(r1.objective_trace == r2.objective_trace);
}

TEST_CASE("kmeans groups the five luminances like brute force") {
    // five centroids as gray RGB rows
    Centroids pts;
    pts.c = 5;
    pts.d = 3;
    for (double lum : {0.2, 0.25, 0.3, 0.8, 0.85}) {
        pts.v.push_back(lum);
        pts.v.push_back(lum);
        pts.v.push_back(lum);
    }
    std::vector<int> labels = kmeans_fit(pts, 2, 10, 0);

    // oracle: enumerate all 2^5-2 proper bipartitions, minimize WGSS
    auto wgss_of = [&](uint32_t bits) {
        double centers[2][3] = {{0, 0, 0}, {0, 0, 0}};
        int counts[2] = {0, 0};
        for (int p = 0; p < 5; ++p) {
            int g = (bits >> p) & 1;
            ++counts[g];
            for (int c = 0; c < 3; ++c) centers[g][c] += pts.at(p, c);
        }
        if (!counts[0] || !counts[1]) return 1e300;
        for (int g = 0; g < 2; ++g) {
            for (int c = 0; c < 3; ++c) centers[g][c] /= counts[g];
        }
        double acc = 0.0;
        for (int p = 0; p < 5; ++p) {
            int g = (bits >> p) & 1;
            for (int c = 0; c < 3; ++c) {
                double d = pts.at(p, c) - centers[g][c];
                acc += d * d;
            }
        }
        return acc;
    };
    uint32_t best_bits = 1;
    for (uint32_t bits = 1; bits < 31; ++bits) {
        if (wgss_of(bits) < wgss_of(best_bits)) best_bits = bits;
    }
    // compare partitions up to label swap
    std::set<int> got_group0, oracle_group0;
    for (int p = 0; p < 5; ++p) {
        if (labels[p] == labels[0]) got_group0.insert(p);
        if (((best_bits >> p) & 1) == (best_bits & 1)) oracle_group0.insert(p);
    }
    bool same = got_group0 == oracle_group0;
    if (!same) {
        std::set<int> complement;
        for (int p = 0; p < 5; ++p) {
            if (!oracle_group0.count(p)) complement.insert(p);
        }
        same = got_group0 == complement;
    }
    CHECK(same);
    CHECK(got_group0 == std::set<int>{0, 1, 2});
}

TEST_CASE("kmeans degenerate cases") {
    Centroids pts;
    pts.c = 4;
    pts.d = 2;
    pts.v = {0.1, 0.1, 0.5, 0.5, 0.9, 0.9, 0.3, 0.3};
    std::vector<int> own = kmeans_fit(pts, 4, 5, 3);
    std::set<int> distinct(own.begin(), own.end());
    CHECK(distinct.size() == 4);  // k == point count: every point its own group

    Centroids same;
    same.c = 3;
    same.d = 2;
    same.v = {0.4, 0.4, 0.4, 0.4, 0.4, 0.4};
    std::vector<int> ident = kmeans_fit(same, 2, 5, 3);
    CHECK((ident[0] == ident[1] && ident[1] == ident[2]));  // identical points stay together

    CHECK_THROWS_AS(kmeans_fit(same, 4), std::invalid_argument);
}

TEST_CASE("select_darkest_group picks lowest mean luminance with index ties") {
    Centroids c;
    c.c = 5;
    c.d = 3;
    // three dark-ish and two bright, luminances 0.2/0.25/0.3 and 0.8/0.85
    for (double lum : {0.2, 0.25, 0.3, 0.8, 0.85}) {
        c.v.push_back(lum);
        c.v.push_back(lum);
        c.v.push_back(lum);
    }
    std::vector<int> groups = {0, 0, 0, 1, 1};
    CHECK(select_darkest_group(groups, c) == std::vector<int>{0, 1, 2});

    std::vector<int> single = {0, 0, 0, 0, 0};
    CHECK(select_darkest_group(single, c) == std::vector<int>{0, 1, 2, 3, 4});

    // two groups with equal mean luminance: the one holding index 0 wins
    Centroids tie;
    tie.c = 4;
    tie.d = 3;
    for (double lum : {0.3, 0.5, 0.5, 0.3}) {
        tie.v.push_back(lum);
        tie.v.push_back(lum);
        tie.v.push_back(lum);
    }
    std::vector<int> tie_groups = {0, 1, 0, 1};  // both means 0.4
    CHECK(select_darkest_group(tie_groups, tie) == std::vector<int>{0, 2});
}

TEST_CASE("cluster_segment finds clean synthetic lesions") {
    double j_sum = 0.0;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        SynthSpec spec = random_lesion_spec(250, 0, false, 0.02, 900 + seed);
        SynthResult s = synth_lesion(spec);
        ClusterConfig cc;
        cc.seed = seed;
        BinaryMask mask = cluster_segment(s.image, cc);
        j_sum += jaccard(mask, s.mask);
    }
    CHECK(j_sum / 5.0 >= 0.85);
}

TEST_CASE("cluster_segment output avoids the dark border and stays one solid component") {
    SynthSpec spec = random_lesion_spec(250, 0, true, 0.02, 31);
    SynthResult s = synth_lesion(spec);
    ClusterConfig cc;
    cc.seed = 3;
    BinaryMask mask = cluster_segment(s.image, cc);

    BinaryMask border = dark_border_mask(s.image);
    for (size_t i = 0; i < mask.data.size(); ++i) {
        CHECK(!(mask.data[i] && border.data[i]));
    }
    CHECK(connected_components(mask).component_count == 1);
    CHECK(fill_holes(mask) == mask);
    CHECK(jaccard(mask, s.mask) >= 0.7);
}

TEST_CASE("cluster_segment restores resolution and validates input") {
    SynthSpec spec = random_lesion_spec(160, 0, false, 0.01, 77);
    SynthResult s = synth_lesion(spec);
    ClusterConfig cc;
    BinaryMask mask = cluster_segment(s.image, cc);
    CHECK(mask.width == 160);
    CHECK(mask.height == 160);

    RgbImage tiny(2, 2, 0.5);
    CHECK_THROWS(cluster_segment(tiny, cc));

    // an all-black frame leaves no valid pixels at all
    RgbImage black(20, 20, 0.0);
    CHECK_THROWS_AS(cluster_segment(black, cc), std::invalid_argument);
}
