#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dermseg/errors.hpp"
#include "dermseg/metrics.hpp"
#include "dermseg/rng.hpp"

using namespace dermseg;

namespace {

BinaryMask random_mask(int w, int h, Rng& rng, double density) {
    BinaryMask m(w, h);
    for (auto& v : m.data) v = rng.uniform() < density ? 1 : 0;
    return m;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

TEST_CASE("jaccard counts") {
    BinaryMask a(4, 2), b(4, 2);
    for (int x = 0; x < 4; ++x) a.set(x, 0, true);       // |a| = 4
    for (int x = 2; x < 4; ++x) b.set(x, 0, true);       // overlap 2
    for (int x = 0; x < 2; ++x) b.set(x, 1, true);       // |b| = 4
    CHECK(jaccard(a, b) == doctest::Approx(1.0 / 3.0));
    CHECK(dice(a, b) == doctest::Approx(0.5));

    CHECK(jaccard(a, a) == 1.0);
    BinaryMask empty(4, 2);
    CHECK(jaccard(empty, empty) == 1.0);
    CHECK(dice(empty, empty) == 1.0);

    BinaryMask disjoint(4, 2);
    disjoint.set(0, 1, true);
    CHECK(jaccard(a, disjoint) == 0.0);

    BinaryMask other(3, 3);
    CHECK_THROWS_AS(jaccard(a, other), std::invalid_argument);
    CHECK_THROWS_AS(dice(a, other), std::invalid_argument);
}

TEST_CASE("dice-jaccard identity over 1000 random pairs") {
    Rng rng(12);
    for (int trial = 0; trial < 1000; ++trial) {
        int w = 3 + static_cast<int>(rng.uniform_index(12));
        int h = 3 + static_cast<int>(rng.uniform_index(12));
        BinaryMask a = random_mask(w, h, rng, rng.uniform(0.1, 0.9));
        BinaryMask b = random_mask(w, h, rng, rng.uniform(0.1, 0.9));
        double j = jaccard(a, b), d = dice(a, b);
        CHECK(d == doctest::Approx(2.0 * j / (1.0 + j)).epsilon(1e-12));
        CHECK(j == doctest::Approx(jaccard(b, a)));  // symmetry
        CHECK(d == doctest::Approx(dice(b, a)));
        CHECK(j <= d);
        if (j == 1.0) CHECK(a == b);
    }
}

TEST_CASE("table 1 spot checks satisfy the identity after rounding") {
    // the paper reports 0.62 (0.77) for algorithm 1B and 0.44 (0.61) for 2
    CHECK(round2(2.0 * 0.62 / 1.62) == doctest::Approx(0.77));
    CHECK(round2(2.0 * 0.44 / 1.44) == doctest::Approx(0.61));
}

TEST_CASE("optimize_threshold resolves ties toward 0.5") {
    // binary probabilities equal to truth: every interior tau is optimal
    Rng rng(3);
    std::vector<ProbMap> probs;
    std::vector<BinaryMask> truths;
    for (int i = 0; i < 3; ++i) {
        BinaryMask t = random_mask(6, 6, rng, 0.4);
        ProbMap p(6, 6);
        for (size_t px = 0; px < t.data.size(); ++px) p.data[px] = t.data[px] ? 1.0 : 0.0;
        probs.push_back(p);
        truths.push_back(t);
    }
    CHECK(optimize_threshold(probs, truths) == doctest::Approx(0.5));
}

TEST_CASE("optimize_threshold picks the maximizer nearest 0.5") {
    ProbMap p(1, 1);
    p.data[0] = 0.3;
    BinaryMask t(1, 1, true);
    double tau = optimize_threshold({p}, {t});
    CHECK(tau == doctest::Approx(0.29));

    // no grid point beats the returned tau
    auto mean_j_at = [&](double cut) {
        BinaryMask m(1, 1, p.data[0] > cut);
        return jaccard(m, t);
    };
    double best = mean_j_at(tau);
    for (int i = 1; i <= 99; ++i) CHECK(mean_j_at(i / 100.0) <= best);

    CHECK_THROWS_AS(optimize_threshold({}, {}), std::invalid_argument);
}

TEST_CASE("optimize_threshold is order invariant") {
    Rng rng(44);
    std::vector<ProbMap> probs;
    std::vector<BinaryMask> truths;
    for (int i = 0; i < 4; ++i) {
        ProbMap p(8, 8);
        for (double& v : p.data) v = rng.uniform();
        probs.push_back(p);
        truths.push_back(random_mask(8, 8, rng, 0.5));
    }
    double tau = optimize_threshold(probs, truths);
    std::reverse(probs.begin(), probs.end());
    std::reverse(truths.begin(), truths.end());
    CHECK(optimize_threshold(probs, truths) == tau);
}

TEST_CASE("binarize_and_clean per algorithm") {
    // ring-shaped probability map
    ProbMap ring(7, 7, 0.1);
    for (int i = 1; i <= 5; ++i) {
        ring.at(i, 1) = ring.at(i, 5) = 0.9;
        ring.at(1, i) = ring.at(5, i) = 0.9;
    }
    BinaryMask b1 = binarize_and_clean(ring, 0.5, Algorithm::k1B);
    CHECK(b1.count() == 25);  // hole filled

    BinaryMask a1 = binarize_and_clean(ring, 0.5, Algorithm::k1A);
    CHECK(a1.count() == 16);  // untouched ring

    // 1A ignores the passed tau and thresholds at 0.5
    ProbMap constant(3, 3, 0.6);
    BinaryMask fixed = binarize_and_clean(constant, 0.9, Algorithm::k1A);
    CHECK(fixed.count() == 9);
    BinaryMask all = binarize_and_clean(constant, 0.5, Algorithm::k1B);
    CHECK(all.count() == 9);

    CHECK_THROWS_AS(binarize_and_clean(constant, 1.5, Algorithm::k1B), std::invalid_argument);
}

TEST_CASE("evaluate_fold aggregates and names missing predictions") {
    BinaryMask t(4, 4);
    t.set(1, 1, true);
    std::vector<std::optional<BinaryMask>> preds = {t, t};
    std::vector<BinaryMask> truths = {t, t};
    std::vector<std::string> ids = {"s1", "s2"};
    EvalRow row = evaluate_fold(1, Algorithm::k1B, preds, truths, ids);
    CHECK(row.jaccard == 1.0);
    CHECK(row.dice == 1.0);

    preds[1] = std::nullopt;
    try {
        evaluate_fold(1, Algorithm::k1B, preds, truths, ids);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("s2") != std::string::npos);
    }
}

TEST_CASE("report carries fold rows plus m and sigma in table shape") {
    std::vector<EvalRow> rows;
    double values[5] = {0.54, 0.51, 0.55, 0.54, 0.50};
    for (int f = 0; f < 5; ++f) {
        EvalRow r;
        r.fold = f + 1;
        r.algorithm = Algorithm::k1A;
        r.jaccard = values[f];
        r.dice = 2 * values[f] / (1 + values[f]);
        rows.push_back(r);
    }
    ReportTable table = emit_report(rows);
    REQUIRE(table.summaries.size() == 1);
    CHECK(table.summaries[0].mean_jaccard == doctest::Approx(0.528));
    // population sigma over the fold means
    double mean = 0.528, acc = 0.0;
    for (double v : values) acc += (v - mean) * (v - mean);
    CHECK(table.summaries[0].sigma_jaccard == doctest::Approx(std::sqrt(acc / 5.0)));

    std::string csv = report_csv(table);
    CHECK(csv.find("fold,algorithm,jaccard,dice") == 0);
    CHECK(csv.find("m,1A,") != std::string::npos);
    CHECK(csv.find("sigma,1A,") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);  // header + 5 folds + m + sigma

    std::string text = report_text(table);
    CHECK(text.find("Algorithm 1A") != std::string::npos);

    // identical fold values collapse sigma to zero
    std::vector<EvalRow> flat(3);
    for (int f = 0; f < 3; ++f) {
        flat[f].fold = f + 1;
        flat[f].algorithm = Algorithm::kCluster;
        flat[f].jaccard = 0.44;
        flat[f].dice = 0.61;
    }
    ReportTable ft = emit_report(flat);
    CHECK(ft.summaries[0].sigma_jaccard == 0.0);

    // full-dataset rows ride along without entering the summary
    flat.push_back({kFullDataset, Algorithm::kCluster, 0.9, 0.95});
    ReportTable with_full = emit_report(flat);
    CHECK(with_full.summaries[0].mean_jaccard == doctest::Approx(0.44));
    CHECK(report_csv(with_full).find("full,2,") != std::string::npos);
}
