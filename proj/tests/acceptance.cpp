// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit code 0 iff nothing failed
// (criterion 1 is data-dependent and reports SKIP when the ISIC-2017
// training set is not on disk; point DERMSEG_ISIC_ROOT at it to enable).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "dermseg/autodiff.hpp"
#include "dermseg/colorspace.hpp"
#include "dermseg/commands.hpp"
#include "dermseg/dataio.hpp"
#include "dermseg/fuzzyclust.hpp"
#include "dermseg/geometry.hpp"
#include "dermseg/metrics.hpp"
#include "dermseg/morphology.hpp"
#include "dermseg/params.hpp"
#include "dermseg/rng.hpp"
#include "dermseg/unet.hpp"
#include "test_util.hpp"

using namespace dermseg;

namespace {

struct Outcome {
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

class Runner {
public:
    void run(int number, const std::string& title, const std::function<Outcome()>& body) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = body();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const char* tag = outcome.skipped ? "SKIP" : outcome.pass ? "PASS" : "FAIL";
        std::printf("[%s] criterion %d: %s (%.1fs) %s\n", tag, number, title.c_str(), seconds,
                    outcome.detail.c_str());
        std::fflush(stdout);
        if (!outcome.pass && !outcome.skipped) ++failures;
    }

    int failures = 0;
};

Tensor random_tensor(const std::vector<int>& shape, Rng& rng) {
    Tensor t(shape);
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

// ---------------------------------------------------------------- criterion 1

Outcome criterion_paper_number() {
    const char* root = std::getenv("DERMSEG_ISIC_ROOT");
    if (!root || !*root) {
        return {true, true, "ISIC-2017 training set not on disk; set DERMSEG_ISIC_ROOT to run"};
    }
    testutil::TempDir tmp("acc_isic");
    EvalOptions opt;
    opt.data_dir = root;
    opt.methods = {"cluster"};
    opt.folds = 5;
    opt.seed = 1;
    opt.out_dir = tmp / "report";
    opt.jobs = 2;
    if (cmd_eval(opt) != 0) return {false, false, "cmd_eval failed"};

    // read the full-dataset row back from the CSV
    auto bytes = testutil::read_bytes(tmp.path() / "report" / "report.csv");
    std::string csv(bytes.begin(), bytes.end());
    auto pos = csv.find("full,2,");
    if (pos == std::string::npos) return {false, false, "no full-dataset row in report"};
    double mean_j = std::strtod(csv.c_str() + pos + 7, nullptr);
    bool pass = std::abs(mean_j - 0.443) <= 0.08;
    return {pass, false, fmt("full-dataset mean Jaccard %.4f vs 0.443 +/- 0.08", mean_j)};
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion_gradients() {
    auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    auto track = [&](double err) { worst = std::max(worst, err); };

    for (int trial = 0; trial < 10; ++trial) {
        Rng rng(9000 + trial);
        int cin = 1 + trial % 3, cout = 1 + (trial / 2) % 3, k = 1 + trial % 3;
        int h = k + 1 + trial % 3, w = k + 2 + trial % 2;
        Tensor in = random_tensor({cin, h, w}, rng);
        Tensor wt = random_tensor({cout, cin, k, k}, rng);
        Tensor bias = random_tensor({cout}, rng);

        track(grad_check([&](Graph& g, Graph::NodeId x) {
            return g.sum(g.conv2d_valid(x, g.input(wt), g.input(bias)));
        }, in, 1e-5, 64, trial));
        track(grad_check([&](Graph& g, Graph::NodeId x) {
            return g.sum(g.conv2d_valid(g.input(in), x, g.input(bias)));
        }, wt, 1e-5, 64, trial));
        track(grad_check([&](Graph& g, Graph::NodeId x) {
            return g.sum(g.conv2d_valid(g.input(in), g.input(wt), x));
        }, bias, 1e-5, 64, trial));

        Tensor pool_in = random_tensor({cin, 2 * (1 + trial % 3), 2 * (2 + trial % 2)}, rng);
        track(grad_check([](Graph& g, Graph::NodeId x) { return g.sum(g.maxpool2(x)); },
                         pool_in, 1e-6, 64, trial));

        Tensor up_in = random_tensor({cin, 1 + trial % 3, 1 + (trial / 2) % 3}, rng);
        Tensor up_w = random_tensor({cin, cout, 2, 2}, rng);
        track(grad_check([&](Graph& g, Graph::NodeId x) {
            return g.sum(g.upconv2(x, g.input(up_w), g.input(bias)));
        }, up_in, 1e-5, 64, trial));
        track(grad_check([&](Graph& g, Graph::NodeId x) {
            return g.sum(g.upconv2(g.input(up_in), x, g.input(bias)));
        }, up_w, 1e-5, 64, trial));

        Tensor act = random_tensor({2, 3 + trial % 3, 3 + trial % 2}, rng);
        track(grad_check([](Graph& g, Graph::NodeId x) { return g.sum(g.relu(x)); }, act,
                         1e-6, 64, trial));
        track(grad_check([trial](Graph& g, Graph::NodeId x) {
            return g.sum(g.dropout(x, 0.4, true, 70 + trial));
        }, act, 1e-5, 64, trial));

        Tensor skip = random_tensor({2, 8, 8}, rng);
        Tensor up = random_tensor({1 + trial % 3, 4, 4}, rng);
        track(grad_check([&](Graph& g, Graph::NodeId x) {
            return g.sum(g.center_crop_concat(x, g.input(up)));
        }, skip, 1e-5, 64, trial));
        track(grad_check([&](Graph& g, Graph::NodeId x) {
            return g.sum(g.center_crop_concat(g.input(skip), x));
        }, up, 1e-5, 64, trial));

        int lh = 2 + trial % 3, lw = 2 + (trial / 2) % 3;
        Tensor logits = random_tensor({2, lh, lw}, rng);
        BinaryMask target(lw, lh);
        for (auto& v : target.data) v = rng.uniform() < 0.5;
        track(grad_check([&](Graph& g, Graph::NodeId x) { return g.softmax_ce_loss(x, target); },
                         logits, 1e-5, 64, trial));
    }

    // composed depth-1 U-Net: check the input gradient end to end, then spot
    // finite differences on every parameter tensor
    UNetConfig cfg;
    cfg.depth = 1;
    cfg.base_features = 2;
    cfg.in_channels = 3;
    cfg.content_size = 6;  // 22x22 input
    cfg.dropout_p = 0.0;
    cfg.seed = 321;
    GeometryPlan plan = geometry_solve(cfg.content_size, cfg.depth);
    ParamStore params = build_model(cfg);
    Rng rng(555);
    // jitter all parameters (especially the zero biases) so no pre-activation
    // sits exactly on the relu kink, where central differences are undefined
    for (auto& [name, entry] : params.entries()) {
        for (double& v : entry.value.data) v += rng.uniform(0.01, 0.05);
    }
    Tensor net_in = random_tensor({3, plan.input_size, plan.input_size}, rng);
    BinaryMask target(plan.output_size, plan.output_size);
    for (auto& v : target.data) v = rng.uniform() < 0.5;

    // 1e-6 steps here: the composed net is full of relu kinks and a wider
    // probe can straddle one
    track(grad_check([&](Graph& g, Graph::NodeId x) {
        ParamStore local = params;
        return g.softmax_ce_loss(unet_forward(g, local, cfg, x, false, 0), target);
    }, net_in, 1e-6, 64, 3));

    auto loss_of = [&](ParamStore& st) {
        Graph g;
        return g.value(g.softmax_ce_loss(unet_forward(g, st, cfg, net_in, false, 0), target))
            .data[0];
    };
    Graph g;
    auto loss = g.softmax_ce_loss(unet_forward(g, params, cfg, net_in, false, 0), target);
    g.backward(loss);
    params.zero_grad();
    for (const auto& [name, node] : g.params()) {
        Tensor& dst = params.grad(name);
        for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += g.grad(node).data[i];
    }
    for (const auto& [name, entry] : params.entries()) {
        for (size_t c = 0; c < std::min<size_t>(entry.value.numel(), 6); ++c) {
            size_t idx = static_cast<size_t>(rng.uniform_index(entry.value.numel()));
            double keep = params.value(name).data[idx];
            params.value(name).data[idx] = keep + 1e-6;
            double hi = loss_of(params);
            params.value(name).data[idx] = keep - 1e-6;
            double lo = loss_of(params);
            params.value(name).data[idx] = keep;
            double numeric = (hi - lo) / 2e-6;
            double analytic = params.grad(name).data[idx];
            track(std::abs(analytic - numeric) /
                  std::max({1.0, std::abs(analytic), std::abs(numeric)}));
        }
    }

    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = worst < 1e-4 && seconds < 60.0;
    return {pass, false, fmt("max rel err %.2e, runtime %.1fs (< 60s required)", worst, seconds)};
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion_overfit() {
    auto t0 = std::chrono::steady_clock::now();
    SynthSpec spec = random_lesion_spec(250, 0, false, 0.01, 77);
    SynthResult s = synth_lesion(spec);

    UNetConfig cfg;
    cfg.depth = 2;
    cfg.base_features = 4;
    cfg.in_channels = 5;
    cfg.content_size = 250;
    cfg.dropout_p = 0.5;
    cfg.seed = 42;
    TrainConfig tc;
    tc.iterations = 500;
    tc.seed = 42;
    tc.lr = 0.003;  // sanity-run rate; 500 steps at the production 2e-4 cannot move far enough

    // determinism: a short prefix re-run must be bit-identical
    TrainConfig prefix = tc;
    prefix.iterations = 10;
    auto short_run = [&] {
        ParamStore p = build_model(cfg);
        train(p, cfg, InputMode::kEnhanced1B, [&](int) { return std::make_pair(s.image, s.mask); },
              1, prefix);
        return p;
    };
    bool deterministic = short_run() == short_run();

    ParamStore params = build_model(cfg);
    TrainResult r = train(params, cfg, InputMode::kEnhanced1B,
                          [&](int) { return std::make_pair(s.image, s.mask); }, 1, tc);

    // eventually decreasing trace
    double head = std::accumulate(r.loss_trace.begin(), r.loss_trace.begin() + 50, 0.0) / 50.0;
    double tail = std::accumulate(r.loss_trace.end() - 50, r.loss_trace.end(), 0.0) / 50.0;

    // final loss measured in eval mode (dropout off) on the training image
    GeometryPlan plan = geometry_solve(cfg.content_size, cfg.depth);
    RgbImage scaled = rescale_max_dim(s.image, cfg.content_size);
    BinaryMask smask = resize_nearest(s.mask, scaled.width, scaled.height);
    NetInput in = assemble_input(scaled, InputMode::kEnhanced1B, plan);
    Tensor input({in.channels, in.size, in.size});
    input.data = in.data;
    BinaryMask target(plan.output_size, plan.output_size);
    for (int y = 0; y < smask.height; ++y) {
        for (int x = 0; x < smask.width; ++x) {
            if (smask.get(x, y)) target.set(in.geometry.out_x + x, in.geometry.out_y + y, true);
        }
    }
    Graph g;
    double loss =
        g.value(g.softmax_ce_loss(unet_forward(g, params, cfg, input, false, 0), target)).data[0];

    Plane prob = predict_prob(params, cfg, InputMode::kEnhanced1B, s.image);
    BinaryMask pred(prob.width, prob.height);
    for (size_t i = 0; i < pred.data.size(); ++i) pred.data[i] = prob.data[i] > 0.5 ? 1 : 0;
    double j = jaccard(pred, s.mask);

    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = loss < 0.05 && j > 0.9 && seconds < 600.0 && deterministic && tail < head;
    return {pass, false,
            fmt("loss %.4f (< 0.05), Jaccard %.4f (> 0.9), %.0fs (< 600s)", loss, j, seconds) +
                (deterministic ? ", deterministic" : ", NON-DETERMINISTIC")};
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion_fcm() {
    for (uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        int n = 40 + static_cast<int>(seed % 60);
        int c = 2 + static_cast<int>(seed % 4);
        FeatureMatrix x;
        x.n = n;
        x.d = 3;
        for (int i = 0; i < n * 3; ++i) x.rows.push_back(rng.uniform());
        for (int i = 0; i < n; ++i) x.index_map.emplace_back(i, 0);
        FcmResult r = fcm_fit(x, c, 2.0, 1e-6, 80, seed);
        for (size_t t = 1; t < r.objective_trace.size(); ++t) {
            if (r.objective_trace[t] > r.objective_trace[t - 1] + 1e-9) {
                return {false, false,
                        fmt("objective increased by %.3e at seed %.0f",
                            r.objective_trace[t] - r.objective_trace[t - 1],
                            static_cast<double>(seed))};
            }
        }
        for (int j = 0; j < n; ++j) {
            double col = 0.0;
            for (int i = 0; i < c; ++i) col += r.memberships.at(i, j);
            if (std::abs(col - 1.0) > 1e-9) {
                return {false, false, fmt("membership column sums to %.12f", col)};
            }
        }
    }

    // two-blob recovery against per-blob sample means
    Rng rng(2718);
    FeatureMatrix blobs;
    blobs.d = 3;
    double mean_a[3] = {0, 0, 0}, mean_b[3] = {0, 0, 0};
    const int per = 200;
    for (int i = 0; i < per; ++i) {
        for (int c = 0; c < 3; ++c) {
            double v = 0.2 + rng.normal(0.0, 0.02);
            blobs.rows.push_back(v);
            mean_a[c] += v / per;
        }
        blobs.index_map.emplace_back(i, 0);
    }
    for (int i = 0; i < per; ++i) {
        for (int c = 0; c < 3; ++c) {
            double v = 0.8 + rng.normal(0.0, 0.02);
            blobs.rows.push_back(v);
            mean_b[c] += v / per;
        }
        blobs.index_map.emplace_back(per + i, 0);
    }
    blobs.n = 2 * per;
    FcmResult r = fcm_fit(blobs, 2, 2.0, 1e-7, 200, 3);
    int a = std::abs(r.centroids.at(0, 0) - 0.2) < std::abs(r.centroids.at(1, 0) - 0.2) ? 0 : 1;
    double worst = 0.0;
    for (int c = 0; c < 3; ++c) {
        worst = std::max(worst, std::abs(r.centroids.at(a, c) - mean_a[c]));
        worst = std::max(worst, std::abs(r.centroids.at(1 - a, c) - mean_b[c]));
    }
    bool pass = worst < 0.02;
    return {pass, false,
            fmt("100 traces non-increasing, columns sum to 1, blob recovery off by %.4f (< 0.02)",
                worst)};
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion_metric_identity() {
    Rng rng(31415);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        int w = 2 + static_cast<int>(rng.uniform_index(14));
        int h = 2 + static_cast<int>(rng.uniform_index(14));
        BinaryMask a(w, h), b(w, h);
        double da = rng.uniform(), db = rng.uniform();
        for (auto& v : a.data) v = rng.uniform() < da ? 1 : 0;
        for (auto& v : b.data) v = rng.uniform() < db ? 1 : 0;
        double j = jaccard(a, b), d = dice(a, b);
        worst = std::max(worst, std::abs(d - 2.0 * j / (1.0 + j)));
    }
    double d_of_062 = std::round(2.0 * 0.62 / 1.62 * 100.0) / 100.0;
    bool pass = worst <= 1e-12 && d_of_062 == 0.77;
    return {pass, false,
            fmt("max |D - 2J/(1+J)| = %.2e over 1000 pairs; paper pair 0.62 -> %.2f", worst,
                d_of_062)};
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion_synthetic_pipeline() {
    double clean_sum = 0.0;
    const int n = 20;
    for (uint64_t i = 0; i < n; ++i) {
        SynthSpec spec = random_lesion_spec(250, 0, false, 0.01, 600 + i);
        SynthResult s = synth_lesion(spec);
        ClusterConfig cc;
        cc.seed = i;
        clean_sum += jaccard(cluster_segment(s.image, cc), s.mask);
    }
    double clean_mean = clean_sum / n;

    double with_sum = 0.0, without_sum = 0.0;
    for (uint64_t i = 0; i < n; ++i) {
        SynthSpec spec = random_lesion_spec(250, 10, false, 0.01, 700 + i);
        SynthResult s = synth_lesion(spec);
        ClusterConfig with_hair;
        with_hair.seed = i;
        ClusterConfig without_hair = with_hair;
        without_hair.hair_enabled = false;
        with_sum += jaccard(cluster_segment(s.image, with_hair), s.mask);
        without_sum += jaccard(cluster_segment(s.image, without_hair), s.mask);
    }
    double with_mean = with_sum / n, without_mean = without_sum / n;
    bool pass = clean_mean >= 0.85 && with_mean > without_mean;
    return {pass, false,
            fmt("clean mean J %.4f (>= 0.85); hairy: with removal %.4f > without %.4f", clean_mean,
                with_mean, without_mean)};
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion_geometry() {
    // real-valued recurrence oracle
    std::function<double(double, int)> recurrence = [&](double input, int depth) {
        if (depth == 0) return input - 4.0;
        return 2.0 * recurrence((input - 4.0) / 2.0, depth - 1) - 4.0;
    };

    for (int depth = 1; depth <= 4; ++depth) {
        GeometryPlan plan = geometry_solve(250, depth);
        if (plan.output_size != static_cast<int>(recurrence(plan.input_size, depth))) {
            return {false, false, fmt("solver breaks the recurrence at depth %.0f",
                                      static_cast<double>(depth))};
        }
        if (valid_output_size(plan.input_size, depth) != plan.output_size) {
            return {false, false, "solver trace mismatch"};
        }
        for (int s : plan.down_sizes) {
            if (s % 2 != 0) return {false, false, "odd pre-pool size"};
        }
    }
    if (valid_output_size(572, 4) != 388) return {false, false, "572 -> 388 failed"};

    // run log for the paper's 342/250 framing
    std::printf("    geometry log: depth 3, input 342 -> output %d "
                "(paper-consistent: covers the 250-px content)\n",
                static_cast<int>(recurrence(342, 3)));
    std::printf("    geometry log: depth 4, input 342 -> output %d "
                "(inconsistent with the paper's stated 4 contracting steps)\n",
                static_cast<int>(recurrence(342, 4)));
    bool pass = static_cast<int>(recurrence(342, 3)) == 254 &&
                static_cast<int>(recurrence(342, 4)) == 158;
    return {pass, false, "recurrence exact for depths 1-4; 572 -> 388"};
}

// ---------------------------------------------------------------- criterion 8

Outcome criterion_determinism_formats() {
    testutil::TempDir tmp("acc_det");

    // fold plans
    FoldPlan p1 = make_folds(40, 5, 0.9, 77);
    FoldPlan p2 = make_folds(40, 5, 0.9, 77);
    std::vector<std::string> ids;
    for (int i = 0; i < 40; ++i) ids.push_back("s" + std::to_string(i));
    save_fold_plan(p1, ids, tmp / "f1.txt");
    save_fold_plan(p2, ids, tmp / "f2.txt");
    if (!testutil::same_bytes(tmp / "f1.txt", tmp / "f2.txt")) {
        return {false, false, "fold plans differ across reruns"};
    }

    // checkpoints from a short training run
    SynthSpec spec = random_lesion_spec(64, 0, false, 0.01, 5);
    SynthResult s = synth_lesion(spec);
    UNetConfig cfg;
    cfg.depth = 1;
    cfg.base_features = 2;
    cfg.in_channels = 5;
    cfg.content_size = 40;
    cfg.seed = 8;
    TrainConfig tc;
    tc.iterations = 12;
    tc.seed = 8;
    auto train_to = [&](const std::filesystem::path& path) {
        ParamStore params = build_model(cfg);
        TrainResult r = train(params, cfg, InputMode::kEnhanced1B,
                              [&](int) { return std::make_pair(s.image, s.mask); }, 1, tc);
        save_checkpoint(params, {cfg, InputMode::kEnhanced1B, tc.iterations, r.loss_trace.back()},
                        path);
    };
    train_to(tmp / "c1.dseg");
    train_to(tmp / "c2.dseg");
    if (!testutil::same_bytes(tmp / "c1.dseg", tmp / "c2.dseg")) {
        return {false, false, "checkpoints differ across reruns"};
    }

    // masks: cluster segmentation twice, and PNG strictly {0,255}
    ClusterConfig cc;
    cc.seed = 4;
    BinaryMask m1 = cluster_segment(s.image, cc);
    BinaryMask m2 = cluster_segment(s.image, cc);
    save_mask(m1, tmp / "m1.png");
    save_mask(m2, tmp / "m2.png");
    if (!testutil::same_bytes(tmp / "m1.png", tmp / "m2.png")) {
        return {false, false, "masks differ across reruns"};
    }
    RgbImage decoded = load_image(tmp / "m1.png");
    for (double v : decoded.data) {
        if (v != 0.0 && v != 1.0) return {false, false, "mask PNG is not strictly {0,255}"};
    }
    if (!(load_mask(tmp / "m1.png") == m1)) return {false, false, "mask roundtrip failed"};

    // parameter files round-trip losslessly
    ParamStore store;
    Rng rng(12);
    store.create("x.weight", random_tensor({3, 2, 3, 3}, rng));
    store.create("x.bias", random_tensor({3}, rng));
    store.save(tmp / "p.dseg");
    if (!(ParamStore::load(tmp / "p.dseg") == store)) {
        return {false, false, "parameter file roundtrip lost data"};
    }

    return {true, false, "fold plans, checkpoints, masks bit-identical; formats exact"};
}

}  // namespace

int main() {
    Runner runner;
    runner.run(1, "paper-number reproduction (ISIC-2017, data-dependent)", criterion_paper_number);
    runner.run(2, "gradient integrity", criterion_gradients);
    runner.run(3, "overfit sanity", criterion_overfit);
    runner.run(4, "FCM correctness", criterion_fcm);
    runner.run(5, "metric identities", criterion_metric_identity);
    runner.run(6, "synthetic pipeline quality", criterion_synthetic_pipeline);
    runner.run(7, "geometry solver", criterion_geometry);
    runner.run(8, "determinism and formats", criterion_determinism_formats);

    if (runner.failures == 0) {
        std::printf("acceptance: all criteria passed (skips are data-dependent)\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) failed\n", runner.failures);
    return 1;
}
