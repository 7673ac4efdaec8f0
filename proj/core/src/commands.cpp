#include "dermseg/commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "dermseg/dataio.hpp"
#include "dermseg/errors.hpp"
#include "dermseg/fuzzyclust.hpp"
#include "dermseg/manifest.hpp"
#include "dermseg/metrics.hpp"
#include "dermseg/rng.hpp"
#include "dermseg/unet.hpp"

namespace dermseg {

namespace fs = std::filesystem;

namespace {

// Ordered fan-out: results land by index, so reductions stay deterministic.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (true) {
            int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

ClusterConfig cluster_config_from(const Config& cfg, uint64_t seed) {
    ClusterConfig cc;
    cc.fcm_c = cfg.get_int("fcm.c");
    cc.fcm_m = cfg.get_double("fcm.m");
    cc.fcm_tol = cfg.get_double("fcm.tol");
    cc.fcm_max_iter = cfg.get_int("fcm.max_iter");
    cc.kmeans_k = cfg.get_int("kmeans.k");
    cc.kmeans_restarts = cfg.get_int("kmeans.restarts");
    cc.hair_enabled = cfg.get_bool("hair.enabled");
    cc.hair_radius = cfg.get_int("hair.radius");
    cc.hair_thresh = cfg.get_double("hair.thresh");
    cc.border_lum_thresh = cfg.get_double("border.lum_thresh");
    cc.seed = seed;
    return cc;
}

UNetConfig unet_config_from(const Config& cfg, InputMode mode, uint64_t seed) {
    UNetConfig uc;
    uc.depth = cfg.get_int("unet.depth");
    uc.base_features = cfg.get_int("unet.base_features");
    uc.dropout_p = cfg.get_double("unet.dropout");
    uc.content_size = cfg.get_int("unet.content_size");
    uc.in_channels = mode_channels(mode);
    uc.seed = seed;
    return uc;
}

void echo_config(Manifest& m, const Config& cfg) {
    for (const auto& [key, value] : cfg.values()) m.set("config." + key, value);
}

std::string sample_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "synth_%04d", index);
    return buf;
}

int report_error(const std::exception& e, int code) {
    std::cerr << "error: " << e.what() << "\n";
    return code;
}

}  // namespace

int cmd_synth(const SynthOptions& opt) {
    try {
        fs::create_directories(opt.out_dir / "images");
        fs::create_directories(opt.out_dir / "masks");

        Manifest manifest;
        manifest.set("command", std::string("synth"));
        manifest.set("count", static_cast<int64_t>(opt.count));
        manifest.set("seed", opt.seed);
        manifest.set("hairs", static_cast<int64_t>(opt.hairs));
        manifest.set("vignette", std::string(opt.vignette ? "true" : "false"));
        manifest.set("canvas", static_cast<int64_t>(opt.canvas));
        manifest.set_double("noise_sigma", opt.noise_sigma);

        for (int i = 0; i < opt.count; ++i) {
            SynthSpec spec = random_lesion_spec(opt.canvas, opt.hairs, opt.vignette,
                                                opt.noise_sigma, Rng::mix(opt.seed, i));
            SynthResult sample = synth_lesion(spec);
            std::string id = sample_name(i);
            fs::path image_path = opt.out_dir / "images" / (id + ".png");
            fs::path mask_path = opt.out_dir / "masks" / (id + "_segmentation.png");
            save_image_png(sample.image, image_path);
            save_mask(sample.mask, mask_path);
            manifest.add_artifact(image_path, id + ".png");
            manifest.add_artifact(mask_path, id + "_segmentation.png");
        }
        manifest.write(opt.out_dir / "manifest.txt");
        return kExitOk;
    } catch (const IoError& e) {
        return report_error(e, kExitIo);
    } catch (const std::exception& e) {
        return report_error(e, kExitIo);
    }
}

namespace {

struct LoadedModel {
    ParamStore params;
    CheckpointMeta meta;
};

BinaryMask segment_one(const std::string& method, const RgbImage& img, LoadedModel* model,
                       const ClusterConfig& cc, double threshold) {
    if (method == "cluster") return cluster_segment(img, cc);
    Plane prob = predict_prob(model->params, model->meta.config, model->meta.mode, img);
    Algorithm alg = method == "unet-a" ? Algorithm::k1A : Algorithm::k1B;
    return binarize_and_clean(prob, threshold, alg);
}

}  // namespace

int cmd_segment(const SegmentOptions& opt) {
    bool needs_model = opt.method == "unet-a" || opt.method == "unet-b";
    if (!needs_model && opt.method != "cluster") {
        std::cerr << "error: unknown method " << opt.method << "\n";
        return kExitIo;
    }
    LoadedModel model;
    if (needs_model) {
        if (opt.model.empty() || !fs::exists(opt.model)) {
            std::cerr << "error: method " << opt.method << " requires --model\n";
            return kExitMissingModel;
        }
        try {
            auto [params, meta] = load_checkpoint(opt.model);
            model.params = std::move(params);
            model.meta = meta;
        } catch (const std::exception& e) {
            return report_error(e, kExitMissingModel);
        }
    }

    try {
        ClusterConfig cc = cluster_config_from(opt.config, opt.seed);
        Manifest manifest;
        manifest.set("command", std::string("segment"));
        manifest.set("method", opt.method);
        manifest.set("seed", opt.seed);
        manifest.set_double("threshold", opt.threshold);
        echo_config(manifest, opt.config);

        if (fs::is_directory(opt.input)) {
            DatasetCatalog catalog = scan_catalog(opt.input);
            fs::create_directories(opt.out);
            int n = static_cast<int>(catalog.samples.size());
            std::vector<fs::path> outputs(n);
            parallel_for(n, opt.jobs, [&](int i) {
                const CatalogSample& sample = catalog.samples[i];
                RgbImage img = load_image(sample.image_path);
                ClusterConfig per = cc;
                per.seed = Rng::mix(opt.seed, static_cast<uint64_t>(i));
                BinaryMask mask = segment_one(opt.method, img, &model, per, opt.threshold);
                outputs[i] = opt.out / (sample.id + "_mask.png");
                save_mask(mask, outputs[i]);
            });
            for (int i = 0; i < n; ++i) {
                manifest.add_artifact(outputs[i], catalog.samples[i].id + "_mask.png");
            }
            manifest.write(opt.out / "manifest.txt");
        } else {
            RgbImage img = load_image(opt.input);
            BinaryMask mask = segment_one(opt.method, img, &model, cc, opt.threshold);
            if (opt.out.has_parent_path()) fs::create_directories(opt.out.parent_path());
            save_mask(mask, opt.out);
            manifest.add_artifact(opt.out, opt.out.filename().string());
            manifest.write(opt.out.string() + ".manifest");
        }
        return kExitOk;
    } catch (const IoError& e) {
        return report_error(e, kExitIo);
    } catch (const std::exception& e) {
        return report_error(e, kExitIo);
    }
}

namespace {

InputMode parse_mode(const std::string& name) {
    if (name == "1a") return InputMode::kRaw1A;
    if (name == "1b") return InputMode::kEnhanced1B;
    throw std::invalid_argument("mode must be 1a or 1b");
}

// Catalog samples that actually carry masks; warns about the rest.
std::vector<CatalogSample> masked_samples(const DatasetCatalog& catalog) {
    std::vector<CatalogSample> out;
    for (const CatalogSample& s : catalog.samples) {
        if (s.mask_path) {
            out.push_back(s);
        } else {
            std::cerr << "warning: skipping sample without mask: " << s.id << "\n";
        }
    }
    return out;
}

}  // namespace

int cmd_train(const TrainOptions& opt) {
    try {
        InputMode mode = parse_mode(opt.mode);
        DatasetCatalog catalog = scan_catalog(opt.data_dir);
        std::vector<CatalogSample> samples = masked_samples(catalog);
        if (samples.empty()) throw IoError("no samples with masks under " + opt.data_dir.string());

        UNetConfig ucfg = unet_config_from(opt.config, mode, opt.seed);
        TrainConfig tc;
        tc.iterations = opt.iterations > 0 ? opt.iterations : opt.config.get_int("train.iterations");
        tc.lr = opt.config.get_double("train.lr");
        tc.augment = opt.config.get_bool("train.augment");
        tc.checkpoint_every = opt.config.get_int("train.checkpoint_every");
        tc.checkpoint_path = opt.out;
        tc.seed = opt.seed;

        if (opt.out.has_parent_path()) fs::create_directories(opt.out.parent_path());
        ParamStore params = build_model(ucfg);
        SampleProvider provider = [&samples](int index) {
            const CatalogSample& s = samples[index];
            return std::make_pair(load_image(s.image_path), load_mask(*s.mask_path));
        };

        TrainResult result;
        try {
            result = train(params, ucfg, mode, provider, static_cast<int>(samples.size()), tc);
        } catch (const NumericError& e) {
            return report_error(e, kExitDiverged);
        }

        fs::path loss_csv = opt.out.string() + ".loss.csv";
        {
            std::ofstream out(loss_csv);
            if (!out) throw IoError("cannot write " + loss_csv.string());
            char buf[64];
            for (size_t i = 0; i < result.loss_trace.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%zu,%.17g", i, result.loss_trace[i]);
                out << buf << "\n";
            }
        }

        Manifest manifest;
        manifest.set("command", std::string("train"));
        manifest.set("mode", opt.mode);
        manifest.set("iterations", static_cast<int64_t>(tc.iterations));
        manifest.set("seed", opt.seed);
        manifest.set("samples", static_cast<int64_t>(samples.size()));
        manifest.set_double("final_loss", result.loss_trace.back());
        echo_config(manifest, opt.config);
        manifest.add_artifact(opt.out, opt.out.filename().string());
        manifest.add_artifact(loss_csv, loss_csv.filename().string());
        manifest.write(opt.out.string() + ".run.manifest");
        return kExitOk;
    } catch (const IoError& e) {
        return report_error(e, kExitIo);
    } catch (const std::exception& e) {
        return report_error(e, kExitIo);
    }
}

namespace {

struct SampleScores {
    double jaccard = 0.0;
    double dice = 0.0;
};

}  // namespace

int cmd_eval(const EvalOptions& opt) {
    try {
        DatasetCatalog catalog = scan_catalog(opt.data_dir);
        std::vector<CatalogSample> samples = masked_samples(catalog);
        int n = static_cast<int>(samples.size());
        if (n == 0) throw IoError("no samples with masks under " + opt.data_dir.string());

        FoldPlan plan = make_folds(n, opt.folds, opt.train_frac, opt.seed);
        fs::create_directories(opt.out_dir);
        {
            std::vector<std::string> ids;
            for (const CatalogSample& s : samples) ids.push_back(s.id);
            save_fold_plan(plan, ids, opt.out_dir / "folds.txt");
        }

        Manifest manifest;
        manifest.set("command", std::string("eval"));
        manifest.set("folds", static_cast<int64_t>(opt.folds));
        manifest.set("seed", opt.seed);
        manifest.set("samples", static_cast<int64_t>(n));
        echo_config(manifest, opt.config);

        std::vector<EvalRow> rows;
        for (const std::string& method : opt.methods) {
            if (method == "cluster") {
                // Unsupervised: every sample is scored once and folds reuse
                // the cached scores, matching the paper's per-fold reporting
                // of a training-free method.
                std::vector<SampleScores> scores(n);
                parallel_for(n, opt.jobs, [&](int i) {
                    RgbImage img = load_image(samples[i].image_path);
                    BinaryMask truth = load_mask(*samples[i].mask_path);
                    ClusterConfig cc = cluster_config_from(
                        opt.config, Rng::mix(opt.seed, static_cast<uint64_t>(i)));
                    BinaryMask mask = cluster_segment(img, cc);
                    scores[i] = {jaccard(mask, truth), dice(mask, truth)};
                });
                for (size_t f = 0; f < plan.folds.size(); ++f) {
                    EvalRow row;
                    row.fold = static_cast<int>(f) + 1;
                    row.algorithm = Algorithm::kCluster;
                    for (int idx : plan.folds[f].validation_indices) {
                        row.jaccard += scores[idx].jaccard;
                        row.dice += scores[idx].dice;
                    }
                    row.jaccard /= static_cast<double>(plan.folds[f].validation_indices.size());
                    row.dice /= static_cast<double>(plan.folds[f].validation_indices.size());
                    rows.push_back(row);
                }
                EvalRow full;
                full.fold = kFullDataset;
                full.algorithm = Algorithm::kCluster;
                for (const SampleScores& s : scores) {
                    full.jaccard += s.jaccard;
                    full.dice += s.dice;
                }
                full.jaccard /= static_cast<double>(n);
                full.dice /= static_cast<double>(n);
                rows.push_back(full);
                manifest.set_double("full_dataset.cluster.jaccard", full.jaccard);
            } else if (method == "unet-a" || method == "unet-b") {
                InputMode mode = method == "unet-a" ? InputMode::kRaw1A : InputMode::kEnhanced1B;
                Algorithm alg = method == "unet-a" ? Algorithm::k1A : Algorithm::k1B;
                bool threshold_on_test = opt.config.get_bool("eval.threshold_on_test");

                auto load_pair = [&](int index) {
                    return std::make_pair(load_image(samples[index].image_path),
                                          load_mask(*samples[index].mask_path));
                };

                for (size_t f = 0; f < plan.folds.size(); ++f) {
                    uint64_t fold_seed = Rng::mix(opt.seed, 5000 + f);
                    std::vector<int> train_idx = plan.folds[f].train_indices;
                    std::vector<int> holdout;
                    if (alg == Algorithm::k1B && !threshold_on_test) {
                        // threshold is tuned on a held-out slice of the
                        // training data unless the paper's literal
                        // test-set search is requested
                        Rng rng(Rng::mix(fold_seed, 3));
                        rng.shuffle(train_idx);
                        int h = std::max(1, static_cast<int>(std::llround(0.1 * train_idx.size())));
                        holdout.assign(train_idx.begin(), train_idx.begin() + h);
                        train_idx.erase(train_idx.begin(), train_idx.begin() + h);
                        std::sort(train_idx.begin(), train_idx.end());
                    }

                    UNetConfig ucfg = unet_config_from(opt.config, mode, fold_seed);
                    TrainConfig tc;
                    tc.iterations = opt.config.get_int("train.iterations");
                    tc.lr = opt.config.get_double("train.lr");
                    tc.augment = opt.config.get_bool("train.augment");
                    tc.seed = fold_seed;
                    ParamStore params = build_model(ucfg);
                    SampleProvider provider = [&](int i) { return load_pair(train_idx[i]); };
                    train(params, ucfg, mode, provider, static_cast<int>(train_idx.size()), tc);

                    double tau = 0.5;
                    if (alg == Algorithm::k1B) {
                        const std::vector<int>& source =
                            threshold_on_test ? plan.folds[f].validation_indices : holdout;
                        std::vector<ProbMap> probs(source.size());
                        std::vector<BinaryMask> truths(source.size());
                        parallel_for(static_cast<int>(source.size()), opt.jobs, [&](int i) {
                            auto [img, truth] = load_pair(source[i]);
                            probs[i] = predict_prob(params, ucfg, mode, img);
                            truths[i] = std::move(truth);
                        });
                        tau = optimize_threshold(probs, truths);
                        manifest.set_double("threshold." + method + ".fold" + std::to_string(f + 1),
                                            tau);
                        manifest.set("threshold." + method + ".source",
                                     std::string(threshold_on_test ? "test" : "train-holdout"));
                    }

                    const std::vector<int>& val = plan.folds[f].validation_indices;
                    std::vector<SampleScores> scores(val.size());
                    parallel_for(static_cast<int>(val.size()), opt.jobs, [&](int i) {
                        auto [img, truth] = load_pair(val[i]);
                        Plane prob = predict_prob(params, ucfg, mode, img);
                        BinaryMask mask = binarize_and_clean(prob, tau, alg);
                        scores[i] = {jaccard(mask, truth), dice(mask, truth)};
                    });
                    EvalRow row;
                    row.fold = static_cast<int>(f) + 1;
                    row.algorithm = alg;
                    for (const SampleScores& s : scores) {
                        row.jaccard += s.jaccard;
                        row.dice += s.dice;
                    }
                    row.jaccard /= static_cast<double>(val.size());
                    row.dice /= static_cast<double>(val.size());
                    rows.push_back(row);
                }
            } else {
                throw std::invalid_argument("unknown method: " + method);
            }
        }

        ReportTable table = emit_report(rows);
        {
            std::ofstream csv(opt.out_dir / "report.csv");
            if (!csv) throw IoError("cannot write report.csv");
            csv << report_csv(table);
            std::ofstream txt(opt.out_dir / "report.txt");
            if (!txt) throw IoError("cannot write report.txt");
            txt << report_text(table);
        }
        std::cout << report_text(table);
        manifest.add_artifact(opt.out_dir / "report.csv", "report.csv");
        manifest.add_artifact(opt.out_dir / "report.txt", "report.txt");
        manifest.add_artifact(opt.out_dir / "folds.txt", "folds.txt");
        manifest.write(opt.out_dir / "manifest.txt");
        return kExitOk;
    } catch (const NumericError& e) {
        return report_error(e, kExitDiverged);
    } catch (const IoError& e) {
        return report_error(e, kExitIo);
    } catch (const std::exception& e) {
        return report_error(e, kExitIo);
    }
}

}  // namespace dermseg
