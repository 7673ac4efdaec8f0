#include "dermseg/unet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dermseg/errors.hpp"
#include "dermseg/optim.hpp"
#include "dermseg/rng.hpp"

namespace dermseg {

int mode_channels(InputMode mode) { return mode == InputMode::kRaw1A ? 3 : 5; }

namespace {

Tensor he_init(const std::vector<int>& shape, int fan_in, Rng& rng) {
    Tensor t(shape);
    double sigma = std::sqrt(2.0 / fan_in);
    for (double& v : t.data) v = rng.truncated_normal(sigma);
    return t;
}

void add_conv(ParamStore& store, Rng& rng, const std::string& prefix, int cin, int cout, int k) {
    store.create(prefix + ".weight", he_init({cout, cin, k, k}, k * k * cin, rng));
    store.create(prefix + ".bias", Tensor({cout}, 0.0));
}

void add_upconv(ParamStore& store, Rng& rng, const std::string& prefix, int cin, int cout) {
    store.create(prefix + ".weight", he_init({cin, cout, 2, 2}, 4 * cin, rng));
    store.create(prefix + ".bias", Tensor({cout}, 0.0));
}

}  // namespace

ParamStore build_model(const UNetConfig& cfg) {
    if (cfg.depth < 1 || cfg.base_features < 1) {
        throw std::invalid_argument("build_model: depth and base_features must be >= 1");
    }
    ParamStore store;
    Rng rng(cfg.seed);
    int k = cfg.kernel;

    int prev = cfg.in_channels;
    for (int level = 0; level < cfg.depth; ++level) {
        int features = cfg.base_features << level;
        std::string prefix = "down" + std::to_string(level);
        add_conv(store, rng, prefix + ".conv1", prev, features, k);
        add_conv(store, rng, prefix + ".conv2", features, features, k);
        prev = features;
    }
    int bottleneck = cfg.base_features << cfg.depth;
    add_conv(store, rng, "bottleneck.conv1", prev, bottleneck, k);
    add_conv(store, rng, "bottleneck.conv2", bottleneck, bottleneck, k);

    int deeper = bottleneck;
    for (int level = cfg.depth - 1; level >= 0; --level) {
        int features = cfg.base_features << level;
        std::string prefix = "up" + std::to_string(level);
        add_upconv(store, rng, prefix + ".upconv", deeper, features);
        add_conv(store, rng, prefix + ".conv1", 2 * features, features, k);
        add_conv(store, rng, prefix + ".conv2", features, features, k);
        deeper = features;
    }
    add_conv(store, rng, "head", cfg.base_features, cfg.classes, 1);
    return store;
}

namespace {

Graph::NodeId conv_block(Graph& g, ParamStore& params, const std::string& prefix,
                         Graph::NodeId x) {
    x = g.conv2d_valid(x, g.param(prefix + ".conv1.weight", params.value(prefix + ".conv1.weight")),
                       g.param(prefix + ".conv1.bias", params.value(prefix + ".conv1.bias")));
    x = g.relu(x);
    x = g.conv2d_valid(x, g.param(prefix + ".conv2.weight", params.value(prefix + ".conv2.weight")),
                       g.param(prefix + ".conv2.bias", params.value(prefix + ".conv2.bias")));
    return g.relu(x);
}

}  // namespace

Graph::NodeId unet_forward(Graph& g, ParamStore& params, const UNetConfig& cfg, Tensor input,
                           bool train_mode, uint64_t dropout_seed) {
    return unet_forward(g, params, cfg, g.input(std::move(input), false), train_mode,
                        dropout_seed);
}

Graph::NodeId unet_forward(Graph& g, ParamStore& params, const UNetConfig& cfg,
                           Graph::NodeId input, bool train_mode, uint64_t dropout_seed) {
    if (g.value(input).rank() != 3 || g.value(input).dim(0) != cfg.in_channels) {
        throw std::invalid_argument("unet_forward: input channels do not match the config");
    }
    Graph::NodeId x = input;
    std::vector<Graph::NodeId> skips;
    for (int level = 0; level < cfg.depth; ++level) {
        x = conv_block(g, params, "down" + std::to_string(level), x);
        if (level == cfg.depth - 1) {
            x = g.dropout(x, cfg.dropout_p, train_mode, Rng::mix(dropout_seed, 100 + level));
        }
        skips.push_back(x);
        x = g.maxpool2(x);
    }
    x = conv_block(g, params, "bottleneck", x);
    x = g.dropout(x, cfg.dropout_p, train_mode, Rng::mix(dropout_seed, 200));
    for (int level = cfg.depth - 1; level >= 0; --level) {
        std::string prefix = "up" + std::to_string(level);
        x = g.upconv2(x, g.param(prefix + ".upconv.weight", params.value(prefix + ".upconv.weight")),
                      g.param(prefix + ".upconv.bias", params.value(prefix + ".upconv.bias")));
        x = g.relu(x);
        x = g.center_crop_concat(skips[level], x);
        x = conv_block(g, params, prefix, x);
    }
    return g.conv2d_valid(x, g.param("head.weight", params.value("head.weight")),
                          g.param("head.bias", params.value("head.bias")));
}

namespace {

RgbImage hflip(const RgbImage& img) {
    RgbImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
        }
    }
    return out;
}

BinaryMask hflip(const BinaryMask& m) {
    BinaryMask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) out.set(x, y, m.get(m.width - 1 - x, y));
    }
    return out;
}

// counter-clockwise quarter turn: (x, y) <- (w-1-y', x') on the source
RgbImage rot90(const RgbImage& img) {
    RgbImage out(img.height, img.width);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(img.width - 1 - y, x, c);
        }
    }
    return out;
}

BinaryMask rot90(const BinaryMask& m) {
    BinaryMask out(m.height, m.width);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) out.set(x, y, m.get(m.width - 1 - y, x));
    }
    return out;
}

template <typename T>
T rot180(const T& v) {
    return rot90(rot90(v));
}

}  // namespace

std::array<std::pair<RgbImage, BinaryMask>, 4> augment4(const RgbImage& img,
                                                        const BinaryMask& mask) {
    if (img.width != mask.width || img.height != mask.height) {
        throw std::invalid_argument("augment4: image and mask dimensions differ");
    }
    return {std::make_pair(img, mask), {hflip(img), hflip(mask)},
            {rot90(img), rot90(mask)}, {rot180(img), rot180(mask)}};
}

namespace {

Tensor net_input_tensor(const NetInput& in) {
    Tensor t({in.channels, in.size, in.size});
    t.data = in.data;
    return t;
}

// Truth mask laid out on the network's output window; padding is background.
BinaryMask output_target(const BinaryMask& scaled_mask, const InputGeometry& geo) {
    BinaryMask target(geo.output_size, geo.output_size);
    for (int y = 0; y < scaled_mask.height; ++y) {
        for (int x = 0; x < scaled_mask.width; ++x) {
            if (!scaled_mask.get(x, y)) continue;
            int ox = geo.out_x + x, oy = geo.out_y + y;
            if (ox >= 0 && ox < geo.output_size && oy >= 0 && oy < geo.output_size) {
                target.set(ox, oy, true);
            }
        }
    }
    return target;
}

}  // namespace

TrainResult train(ParamStore& params, const UNetConfig& cfg, InputMode mode,
                  const SampleProvider& provider, int sample_count, const TrainConfig& tc) {
    if (sample_count < 1) throw std::invalid_argument("train: need at least one sample");
    if (tc.iterations < 1) throw std::invalid_argument("train: iterations must be >= 1");

    GeometryPlan plan = geometry_solve(cfg.content_size, cfg.depth);
    AdamState adam({tc.lr});
    Rng order_rng(Rng::mix(tc.seed, 7));

    int variants = tc.augment ? 4 : 1;
    std::vector<int> order;
    size_t cursor = 0;
    auto next_draw = [&]() {
        if (cursor >= order.size()) {
            order.resize(static_cast<size_t>(sample_count) * variants);
            for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            order_rng.shuffle(order);
            cursor = 0;
        }
        return order[cursor++];
    };

    // Small datasets keep their assembled inputs; the overfit and desk-scale
    // paths hit the same few samples thousands of times.
    const bool cache = sample_count <= 16;
    std::vector<std::pair<Tensor, BinaryMask>> cached(
        cache ? static_cast<size_t>(sample_count) * variants : 0,
        {Tensor{}, BinaryMask{}});
    std::vector<uint8_t> cached_ok(cache ? cached.size() : 0, 0);

    auto assemble = [&](int draw) {
        int sample_idx = draw / variants;
        int variant = draw % variants;
        auto [img, mask] = provider(sample_idx);
        if (variant > 0) {
            auto variants4 = augment4(img, mask);
            img = std::move(variants4[variant].first);
            mask = std::move(variants4[variant].second);
        }
        RgbImage scaled = rescale_max_dim(img, cfg.content_size);
        BinaryMask scaled_mask = resize_nearest(mask, scaled.width, scaled.height);
        NetInput in = assemble_input(scaled, mode, plan);
        return std::make_pair(net_input_tensor(in), output_target(scaled_mask, in.geometry));
    };

    TrainResult result;
    result.loss_trace.reserve(tc.iterations);
    for (int iter = 0; iter < tc.iterations; ++iter) {
        int draw = next_draw();
        const Tensor* input = nullptr;
        const BinaryMask* target = nullptr;
        std::pair<Tensor, BinaryMask> scratch;
        if (cache) {
            if (!cached_ok[draw]) {
                cached[draw] = assemble(draw);
                cached_ok[draw] = 1;
            }
            input = &cached[draw].first;
            target = &cached[draw].second;
        } else {
            scratch = assemble(draw);
            input = &scratch.first;
            target = &scratch.second;
        }

        double loss_value;
        try {
            Graph g;
            Graph::NodeId loss =
                g.softmax_ce_loss(unet_forward(g, params, cfg, *input, true,
                                               Rng::mix(tc.seed, 1000 + iter)),
                                  *target);
            loss_value = g.value(loss).data[0];
            if (!std::isfinite(loss_value)) throw NumericError("train: non-finite loss");
            g.backward(loss);
            params.zero_grad();
            for (const auto& [name, node] : g.params()) {
                Tensor& dst = params.grad(name);
                const Tensor& src = g.grad(node);
                for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
            }
        } catch (const NumericError&) {
            if (!tc.checkpoint_path.empty()) {
                CheckpointMeta meta{cfg, mode, iter, std::nan("")};
                save_checkpoint(params, meta,
                                tc.checkpoint_path.string() + ".diverged");
            }
            throw;
        }
        adam.step(params);
        result.loss_trace.push_back(loss_value);

        if (tc.checkpoint_every > 0 && !tc.checkpoint_path.empty() &&
            (iter + 1) % tc.checkpoint_every == 0 && iter + 1 < tc.iterations) {
            CheckpointMeta meta{cfg, mode, iter + 1, loss_value};
            save_checkpoint(params, meta, tc.checkpoint_path.string() + ".partial");
        }
    }

    if (!tc.checkpoint_path.empty()) {
        CheckpointMeta meta{cfg, mode, tc.iterations, result.loss_trace.back()};
        save_checkpoint(params, meta, tc.checkpoint_path);
    }
    return result;
}

Plane predict_prob(ParamStore& params, const UNetConfig& cfg, InputMode mode,
                   const RgbImage& img) {
    GeometryPlan plan = geometry_solve(cfg.content_size, cfg.depth);
    RgbImage scaled = rescale_max_dim(img, cfg.content_size);
    NetInput in = assemble_input(scaled, mode, plan);
    const InputGeometry geo = in.geometry;

    Graph g;
    Graph::NodeId logits = unet_forward(g, params, cfg, net_input_tensor(in), false, 0);
    const Tensor& lg = g.value(logits);
    int out = lg.dim(1);
    size_t n = static_cast<size_t>(out) * out;

    Plane full(out, out);
    for (size_t i = 0; i < n; ++i) {
        double l0 = lg.data[i], l1 = lg.data[n + i];
        double m = std::max(l0, l1);
        double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
        full.data[i] = e1 / (e0 + e1);
    }

    Plane content(geo.scaled_w, geo.scaled_h);
    for (int y = 0; y < geo.scaled_h; ++y) {
        for (int x = 0; x < geo.scaled_w; ++x) {
            content.at(x, y) = full.at(geo.out_x + x, geo.out_y + y);
        }
    }
    return resize_bilinear(content, img.width, img.height);
}

namespace {

std::string mode_name(InputMode mode) { return mode == InputMode::kRaw1A ? "1a" : "1b"; }

InputMode mode_from_name(const std::string& name) {
    if (name == "1a") return InputMode::kRaw1A;
    if (name == "1b") return InputMode::kEnhanced1B;
    throw IoError("checkpoint manifest: unknown mode " + name);
}

}  // namespace

void save_checkpoint(const ParamStore& params, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
    params.save(path);
    std::ofstream out(path.string() + ".manifest");
    if (!out) throw IoError("cannot write checkpoint manifest for " + path.string());
    char loss[64];
    std::snprintf(loss, sizeof(loss), "%.17g", meta.final_loss);
    out << "unet.depth=" << meta.config.depth << "\n"
        << "unet.base_features=" << meta.config.base_features << "\n"
        << "unet.in_channels=" << meta.config.in_channels << "\n"
        << "unet.classes=" << meta.config.classes << "\n"
        << "unet.kernel=" << meta.config.kernel << "\n"
        << "unet.dropout=" << meta.config.dropout_p << "\n"
        << "unet.content_size=" << meta.config.content_size << "\n"
        << "unet.seed=" << meta.config.seed << "\n"
        << "mode=" << mode_name(meta.mode) << "\n"
        << "iterations=" << meta.iterations_done << "\n"
        << "loss=" << loss << "\n";
}

std::pair<ParamStore, CheckpointMeta> load_checkpoint(const std::filesystem::path& path) {
    ParamStore store = ParamStore::load(path);
    CheckpointMeta meta;
    std::ifstream in(path.string() + ".manifest");
    if (!in) throw IoError("missing checkpoint manifest: " + path.string() + ".manifest");
    std::string line;
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        if (key == "unet.depth") meta.config.depth = std::stoi(value);
        else if (key == "unet.base_features") meta.config.base_features = std::stoi(value);
        else if (key == "unet.in_channels") meta.config.in_channels = std::stoi(value);
        else if (key == "unet.classes") meta.config.classes = std::stoi(value);
        else if (key == "unet.kernel") meta.config.kernel = std::stoi(value);
        else if (key == "unet.dropout") meta.config.dropout_p = std::stod(value);
        else if (key == "unet.content_size") meta.config.content_size = std::stoi(value);
        else if (key == "unet.seed") meta.config.seed = std::stoull(value);
        else if (key == "mode") meta.mode = mode_from_name(value);
        else if (key == "iterations") meta.iterations_done = std::stoi(value);
        else if (key == "loss") meta.final_loss = std::stod(value);
    }
    return {std::move(store), meta};
}

}  // namespace dermseg
