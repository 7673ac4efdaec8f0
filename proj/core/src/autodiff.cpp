#include "dermseg/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dermseg/errors.hpp"
#include "dermseg/rng.hpp"

namespace dermseg {

Graph::Node& Graph::node_at(NodeId id) {
    if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) {
        throw std::invalid_argument("Graph: unknown node id");
    }
    return nodes_[id];
}

const Graph::Node& Graph::node_at(NodeId id) const {
    if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) {
        throw std::invalid_argument("Graph: unknown node id");
    }
    return nodes_[id];
}

const Tensor& Graph::checked_value(NodeId id) const { return node_at(id).value; }

Graph::NodeId Graph::push(Tensor value, bool requires_grad, const char* op_name,
                          std::function<void(Graph&, const Node&)> backward_fn) {
    ensure_finite(value, op_name);
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.backward_fn = std::move(backward_fn);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

Graph::NodeId Graph::input(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, "input", nullptr);
}

Graph::NodeId Graph::param(const std::string& name, const Tensor& value) {
    NodeId id = push(value, true, "param", nullptr);
    params_.emplace_back(name, id);
    return id;
}

void Graph::accumulate(NodeId id, const Tensor& g) {
    Node& n = node_at(id);
    if (!n.requires_grad) return;
    for (size_t i = 0; i < g.data.size(); ++i) n.grad.data[i] += g.data[i];
}

void Graph::accumulate_at(NodeId id, size_t flat_index, double g) {
    Node& n = node_at(id);
    if (!n.requires_grad) return;
    n.grad.data[flat_index] += g;
}

Graph::NodeId Graph::conv2d_valid(NodeId input, NodeId weight, NodeId bias) {
    const Tensor& in = checked_value(input);
    const Tensor& w = checked_value(weight);
    const Tensor& b = checked_value(bias);
    if (in.rank() != 3 || w.rank() != 4 || b.rank() != 1) {
        throw std::invalid_argument("conv2d_valid: expected input (C,H,W), weight (O,C,k,k), bias (O)");
    }
    int cin = in.dim(0), h = in.dim(1), wd = in.dim(2);
    int cout = w.dim(0), k = w.dim(2);
    if (w.dim(1) != cin || w.dim(3) != k || b.dim(0) != cout) {
        throw std::invalid_argument("conv2d_valid: shape mismatch " + in.shape_str() + " vs " +
                                    w.shape_str());
    }
    if (h < k || wd < k) throw std::invalid_argument("conv2d_valid: input smaller than kernel");
    int oh = h - k + 1, ow = wd - k + 1;

    Tensor out({cout, oh, ow});
    for (int co = 0; co < cout; ++co) {
        double* out_ch = out.data.data() + static_cast<size_t>(co) * oh * ow;
        std::fill(out_ch, out_ch + static_cast<size_t>(oh) * ow, b.data[co]);
        for (int ci = 0; ci < cin; ++ci) {
            const double* in_ch = in.data.data() + static_cast<size_t>(ci) * h * wd;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    double wv = w.at4(co, ci, ky, kx);
                    for (int y = 0; y < oh; ++y) {
                        const double* in_row = in_ch + static_cast<size_t>(y + ky) * wd + kx;
                        double* out_row = out_ch + static_cast<size_t>(y) * ow;
                        for (int x = 0; x < ow; ++x) out_row[x] += wv * in_row[x];
                    }
                }
            }
        }
    }

    bool rg = wants_grad(input) || wants_grad(weight) || wants_grad(bias);
    return push(std::move(out), rg, "conv2d_valid", [=](Graph& g, const Node& self) {
        const Tensor& gout = self.grad;
        const Tensor& inv = g.value(input);
        const Tensor& wv = g.value(weight);
        Node& in_node = g.node_at(input);
        Node& w_node = g.node_at(weight);
        Node& b_node = g.node_at(bias);
        for (int co = 0; co < cout; ++co) {
            const double* g_ch = gout.data.data() + static_cast<size_t>(co) * oh * ow;
            if (b_node.requires_grad) {
                double acc = 0.0;
                for (size_t i = 0; i < static_cast<size_t>(oh) * ow; ++i) acc += g_ch[i];
                b_node.grad.data[co] += acc;
            }
            for (int ci = 0; ci < cin; ++ci) {
                const double* in_ch = inv.data.data() + static_cast<size_t>(ci) * h * wd;
                double* gin_ch = in_node.requires_grad
                                     ? in_node.grad.data.data() + static_cast<size_t>(ci) * h * wd
                                     : nullptr;
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        double wval = wv.at4(co, ci, ky, kx);
                        double wacc = 0.0;
                        for (int y = 0; y < oh; ++y) {
                            const double* g_row = g_ch + static_cast<size_t>(y) * ow;
                            const double* in_row = in_ch + static_cast<size_t>(y + ky) * wd + kx;
                            if (gin_ch) {
                                double* gin_row = gin_ch + static_cast<size_t>(y + ky) * wd + kx;
                                for (int x = 0; x < ow; ++x) gin_row[x] += wval * g_row[x];
                            }
                            if (w_node.requires_grad) {
                                for (int x = 0; x < ow; ++x) wacc += g_row[x] * in_row[x];
                            }
                        }
                        if (w_node.requires_grad) w_node.grad.at4(co, ci, ky, kx) += wacc;
                    }
                }
            }
        }
    });
}

Graph::NodeId Graph::maxpool2(NodeId input) {
    const Tensor& in = checked_value(input);
    if (in.rank() != 3) throw std::invalid_argument("maxpool2: expected (C,H,W)");
    int c = in.dim(0), h = in.dim(1), w = in.dim(2);
    if (h % 2 != 0 || w % 2 != 0) throw std::invalid_argument("maxpool2: H and W must be even");
    int oh = h / 2, ow = w / 2;

    Tensor out({c, oh, ow});
    std::vector<int> argmax(out.numel());
    for (int ch = 0; ch < c; ++ch) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                size_t base = (static_cast<size_t>(ch) * h + 2 * y) * w + 2 * x;
                size_t idx[4] = {base, base + 1, base + w, base + w + 1};
                int best = 0;
                for (int i = 1; i < 4; ++i) {
                    if (in.data[idx[i]] > in.data[idx[best]]) best = i;  // ties keep the first
                }
                size_t o = (static_cast<size_t>(ch) * oh + y) * ow + x;
                out.data[o] = in.data[idx[best]];
                argmax[o] = static_cast<int>(idx[best]);
            }
        }
    }

    return push(std::move(out), wants_grad(input), "maxpool2",
                [input, argmax = std::move(argmax)](Graph& g, const Node& self) {
                    Node& in_node = g.node_at(input);
                    if (!in_node.requires_grad) return;
                    for (size_t o = 0; o < argmax.size(); ++o) {
                        in_node.grad.data[argmax[o]] += self.grad.data[o];
                    }
                });
}

Graph::NodeId Graph::upconv2(NodeId input, NodeId weight, NodeId bias) {
    const Tensor& in = checked_value(input);
    const Tensor& w = checked_value(weight);
    const Tensor& b = checked_value(bias);
    if (in.rank() != 3 || w.rank() != 4 || b.rank() != 1) {
        throw std::invalid_argument("upconv2: expected input (C,H,W), weight (C,O,2,2), bias (O)");
    }
    int cin = in.dim(0), h = in.dim(1), wd = in.dim(2);
    int cout = w.dim(1);
    if (w.dim(0) != cin || w.dim(2) != 2 || w.dim(3) != 2 || b.dim(0) != cout) {
        throw std::invalid_argument("upconv2: shape mismatch " + in.shape_str() + " vs " +
                                    w.shape_str());
    }
    int oh = 2 * h, ow = 2 * wd;

    Tensor out({cout, oh, ow}, 0.0);
    for (int co = 0; co < cout; ++co) {
        double* out_ch = out.data.data() + static_cast<size_t>(co) * oh * ow;
        std::fill(out_ch, out_ch + static_cast<size_t>(oh) * ow, b.data[co]);
        for (int ci = 0; ci < cin; ++ci) {
            const double* in_ch = in.data.data() + static_cast<size_t>(ci) * h * wd;
            for (int ky = 0; ky < 2; ++ky) {
                for (int kx = 0; kx < 2; ++kx) {
                    double wv = w.at4(ci, co, ky, kx);
                    for (int y = 0; y < h; ++y) {
                        const double* in_row = in_ch + static_cast<size_t>(y) * wd;
                        double* out_row = out_ch + (static_cast<size_t>(2 * y + ky)) * ow + kx;
                        for (int x = 0; x < wd; ++x) out_row[2 * x] += wv * in_row[x];
                    }
                }
            }
        }
    }

    bool rg = wants_grad(input) || wants_grad(weight) || wants_grad(bias);
    return push(std::move(out), rg, "upconv2", [=](Graph& g, const Node& self) {
        const Tensor& gout = self.grad;
        const Tensor& inv = g.value(input);
        const Tensor& wv = g.value(weight);
        Node& in_node = g.node_at(input);
        Node& w_node = g.node_at(weight);
        Node& b_node = g.node_at(bias);
        for (int co = 0; co < cout; ++co) {
            const double* g_ch = gout.data.data() + static_cast<size_t>(co) * oh * ow;
            if (b_node.requires_grad) {
                double acc = 0.0;
                for (size_t i = 0; i < static_cast<size_t>(oh) * ow; ++i) acc += g_ch[i];
                b_node.grad.data[co] += acc;
            }
            for (int ci = 0; ci < cin; ++ci) {
                const double* in_ch = inv.data.data() + static_cast<size_t>(ci) * h * wd;
                double* gin_ch = in_node.requires_grad
                                     ? in_node.grad.data.data() + static_cast<size_t>(ci) * h * wd
                                     : nullptr;
                for (int ky = 0; ky < 2; ++ky) {
                    for (int kx = 0; kx < 2; ++kx) {
                        double wval = wv.at4(ci, co, ky, kx);
                        double wacc = 0.0;
                        for (int y = 0; y < h; ++y) {
                            const double* g_row = g_ch + (static_cast<size_t>(2 * y + ky)) * ow + kx;
                            const double* in_row = in_ch + static_cast<size_t>(y) * wd;
                            for (int x = 0; x < wd; ++x) {
                                double gv = g_row[2 * x];
                                if (gin_ch) gin_ch[static_cast<size_t>(y) * wd + x] += wval * gv;
                                wacc += gv * in_row[x];
                            }
                        }
                        if (w_node.requires_grad) w_node.grad.at4(ci, co, ky, kx) += wacc;
                    }
                }
            }
        }
    });
}

Graph::NodeId Graph::relu(NodeId input) {
    const Tensor& in = checked_value(input);
    Tensor out = in;
    for (double& v : out.data) v = std::max(0.0, v);
    return push(std::move(out), wants_grad(input), "relu", [input](Graph& g, const Node& self) {
        Node& in_node = g.node_at(input);
        if (!in_node.requires_grad) return;
        const Tensor& inv = in_node.value;
        for (size_t i = 0; i < inv.data.size(); ++i) {
            if (inv.data[i] > 0.0) in_node.grad.data[i] += self.grad.data[i];
        }
    });
}

Graph::NodeId Graph::dropout(NodeId input, double p, bool train, uint64_t seed) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout: p must be in [0,1)");
    if (!train || p == 0.0) return input;  // eval mode is an exact identity

    const Tensor& in = checked_value(input);
    Rng rng(seed);
    std::vector<uint8_t> keep(in.numel());
    double scale = 1.0 / (1.0 - p);
    Tensor out = in;
    for (size_t i = 0; i < out.data.size(); ++i) {
        keep[i] = rng.uniform() >= p ? 1 : 0;
        out.data[i] = keep[i] ? out.data[i] * scale : 0.0;
    }
    return push(std::move(out), wants_grad(input), "dropout",
                [input, keep = std::move(keep), scale](Graph& g, const Node& self) {
                    Node& in_node = g.node_at(input);
                    if (!in_node.requires_grad) return;
                    for (size_t i = 0; i < keep.size(); ++i) {
                        if (keep[i]) in_node.grad.data[i] += self.grad.data[i] * scale;
                    }
                });
}

Graph::NodeId Graph::center_crop_concat(NodeId skip, NodeId up) {
    const Tensor& s = checked_value(skip);
    const Tensor& u = checked_value(up);
    if (s.rank() != 3 || u.rank() != 3) throw std::invalid_argument("center_crop_concat: expected (C,H,W)");
    int sh = s.dim(1), sw = s.dim(2), uh = u.dim(1), uw = u.dim(2);
    if (sh < uh || sw < uw) throw std::invalid_argument("center_crop_concat: skip smaller than up");
    if ((sh - uh) % 2 != 0 || (sw - uw) % 2 != 0) {
        throw std::invalid_argument("center_crop_concat: odd crop margin");
    }
    int my = (sh - uh) / 2, mx = (sw - uw) / 2;
    int sc = s.dim(0), uc = u.dim(0);

    Tensor out({sc + uc, uh, uw});
    for (int c = 0; c < sc; ++c) {
        for (int y = 0; y < uh; ++y) {
            for (int x = 0; x < uw; ++x) out.at3(c, y, x) = s.at3(c, y + my, x + mx);
        }
    }
    std::copy(u.data.begin(), u.data.end(),
              out.data.begin() + static_cast<size_t>(sc) * uh * uw);

    bool rg = wants_grad(skip) || wants_grad(up);
    return push(std::move(out), rg, "center_crop_concat", [=](Graph& g, const Node& self) {
        Node& s_node = g.node_at(skip);
        Node& u_node = g.node_at(up);
        if (s_node.requires_grad) {
            for (int c = 0; c < sc; ++c) {
                for (int y = 0; y < uh; ++y) {
                    for (int x = 0; x < uw; ++x) {
                        s_node.grad.at3(c, y + my, x + mx) += self.grad.at3(c, y, x);
                    }
                }
            }
        }
        if (u_node.requires_grad) {
            const double* src = self.grad.data.data() + static_cast<size_t>(sc) * uh * uw;
            for (size_t i = 0; i < u_node.grad.data.size(); ++i) u_node.grad.data[i] += src[i];
        }
    });
}

Graph::NodeId Graph::softmax_ce_loss(NodeId logits, const BinaryMask& target) {
    const Tensor& lg = checked_value(logits);
    if (lg.rank() != 3 || lg.dim(0) != 2) throw std::invalid_argument("softmax_ce_loss: expected (2,H,W)");
    int h = lg.dim(1), w = lg.dim(2);
    if (target.height != h || target.width != w) {
        throw std::invalid_argument("softmax_ce_loss: target dimensions do not match logits");
    }

    size_t n = static_cast<size_t>(h) * w;
    Tensor probs({2, h, w});
    double loss_sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double l0 = lg.data[i], l1 = lg.data[n + i];
        double m = std::max(l0, l1);
        double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
        double z = e0 + e1;
        double p0 = e0 / z, p1 = e1 / z;
        probs.data[i] = p0;
        probs.data[n + i] = p1;
        double p_true = target.data[i] ? p1 : p0;
        loss_sum += -std::log(std::max(p_true, 1e-300));
    }
    Tensor loss = Tensor::scalar(loss_sum / static_cast<double>(n));

    return push(std::move(loss), wants_grad(logits), "softmax_ce_loss",
                [logits, probs = std::move(probs), target](Graph& g, const Node& self) {
                    Node& lg_node = g.node_at(logits);
                    if (!lg_node.requires_grad) return;
                    double upstream = self.grad.data[0];
                    size_t n = target.data.size();
                    double inv_n = 1.0 / static_cast<double>(n);
                    for (size_t i = 0; i < n; ++i) {
                        double onehot1 = target.data[i] ? 1.0 : 0.0;
                        lg_node.grad.data[i] += upstream * (probs.data[i] - (1.0 - onehot1)) * inv_n;
                        lg_node.grad.data[n + i] += upstream * (probs.data[n + i] - onehot1) * inv_n;
                    }
                });
}

Graph::NodeId Graph::add(NodeId a, NodeId b) {
    const Tensor& ta = checked_value(a);
    const Tensor& tb = checked_value(b);
    if (!ta.same_shape(tb)) throw std::invalid_argument("add: shape mismatch");
    Tensor out = ta;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += tb.data[i];
    return push(std::move(out), wants_grad(a) || wants_grad(b), "add",
                [a, b](Graph& g, const Node& self) {
                    g.accumulate(a, self.grad);
                    g.accumulate(b, self.grad);
                });
}

Graph::NodeId Graph::sum(NodeId input) {
    const Tensor& in = checked_value(input);
    double acc = 0.0;
    for (double v : in.data) acc += v;
    return push(Tensor::scalar(acc), wants_grad(input), "sum",
                [input](Graph& g, const Node& self) {
                    Node& in_node = g.node_at(input);
                    if (!in_node.requires_grad) return;
                    for (double& v : in_node.grad.data) v += self.grad.data[0];
                });
}

void Graph::backward(NodeId loss) {
    Node& loss_node = node_at(loss);
    if (loss_node.value.numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
    for (NodeId id = 0; id <= loss; ++id) {
        Node& n = nodes_[id];
        if (n.requires_grad) n.grad = Tensor(n.value.shape, 0.0);
    }
    loss_node.grad.data[0] = 1.0;
    for (NodeId id = loss; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.requires_grad && n.backward_fn) n.backward_fn(*this, n);
    }
}

double grad_check(const std::function<Graph::NodeId(Graph&, Graph::NodeId)>& build,
                  const Tensor& x, double step, int max_coords, uint64_t seed) {
    Tensor analytic;
    {
        Graph g;
        Graph::NodeId xid = g.input(x, true);
        Graph::NodeId loss = build(g, xid);
        if (g.value(loss).numel() != 1) throw std::invalid_argument("grad_check: loss must be scalar");
        g.backward(loss);
        analytic = g.grad(xid);
    }

    auto eval = [&](const Tensor& probe) {
        Graph g;
        Graph::NodeId xid = g.input(probe, false);
        Graph::NodeId loss = build(g, xid);
        return g.value(loss).data[0];
    };

    std::vector<size_t> coords(x.numel());
    for (size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (static_cast<int>(coords.size()) > max_coords) {
        Rng rng(seed);
        rng.shuffle(coords);
        coords.resize(max_coords);
    }

    double worst = 0.0;
    Tensor probe = x;
    for (size_t i : coords) {
        double keep = probe.data[i];
        probe.data[i] = keep + step;
        double hi = eval(probe);
        probe.data[i] = keep - step;
        double lo = eval(probe);
        probe.data[i] = keep;
        double numeric = (hi - lo) / (2.0 * step);
        double a = analytic.data[i];
        double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace dermseg
