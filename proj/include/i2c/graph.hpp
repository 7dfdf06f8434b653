#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "i2c/errors.hpp"
#include "i2c/parallel.hpp"
#include "i2c/tensor.hpp"

namespace i2c {

// Reverse-mode tape. Nodes are appended in construction order, which is by
// construction a topological order; backward() sweeps it in exact reverse.
//
// Values returned by val() are references into the tape: do not hold them
// across subsequent op calls (the node vector may reallocate).
class Graph {
public:
    using Id = int;

    struct Node {
        Tensor own;                      // interior / owned-constant value
        const Tensor* view = nullptr;    // set for borrowed leaves and inputs
        Tensor* sink = nullptr;          // gradient target for parameters
        std::vector<double> grad;        // cotangent buffer
        std::function<void(Graph&, Node&)> back;  // null for leaves
    };

    // Trainable leaf: value is borrowed, gradients accumulate into t.grad.
    Id param(Tensor& t) {
        Node n;
        n.view = &t;
        n.sink = &t;
        n.grad.assign(t.numel(), 0.0);
        return push(std::move(n));
    }

    // Borrowed constant input (no gradient).
    Id input(const Tensor& t) {
        Node n;
        n.view = &t;
        n.grad.assign(t.numel(), 0.0);
        return push(std::move(n));
    }

    // Owned constant (no gradient).
    Id constant(Tensor t) {
        Node n;
        n.own = std::move(t);
        n.grad.assign(n.own.numel(), 0.0);
        return push(std::move(n));
    }

    Id emplace(Tensor value, std::function<void(Graph&, Node&)> back) {
        Node n;
        n.own = std::move(value);
        n.grad.assign(n.own.numel(), 0.0);
        n.back = std::move(back);
        return push(std::move(n));
    }

    const Tensor& val(Id id) const {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        return n.view ? *n.view : n.own;
    }

    std::vector<double>& grad(Id id) { return nodes_[static_cast<std::size_t>(id)].grad; }

    std::size_t size() const { return nodes_.size(); }

    // Fills the grad slot of every registered parameter with d(loss)/d(param).
    // Repeated calls accumulate; clearing param grads is the caller's job
    // (the optimizer zeroes them after each step).
    void backward(Id loss) {
        Node& top = nodes_[static_cast<std::size_t>(loss)];
        const Tensor& lv = top.view ? *top.view : top.own;
        if (lv.numel() != 1)
            throw UsageError("backward requires a scalar loss, got shape " + shape_str(lv.shape));
        for (Id id = 0; id <= loss; ++id) {
            auto& gbuf = nodes_[static_cast<std::size_t>(id)].grad;
            std::fill(gbuf.begin(), gbuf.end(), 0.0);
        }
        top.grad[0] = 1.0;
        for (Id id = loss; id >= 0; --id) {
            Node& n = nodes_[static_cast<std::size_t>(id)];
            if (n.back) {
                n.back(*this, n);
            } else if (n.sink && n.sink->requires_grad) {
                auto& dst = n.sink->grad;
                for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i];
            }
        }
    }

private:
    Id push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<Id>(nodes_.size()) - 1;
    }

    std::vector<Node> nodes_;
};

namespace detail {

inline void check_rank4(const Tensor& t, const char* what) {
    if (t.rank() != 4) throw InputError(std::string(what) + " must be rank 4, got " + shape_str(t.shape));
}

}  // namespace detail

// 2-D cross-correlation, zero padding. input [N,C,H,W], kernel [O,C,kh,kw].
// Output extent (H + 2*pad - kh) / stride + 1 must divide exactly.
inline Graph::Id conv2d(Graph& g, Graph::Id input_id, Graph::Id kernel_id, int stride, int pad) {
    const Tensor& in = g.val(input_id);
    const Tensor& kr = g.val(kernel_id);
    detail::check_rank4(in, "conv2d input");
    detail::check_rank4(kr, "conv2d kernel");
    if (stride < 1) throw ConfigError("conv2d stride must be positive, got " + std::to_string(stride));
    if (pad < 0) throw ConfigError("conv2d pad must be non-negative, got " + std::to_string(pad));
    const int N = in.shape[0], C = in.shape[1], H = in.shape[2], W = in.shape[3];
    const int O = kr.shape[0], KC = kr.shape[1], kh = kr.shape[2], kw = kr.shape[3];
    if (KC != C)
        throw InputError("conv2d channel mismatch: input " + shape_str(in.shape) + " vs kernel " +
                         shape_str(kr.shape));
    if (kh > H + 2 * pad || kw > W + 2 * pad)
        throw ConfigError("conv2d kernel " + shape_str(kr.shape) + " larger than padded input " +
                          shape_str(in.shape) + " with pad " + std::to_string(pad));
    if ((H + 2 * pad - kh) % stride != 0 || (W + 2 * pad - kw) % stride != 0)
        throw ConfigError("conv2d output extent not exact: input " + shape_str(in.shape) +
                          " kernel " + shape_str(kr.shape) + " stride " + std::to_string(stride) +
                          " pad " + std::to_string(pad));
    const int Ho = (H + 2 * pad - kh) / stride + 1;
    const int Wo = (W + 2 * pad - kw) / stride + 1;

    Tensor out = Tensor::zeros({N, O, Ho, Wo});
    {
        const double* ind = in.data.data();
        const double* krd = kr.data.data();
        double* od = out.data.data();
        const std::size_t work = static_cast<std::size_t>(N) * O * Ho * Wo * C * kh * kw;
        auto cell = [&](int t) {
            const int n = t / O, o = t % O;
            double* orow0 = od + (static_cast<std::size_t>(n) * O + o) * Ho * Wo;
            for (int c = 0; c < C; ++c) {
                const double* iplane = ind + (static_cast<std::size_t>(n) * C + c) * H * W;
                const double* kplane = krd + (static_cast<std::size_t>(o) * C + c) * kh * kw;
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        const double wv = kplane[ky * kw + kx];
                        for (int y = 0; y < Ho; ++y) {
                            const int iy = y * stride + ky - pad;
                            if (iy < 0 || iy >= H) continue;
                            double* orow = orow0 + static_cast<std::size_t>(y) * Wo;
                            const double* irow = iplane + static_cast<std::size_t>(iy) * W;
                            // x range with ix = x*stride + kx - pad inside [0, W)
                            int x0 = 0, x1 = Wo;
                            if (stride == 1) {
                                x0 = std::max(0, pad - kx);
                                x1 = std::min(Wo, W - kx + pad);
                                const double* ip = irow + (x0 + kx - pad);
                                for (int x = x0; x < x1; ++x) orow[x] += wv * ip[x - x0];
                            } else {
                                for (int x = x0; x < x1; ++x) {
                                    const int ix = x * stride + kx - pad;
                                    if (ix < 0 || ix >= W) continue;
                                    orow[x] += wv * irow[ix];
                                }
                            }
                        }
                    }
                }
            }
        };
        if (work > 200000)
            parallel_for(N * O, cell);
        else
            for (int t = 0; t < N * O; ++t) cell(t);
    }

    return g.emplace(std::move(out), [input_id, kernel_id, stride, pad, N, C, H, W, O, kh, kw, Ho,
                                      Wo](Graph& gr, Graph::Node& self) {
        const double* gout = self.grad.data();
        const Tensor& in = gr.val(input_id);
        const Tensor& kr = gr.val(kernel_id);
        // d/d input: gather formulation, each (n,c) plane owned by one task.
        {
            double* gin = gr.grad(input_id).data();
            const double* krd = kr.data.data();
            auto cell = [&](int t) {
                const int n = t / C, c = t % C;
                double* gplane = gin + (static_cast<std::size_t>(n) * C + c) * H * W;
                for (int o = 0; o < O; ++o) {
                    const double* kplane = krd + (static_cast<std::size_t>(o) * C + c) * kh * kw;
                    const double* gorow0 = gout + (static_cast<std::size_t>(n) * O + o) * Ho * Wo;
                    for (int ky = 0; ky < kh; ++ky) {
                        for (int kx = 0; kx < kw; ++kx) {
                            const double wv = kplane[ky * kw + kx];
                            for (int iy = 0; iy < H; ++iy) {
                                const int ty = iy - ky + pad;
                                if (ty < 0 || ty % stride != 0) continue;
                                const int y = ty / stride;
                                if (y >= Ho) continue;
                                double* grow = gplane + static_cast<std::size_t>(iy) * W;
                                const double* gorow = gorow0 + static_cast<std::size_t>(y) * Wo;
                                if (stride == 1) {
                                    const int ix0 = std::max(0, kx - pad);
                                    const int ix1 = std::min(W, Wo + kx - pad);
                                    const double* gp = gorow + (ix0 - kx + pad);
                                    for (int ix = ix0; ix < ix1; ++ix) grow[ix] += wv * gp[ix - ix0];
                                } else {
                                    for (int ix = 0; ix < W; ++ix) {
                                        const int tx = ix - kx + pad;
                                        if (tx < 0 || tx % stride != 0) continue;
                                        const int x = tx / stride;
                                        if (x >= Wo) continue;
                                        grow[ix] += wv * gorow[x];
                                    }
                                }
                            }
                        }
                    }
                }
            };
            const std::size_t work = static_cast<std::size_t>(N) * O * Ho * Wo * C * kh * kw;
            if (work > 200000)
                parallel_for(N * C, cell);
            else
                for (int t = 0; t < N * C; ++t) cell(t);
        }
        // d/d kernel: each (o,c) slice owned by one task; batch summed inside.
        {
            double* gk = gr.grad(kernel_id).data();
            const double* ind = in.data.data();
            auto cell = [&](int t) {
                const int o = t / C, c = t % C;
                double* gks = gk + (static_cast<std::size_t>(o) * C + c) * kh * kw;
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        double acc = 0.0;
                        for (int n = 0; n < N; ++n) {
                            const double* iplane = ind + (static_cast<std::size_t>(n) * C + c) * H * W;
                            const double* gorow0 =
                                gout + (static_cast<std::size_t>(n) * O + o) * Ho * Wo;
                            for (int y = 0; y < Ho; ++y) {
                                const int iy = y * stride + ky - pad;
                                if (iy < 0 || iy >= H) continue;
                                const double* irow = iplane + static_cast<std::size_t>(iy) * W;
                                const double* gorow = gorow0 + static_cast<std::size_t>(y) * Wo;
                                if (stride == 1) {
                                    const int x0 = std::max(0, pad - kx);
                                    const int x1 = std::min(Wo, W - kx + pad);
                                    const double* ip = irow + (x0 + kx - pad);
                                    for (int x = x0; x < x1; ++x) acc += gorow[x] * ip[x - x0];
                                } else {
                                    for (int x = 0; x < Wo; ++x) {
                                        const int ix = x * stride + kx - pad;
                                        if (ix < 0 || ix >= W) continue;
                                        acc += gorow[x] * irow[ix];
                                    }
                                }
                            }
                        }
                        gks[ky * kw + kx] += acc;
                    }
                }
            };
            const std::size_t work = static_cast<std::size_t>(N) * O * Ho * Wo * C * kh * kw;
            if (work > 200000)
                parallel_for(O * C, cell);
            else
                for (int t = 0; t < O * C; ++t) cell(t);
        }
    });
}

// Adds a per-channel bias to an [N,C,H,W] map stack.
inline Graph::Id bias_add(Graph& g, Graph::Id x_id, Graph::Id b_id) {
    const Tensor& x = g.val(x_id);
    const Tensor& b = g.val(b_id);
    detail::check_rank4(x, "bias_add input");
    if (b.rank() != 1 || b.shape[0] != x.shape[1])
        throw InputError("bias_add: bias " + shape_str(b.shape) + " does not match channels of " +
                         shape_str(x.shape));
    const int N = x.shape[0], C = x.shape[1], HW = x.shape[2] * x.shape[3];
    Tensor out = x;
    out.set_requires_grad(false);
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            double* row = out.data.data() + (static_cast<std::size_t>(n) * C + c) * HW;
            const double bv = b.data[static_cast<std::size_t>(c)];
            for (int i = 0; i < HW; ++i) row[i] += bv;
        }
    return g.emplace(std::move(out), [x_id, b_id, N, C, HW](Graph& gr, Graph::Node& self) {
        auto& gx = gr.grad(x_id);
        auto& gb = gr.grad(b_id);
        const double* go = self.grad.data();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                const double* row = go + (static_cast<std::size_t>(n) * C + c) * HW;
                double acc = 0.0;
                for (int i = 0; i < HW; ++i) acc += row[i];
                gb[static_cast<std::size_t>(c)] += acc;
            }
    });
}

// Elementwise max(0, x). Subgradient at 0 is 0.
inline Graph::Id relu(Graph& g, Graph::Id x_id) {
    const Tensor& x = g.val(x_id);
    Tensor out = x;
    out.set_requires_grad(false);
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return g.emplace(std::move(out), [x_id](Graph& gr, Graph::Node& self) {
        const Tensor& x = gr.val(x_id);
        auto& gx = gr.grad(x_id);
        for (std::size_t i = 0; i < gx.size(); ++i)
            if (x.data[i] > 0.0) gx[i] += self.grad[i];
    });
}

// Max over disjoint 2x2 windows. Ties route the gradient to the first
// (row-major) maximizer. Requires even spatial extents.
inline Graph::Id maxpool2(Graph& g, Graph::Id x_id) {
    const Tensor& x = g.val(x_id);
    detail::check_rank4(x, "maxpool2 input");
    const int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    if (H % 2 != 0 || W % 2 != 0)
        throw ConfigError("maxpool2 requires even extents, got " + shape_str(x.shape));
    const int Ho = H / 2, Wo = W / 2;
    Tensor out = Tensor::zeros({N, C, Ho, Wo});
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.numel());
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const double* plane = x.data.data() + (static_cast<std::size_t>(n) * C + c) * H * W;
            for (int y = 0; y < Ho; ++y)
                for (int xq = 0; xq < Wo; ++xq) {
                    std::size_t best = static_cast<std::size_t>(2 * y) * W + 2 * xq;
                    double bv = plane[best];
                    const std::size_t cand[3] = {best + 1, best + static_cast<std::size_t>(W),
                                                 best + static_cast<std::size_t>(W) + 1};
                    for (std::size_t idx : cand)
                        if (plane[idx] > bv) {
                            bv = plane[idx];
                            best = idx;
                        }
                    const std::size_t off = out.at4(n, c, y, xq);
                    out.data[off] = bv;
                    (*argmax)[off] = (static_cast<std::size_t>(n) * C + c) * H * W + best;
                }
        }
    return g.emplace(std::move(out), [x_id, argmax](Graph& gr, Graph::Node& self) {
        auto& gx = gr.grad(x_id);
        for (std::size_t i = 0; i < self.grad.size(); ++i) gx[(*argmax)[i]] += self.grad[i];
    });
}

// Spatial mean per channel: [N,C,H,W] -> [N,C].
inline Graph::Id global_average_pool(Graph& g, Graph::Id x_id) {
    const Tensor& x = g.val(x_id);
    detail::check_rank4(x, "global_average_pool input");
    const int N = x.shape[0], C = x.shape[1], HW = x.shape[2] * x.shape[3];
    Tensor out = Tensor::zeros({N, C});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const double* row = x.data.data() + (static_cast<std::size_t>(n) * C + c) * HW;
            double acc = 0.0;
            for (int i = 0; i < HW; ++i) acc += row[i];
            out.data[out.at2(n, c)] = acc / HW;
        }
    return g.emplace(std::move(out), [x_id, N, C, HW](Graph& gr, Graph::Node& self) {
        auto& gx = gr.grad(x_id);
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                const double gv = self.grad[static_cast<std::size_t>(n) * C + c] / HW;
                double* row = gx.data() + (static_cast<std::size_t>(n) * C + c) * HW;
                for (int i = 0; i < HW; ++i) row[i] += gv;
            }
    });
}

// Slices batch item n: [N, rest...] -> [rest...].
inline Graph::Id select_item(Graph& g, Graph::Id x_id, int n) {
    const Tensor& x = g.val(x_id);
    if (x.rank() < 2) throw InputError("select_item requires rank >= 2, got " + shape_str(x.shape));
    if (n < 0 || n >= x.shape[0])
        throw BoundsError("select_item index " + std::to_string(n) + " out of range [0," +
                          std::to_string(x.shape[0]) + ")");
    Shape rest(x.shape.begin() + 1, x.shape.end());
    const std::size_t stride = shape_numel(rest);
    Tensor out = Tensor::zeros(rest);
    std::copy_n(x.data.begin() + static_cast<std::ptrdiff_t>(stride * n), stride, out.data.begin());
    return g.emplace(std::move(out), [x_id, n, stride](Graph& gr, Graph::Node& self) {
        auto& gx = gr.grad(x_id);
        double* dst = gx.data() + stride * static_cast<std::size_t>(n);
        for (std::size_t i = 0; i < stride; ++i) dst[i] += self.grad[i];
    });
}

// Gathers feature columns at spatial coordinates: F [D,H,W], coords (row,col)
// pairs -> [K,D]. Backward scatters row gradients to their source pixels,
// summing on duplicates (scatter is the exact adjoint of gather).
inline Graph::Id gather_spatial(Graph& g, Graph::Id f_id,
                                const std::vector<std::pair<int, int>>& coords) {
    const Tensor& f = g.val(f_id);
    if (f.rank() != 3)
        throw InputError("gather_spatial expects rank-3 features, got " + shape_str(f.shape));
    if (coords.empty()) throw InputError("gather_spatial requires at least one coordinate");
    const int D = f.shape[0], H = f.shape[1], W = f.shape[2];
    for (const auto& [r, c] : coords)
        if (r < 0 || r >= H || c < 0 || c >= W)
            throw BoundsError("gather_spatial coordinate (" + std::to_string(r) + "," +
                              std::to_string(c) + ") outside [0," + std::to_string(H) + ")x[0," +
                              std::to_string(W) + ")");
    const int K = static_cast<int>(coords.size());
    Tensor out = Tensor::zeros({K, D});
    for (int k = 0; k < K; ++k) {
        const auto [r, c] = coords[static_cast<std::size_t>(k)];
        for (int d = 0; d < D; ++d) out.data[out.at2(k, d)] = f.data[f.at3(d, r, c)];
    }
    auto saved = std::make_shared<std::vector<std::pair<int, int>>>(coords);
    return g.emplace(std::move(out), [f_id, saved, D, H, W](Graph& gr, Graph::Node& self) {
        auto& gf = gr.grad(f_id);
        const int K = static_cast<int>(saved->size());
        for (int k = 0; k < K; ++k) {
            const auto [r, c] = (*saved)[static_cast<std::size_t>(k)];
            for (int d = 0; d < D; ++d)
                gf[(static_cast<std::size_t>(d) * H + r) * W + c] +=
                    self.grad[static_cast<std::size_t>(k) * D + d];
        }
    });
}

// Concatenates rank-2 tensors along rows.
inline Graph::Id concat_rows(Graph& g, const std::vector<Graph::Id>& ids) {
    if (ids.empty()) throw InputError("concat_rows requires at least one input");
    const int D = g.val(ids[0]).rank() == 2 ? g.val(ids[0]).shape[1] : -1;
    int total = 0;
    for (Graph::Id id : ids) {
        const Tensor& t = g.val(id);
        if (t.rank() != 2 || t.shape[1] != D)
            throw InputError("concat_rows: incompatible shape " + shape_str(t.shape));
        total += t.shape[0];
    }
    Tensor out = Tensor::zeros({total, D});
    std::size_t off = 0;
    for (Graph::Id id : ids) {
        const Tensor& t = g.val(id);
        std::copy(t.data.begin(), t.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(off));
        off += t.numel();
    }
    auto saved = std::make_shared<std::vector<Graph::Id>>(ids);
    return g.emplace(std::move(out), [saved](Graph& gr, Graph::Node& self) {
        std::size_t off = 0;
        for (Graph::Id id : *saved) {
            auto& gi = gr.grad(id);
            for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += self.grad[off + i];
            off += gi.size();
        }
    });
}

// Stacks rank-1 vectors into a [n,D] matrix.
inline Graph::Id stack_rows(Graph& g, const std::vector<Graph::Id>& ids) {
    if (ids.empty()) throw InputError("stack_rows requires at least one input");
    const Tensor& first = g.val(ids[0]);
    if (first.rank() != 1) throw InputError("stack_rows expects rank-1 inputs");
    const int D = first.shape[0];
    Tensor out = Tensor::zeros({static_cast<int>(ids.size()), D});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const Tensor& t = g.val(ids[i]);
        if (t.rank() != 1 || t.shape[0] != D)
            throw InputError("stack_rows: incompatible shape " + shape_str(t.shape));
        std::copy(t.data.begin(), t.data.end(),
                  out.data.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(D)));
    }
    auto saved = std::make_shared<std::vector<Graph::Id>>(ids);
    return g.emplace(std::move(out), [saved, D](Graph& gr, Graph::Node& self) {
        for (std::size_t i = 0; i < saved->size(); ++i) {
            auto& gi = gr.grad((*saved)[i]);
            const double* src = self.grad.data() + i * static_cast<std::size_t>(D);
            for (int d = 0; d < D; ++d) gi[static_cast<std::size_t>(d)] += src[d];
        }
    });
}

// Mean over rows: [K,D] -> [D].
inline Graph::Id row_mean(Graph& g, Graph::Id x_id) {
    const Tensor& x = g.val(x_id);
    if (x.rank() != 2) throw InputError("row_mean expects rank 2, got " + shape_str(x.shape));
    const int K = x.shape[0], D = x.shape[1];
    Tensor out = Tensor::zeros({D});
    for (int k = 0; k < K; ++k)
        for (int d = 0; d < D; ++d) out.data[static_cast<std::size_t>(d)] += x.data[x.at2(k, d)];
    for (double& v : out.data) v /= K;
    return g.emplace(std::move(out), [x_id, K, D](Graph& gr, Graph::Node& self) {
        auto& gx = gr.grad(x_id);
        for (int k = 0; k < K; ++k)
            for (int d = 0; d < D; ++d)
                gx[static_cast<std::size_t>(k) * D + d] += self.grad[static_cast<std::size_t>(d)] / K;
    });
}

// Mean over rows of -log softmax(logits)[label], max-subtracted for stability.
inline Graph::Id softmax_cross_entropy(Graph& g, Graph::Id logits_id,
                                       const std::vector<int>& labels) {
    const Tensor& lg = g.val(logits_id);
    if (lg.rank() != 2) throw InputError("softmax_cross_entropy expects [N,Y] logits");
    const int N = lg.shape[0], Y = lg.shape[1];
    if (static_cast<int>(labels.size()) != N)
        throw InputError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(N) + " rows");
    for (int lab : labels)
        if (lab < 0 || lab >= Y)
            throw InputError("label " + std::to_string(lab) + " out of range [0," +
                             std::to_string(Y) + ")");
    auto probs = std::make_shared<std::vector<double>>(lg.data.size());
    double loss = 0.0;
    for (int n = 0; n < N; ++n) {
        const double* row = lg.data.data() + static_cast<std::size_t>(n) * Y;
        double mx = row[0];
        for (int y = 1; y < Y; ++y) mx = std::max(mx, row[y]);
        double denom = 0.0;
        for (int y = 0; y < Y; ++y) denom += std::exp(row[y] - mx);
        const double logz = std::log(denom) + mx;
        double* prow = probs->data() + static_cast<std::size_t>(n) * Y;
        for (int y = 0; y < Y; ++y) prow[y] = std::exp(row[y] - logz);
        loss += logz - row[labels[static_cast<std::size_t>(n)]];
    }
    loss /= N;
    auto saved_labels = std::make_shared<std::vector<int>>(labels);
    return g.emplace(Tensor::scalar(loss),
                     [logits_id, probs, saved_labels, N, Y](Graph& gr, Graph::Node& self) {
                         auto& gl = gr.grad(logits_id);
                         const double go = self.grad[0] / N;
                         for (int n = 0; n < N; ++n)
                             for (int y = 0; y < Y; ++y) {
                                 double v = (*probs)[static_cast<std::size_t>(n) * Y + y];
                                 if (y == (*saved_labels)[static_cast<std::size_t>(n)]) v -= 1.0;
                                 gl[static_cast<std::size_t>(n) * Y + y] += go * v;
                             }
                     });
}

// (1/K) * sum_k ||A_k - B_k||^2 where K is the leading extent; works for any
// pair of same-shape tensors. Gradient flows into both arguments.
inline Graph::Id squared_l2_mean(Graph& g, Graph::Id a_id, Graph::Id b_id) {
    const Tensor& a = g.val(a_id);
    const Tensor& b = g.val(b_id);
    if (!same_shape(a, b))
        throw InputError("squared_l2_mean shape mismatch: " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
    const int K = a.shape[0];
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    acc /= K;
    return g.emplace(Tensor::scalar(acc), [a_id, b_id, K](Graph& gr, Graph::Node& self) {
        const Tensor& a = gr.val(a_id);
        const Tensor& b = gr.val(b_id);
        auto& ga = gr.grad(a_id);
        auto& gb = gr.grad(b_id);
        const double go = self.grad[0] * 2.0 / K;
        for (std::size_t i = 0; i < ga.size(); ++i) {
            const double d = go * (a.data[i] - b.data[i]);
            ga[i] += d;
            gb[i] -= d;
        }
    });
}

// Elementwise sum_i coeffs[i] * terms[i]. Zero-coefficient terms receive no
// gradient at all, so disabled loss terms cannot perturb a trajectory.
inline Graph::Id weighted_sum(Graph& g, const std::vector<Graph::Id>& terms,
                              const std::vector<double>& coeffs) {
    if (terms.empty() || terms.size() != coeffs.size())
        throw InputError("weighted_sum requires matching non-empty terms and coefficients");
    const Tensor& first = g.val(terms[0]);
    Tensor out = Tensor::zeros(first.shape);
    for (std::size_t t = 0; t < terms.size(); ++t) {
        const Tensor& x = g.val(terms[t]);
        if (!same_shape(x, first))
            throw InputError("weighted_sum shape mismatch: " + shape_str(x.shape) + " vs " +
                             shape_str(first.shape));
        const double c = coeffs[t];
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += c * x.data[i];
    }
    auto ids = std::make_shared<std::vector<Graph::Id>>(terms);
    auto cs = std::make_shared<std::vector<double>>(coeffs);
    return g.emplace(std::move(out), [ids, cs](Graph& gr, Graph::Node& self) {
        for (std::size_t t = 0; t < ids->size(); ++t) {
            const double c = (*cs)[t];
            if (c == 0.0) continue;
            auto& gi = gr.grad((*ids)[t]);
            for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += c * self.grad[i];
        }
    });
}

// Sum of every element -> scalar.
inline Graph::Id sum_all(Graph& g, Graph::Id x_id) {
    const Tensor& x = g.val(x_id);
    double acc = 0.0;
    for (double v : x.data) acc += v;
    return g.emplace(Tensor::scalar(acc), [x_id](Graph& gr, Graph::Node& self) {
        auto& gx = gr.grad(x_id);
        for (double& v : gx) v += self.grad[0];
    });
}

}  // namespace i2c
