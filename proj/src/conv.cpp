#include <algorithm>
#include <cstring>
#include <memory>

#include <Eigen/Core>

#include "isn/ops.hpp"

namespace isn::ops {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Products run on owned (aligned, fixed-stride) matrices only: Eigen's kernels
// pick vector paths per the operand address mod the packet alignment, so
// products over Map'd heap vectors are not bit-reproducible across
// allocations. Copies in and out are exact.
EMat owned(const double* p, int64_t r, int64_t c) {
    EMat m(r, c);
    std::memcpy(m.data(), p, sizeof(double) * static_cast<size_t>(r * c));
    return m;
}

void add_from(double* dst, const EMat& src) {
    const double* s = src.data();
    int64_t n = src.size();
    for (int64_t i = 0; i < n; ++i) dst[i] += s[i];
}

// All three conv ranks lower onto one 3-axis description; unused axes get
// extent 1, kernel 1, stride 1, pad 0.
struct ConvPlan {
    int64_t batch = 1;
    int in[3] = {1, 1, 1};
    int out[3] = {1, 1, 1};
    int k[3] = {1, 1, 1};
    int stride[3] = {1, 1, 1};
    int dil[3] = {1, 1, 1};
    int pad[3] = {0, 0, 0};
    int cin = 0, cout = 0;
    int64_t patch = 0;      // k0*k1*k2*cin, one im2col row
    int64_t positions = 0;  // batch * out0*out1*out2
    Shape out_shape;
};

int conv_out_extent(const char* op, int in, int k, int s, int d, int p) {
    if (k < 1 || s < 1 || d < 1 || p < 0)
        throw ShapeError(std::string(op) + ": kernel/stride/dilation must be >= 1, pad >= 0");
    int span = d * (k - 1) + 1;
    int num = in + 2 * p - span;
    if (num < 0)
        throw ShapeError(std::string(op) + ": kernel span " + std::to_string(span) +
                         " exceeds padded extent " + std::to_string(in + 2 * p));
    return num / s + 1;
}

ConvPlan plan_conv(const char* op, int rank, const Shape& xs, const Shape& ws,
                   const int* stride, const int* dil, const int* pad) {
    ConvPlan pl;
    bool batched = rank == 2;  // conv2d runs per leading frame
    int want_x_rank = rank + 1 + (batched ? 1 : 0);
    if (static_cast<int>(xs.size()) != want_x_rank)
        throw ShapeError(std::string(op) + ": input rank must be " + std::to_string(want_x_rank) +
                         ", got " + shape_str(xs));
    if (static_cast<int>(ws.size()) != rank + 2)
        throw ShapeError(std::string(op) + ": weight rank must be " + std::to_string(rank + 2) +
                         ", got " + shape_str(ws));

    int base = batched ? 1 : 0;
    if (batched) pl.batch = xs[0];
    pl.cin = xs[static_cast<size_t>(base + rank)];
    pl.cout = ws[static_cast<size_t>(rank + 1)];
    if (ws[static_cast<size_t>(rank)] != pl.cin)
        throw ShapeError(std::string(op) + ": weight expects " +
                         std::to_string(ws[static_cast<size_t>(rank)]) +
                         " input channels, input has " + std::to_string(pl.cin));
    for (int d = 0; d < rank; ++d) {
        int slot = 3 - rank + d;  // right-align spatial axes
        pl.in[slot] = xs[static_cast<size_t>(base + d)];
        pl.k[slot] = ws[static_cast<size_t>(d)];
        pl.stride[slot] = stride[d];
        pl.dil[slot] = dil[d];
        pl.pad[slot] = pad[d];
        pl.out[slot] = conv_out_extent(op, pl.in[slot], pl.k[slot], stride[d], dil[d], pad[d]);
    }
    pl.patch = static_cast<int64_t>(pl.k[0]) * pl.k[1] * pl.k[2] * pl.cin;
    pl.positions = pl.batch * static_cast<int64_t>(pl.out[0]) * pl.out[1] * pl.out[2];

    if (batched) pl.out_shape.push_back(static_cast<int>(pl.batch));
    for (int d = 0; d < rank; ++d) pl.out_shape.push_back(pl.out[3 - rank + d]);
    pl.out_shape.push_back(pl.cout);
    return pl;
}

// Gather (scatter=false) input windows into col rows, or scatter-add col rows
// back into dx (scatter=true). The tap over the innermost spatial axis covers
// cin contiguous values, copied as one run.
void im2col_walk(const ConvPlan& pl, double* x, double* col, bool scatter) {
    const int64_t in_stride2 = pl.cin;
    const int64_t in_stride1 = static_cast<int64_t>(pl.in[2]) * pl.cin;
    const int64_t in_stride0 = static_cast<int64_t>(pl.in[1]) * in_stride1;
    const int64_t batch_stride = static_cast<int64_t>(pl.in[0]) * in_stride0;
    const size_t run = sizeof(double) * static_cast<size_t>(pl.cin);

    int64_t row = 0;
    for (int64_t b = 0; b < pl.batch; ++b) {
        double* xb = x + b * batch_stride;
        for (int o0 = 0; o0 < pl.out[0]; ++o0)
            for (int o1 = 0; o1 < pl.out[1]; ++o1)
                for (int o2 = 0; o2 < pl.out[2]; ++o2, ++row) {
                    double* crow = col + row * pl.patch;
                    int64_t tap = 0;
                    for (int k0 = 0; k0 < pl.k[0]; ++k0) {
                        int p0 = o0 * pl.stride[0] - pl.pad[0] + k0 * pl.dil[0];
                        for (int k1 = 0; k1 < pl.k[1]; ++k1) {
                            int p1 = o1 * pl.stride[1] - pl.pad[1] + k1 * pl.dil[1];
                            for (int k2 = 0; k2 < pl.k[2]; ++k2, tap += pl.cin) {
                                int p2 = o2 * pl.stride[2] - pl.pad[2] + k2 * pl.dil[2];
                                bool inside = p0 >= 0 && p0 < pl.in[0] && p1 >= 0 &&
                                              p1 < pl.in[1] && p2 >= 0 && p2 < pl.in[2];
                                if (!inside) continue;
                                double* xp = xb + p0 * in_stride0 + p1 * in_stride1 +
                                             p2 * in_stride2;
                                if (!scatter) {
                                    std::memcpy(crow + tap, xp, run);
                                } else {
                                    const double* src = crow + tap;
                                    for (int c = 0; c < pl.cin; ++c) xp[c] += src[c];
                                }
                            }
                        }
                    }
                }
    }
}

Tensor conv_forward(const char* op, int rank, const Tensor& x, const Tensor& w, const Tensor& b,
                    const int* stride, const int* dil, const int* pad) {
    ConvPlan pl = plan_conv(op, rank, x.shape(), w.shape(), stride, dil, pad);
    if (b.rank() != 1 || b.dim(0) != pl.cout)
        throw ShapeError(std::string(op) + ": bias must be [" + std::to_string(pl.cout) + "]");

    auto col = std::make_shared<EMat>(EMat::Zero(pl.positions, pl.patch));
    im2col_walk(pl, const_cast<double*>(x.data().data()), col->data(), false);

    Tensor out = Tensor::make_op(op, pl.out_shape, {x, w, b}, [pl, col](Node& n) {
        Node& nx = *n.inputs[0];
        Node& nw = *n.inputs[1];
        Node& nb = *n.inputs[2];
        EMat g = owned(n.grad.data(), pl.positions, pl.cout);
        if (nw.requires_grad) {
            EMat t = col->transpose() * g;
            add_from(nw.grad_buf().data(), t);
        }
        if (nb.requires_grad) {
            auto& gb = nb.grad_buf();
            const double* gp = n.grad.data();
            for (int64_t r = 0; r < pl.positions; ++r)
                for (int c = 0; c < pl.cout; ++c)
                    gb[static_cast<size_t>(c)] += gp[r * pl.cout + c];
        }
        if (nx.requires_grad) {
            EMat wm = owned(nw.value.data(), pl.patch, pl.cout);
            EMat dcol = g * wm.transpose();
            im2col_walk(pl, nx.grad_buf().data(), dcol.data(), true);
        }
    });
    EMat wm = owned(w.data().data(), pl.patch, pl.cout);
    EMat y = (*col) * wm;
    double* yo = out.raw_data().data();
    std::memcpy(yo, y.data(), sizeof(double) * static_cast<size_t>(y.size()));
    const auto& bvec = b.data();
    for (int64_t r = 0; r < pl.positions; ++r)
        for (int c = 0; c < pl.cout; ++c) yo[r * pl.cout + c] += bvec[static_cast<size_t>(c)];
    return out;
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int dilation,
              int pad) {
    int s[1] = {stride}, d[1] = {dilation}, p[1] = {pad};
    return conv_forward("conv1d", 1, x, w, b, s, d, p);
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::array<int, 2> stride,
              std::array<int, 2> pad) {
    int d[2] = {1, 1};
    return conv_forward("conv2d", 2, x, w, b, stride.data(), d, pad.data());
}

Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b, std::array<int, 3> stride,
              std::array<int, 3> pad) {
    int d[3] = {1, 1, 1};
    return conv_forward("conv3d", 3, x, w, b, stride.data(), d, pad.data());
}

Tensor maxpool3d(const Tensor& x, std::array<int, 3> kernel, std::array<int, 3> stride,
                 std::array<int, 3> pad) {
    if (x.rank() != 4) throw ShapeError("maxpool3d: input must be [T,H,W,C]");
    int C = x.dim(3);
    int in[3] = {x.dim(0), x.dim(1), x.dim(2)};
    int out[3];
    for (int d = 0; d < 3; ++d) {
        out[d] = conv_out_extent("maxpool3d", in[d], kernel[static_cast<size_t>(d)], stride[static_cast<size_t>(d)], 1,
                                 pad[static_cast<size_t>(d)]);
        if (pad[static_cast<size_t>(d)] > kernel[static_cast<size_t>(d)] / 2)
            throw ShapeError("maxpool3d: pad larger than half the kernel");
    }
    Shape out_shape = {out[0], out[1], out[2], C};
    int64_t n_out = shape_numel(out_shape);

    auto argmax = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(n_out));
    const auto& xv = x.data();
    const int64_t s2 = C, s1 = static_cast<int64_t>(in[2]) * C,
                  s0 = static_cast<int64_t>(in[1]) * in[2] * C;

    Tensor outt = Tensor::make_op("maxpool3d", out_shape, {x}, [argmax](Node& n) {
        Node& in_node = *n.inputs[0];
        if (!in_node.requires_grad) return;
        auto& gi = in_node.grad_buf();
        for (size_t i = 0; i < n.grad.size(); ++i)
            gi[static_cast<size_t>((*argmax)[i])] += n.grad[i];
    });
    auto& y = outt.raw_data();
    int64_t idx = 0;
    for (int o0 = 0; o0 < out[0]; ++o0)
        for (int o1 = 0; o1 < out[1]; ++o1)
            for (int o2 = 0; o2 < out[2]; ++o2)
                for (int c = 0; c < C; ++c, ++idx) {
                    double best = 0.0;
                    int64_t best_at = -1;
                    for (int k0 = 0; k0 < kernel[0]; ++k0) {
                        int p0 = o0 * stride[0] - pad[0] + k0;
                        if (p0 < 0 || p0 >= in[0]) continue;
                        for (int k1 = 0; k1 < kernel[1]; ++k1) {
                            int p1 = o1 * stride[1] - pad[1] + k1;
                            if (p1 < 0 || p1 >= in[1]) continue;
                            for (int k2 = 0; k2 < kernel[2]; ++k2) {
                                int p2 = o2 * stride[2] - pad[2] + k2;
                                if (p2 < 0 || p2 >= in[2]) continue;
                                int64_t at = p0 * s0 + p1 * s1 + p2 * s2 + c;
                                double v = xv[static_cast<size_t>(at)];
                                if (best_at < 0 || v > best) {
                                    best = v;
                                    best_at = at;
                                }
                            }
                        }
                    }
                    y[static_cast<size_t>(idx)] = best;
                    (*argmax)[static_cast<size_t>(idx)] = best_at;
                }
    return outt;
}

// Reference path: nested loops straight off the cross-correlation definition.
// Kept deliberately free of the plan/im2col machinery above.
std::vector<double> conv_oracle(int rank, const Shape& x_shape, const std::vector<double>& x,
                                const Shape& w_shape, const std::vector<double>& w,
                                const std::vector<double>& bias, const std::vector<int>& stride,
                                const std::vector<int>& dilation, const std::vector<int>& pad,
                                Shape* out_shape) {
    if (rank < 1 || rank > 3) throw ShapeError("conv_oracle: rank must be 1..3");
    bool batched = rank == 2;
    int base = batched ? 1 : 0;
    int batch = batched ? x_shape[0] : 1;
    int cin = x_shape[static_cast<size_t>(base + rank)];
    int cout = w_shape[static_cast<size_t>(rank + 1)];

    std::vector<int> in(3, 1), k(3, 1), st(3, 1), di(3, 1), pd(3, 0), out(3, 1);
    for (int d = 0; d < rank; ++d) {
        in[static_cast<size_t>(d)] = x_shape[static_cast<size_t>(base + d)];
        k[static_cast<size_t>(d)] = w_shape[static_cast<size_t>(d)];
        st[static_cast<size_t>(d)] = stride[static_cast<size_t>(d)];
        di[static_cast<size_t>(d)] = dilation[static_cast<size_t>(d)];
        pd[static_cast<size_t>(d)] = pad[static_cast<size_t>(d)];
        int span = di[static_cast<size_t>(d)] * (k[static_cast<size_t>(d)] - 1) + 1;
        out[static_cast<size_t>(d)] =
            (in[static_cast<size_t>(d)] + 2 * pd[static_cast<size_t>(d)] - span) /
                st[static_cast<size_t>(d)] +
            1;
    }

    auto x_at = [&](int b, int a0, int a1, int a2, int c) {
        return x[static_cast<size_t>(
            (((static_cast<int64_t>(b) * in[0] + a0) * in[1] + a1) * in[2] + a2) * cin + c)];
    };
    auto w_at = [&](int k0, int k1, int k2, int ci, int co) {
        return w[static_cast<size_t>(
            (((static_cast<int64_t>(k0) * k[1] + k1) * k[2] + k2) * cin + ci) * cout + co)];
    };

    std::vector<double> y(static_cast<size_t>(batch) * out[0] * out[1] * out[2] * cout);
    size_t yi = 0;
    for (int b = 0; b < batch; ++b)
        for (int o0 = 0; o0 < out[0]; ++o0)
            for (int o1 = 0; o1 < out[1]; ++o1)
                for (int o2 = 0; o2 < out[2]; ++o2)
                    for (int co = 0; co < cout; ++co, ++yi) {
                        double acc = bias.empty() ? 0.0 : bias[static_cast<size_t>(co)];
                        for (int k0 = 0; k0 < k[0]; ++k0) {
                            int p0 = o0 * st[0] - pd[0] + k0 * di[0];
                            if (p0 < 0 || p0 >= in[0]) continue;
                            for (int k1 = 0; k1 < k[1]; ++k1) {
                                int p1 = o1 * st[1] - pd[1] + k1 * di[1];
                                if (p1 < 0 || p1 >= in[1]) continue;
                                for (int k2 = 0; k2 < k[2]; ++k2) {
                                    int p2 = o2 * st[2] - pd[2] + k2 * di[2];
                                    if (p2 < 0 || p2 >= in[2]) continue;
                                    for (int ci = 0; ci < cin; ++ci)
                                        acc += x_at(b, p0, p1, p2, ci) *
                                               w_at(k0, k1, k2, ci, co);
                                }
                            }
                        }
                        y[yi] = acc;
                    }

    if (out_shape) {
        out_shape->clear();
        if (batched) out_shape->push_back(batch);
        for (int d = 0; d < rank; ++d) out_shape->push_back(out[static_cast<size_t>(d)]);
        out_shape->push_back(cout);
    }
    return y;
}

}  // namespace isn::ops
