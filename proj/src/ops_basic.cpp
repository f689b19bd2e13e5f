#include <algorithm>
#include <cmath>
#include <numeric>

#include "isn/ops.hpp"

namespace isn::ops {

namespace {

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    Tensor out = Tensor::make_op("add", a.shape(), {a, b}, [](Node& n) {
        const auto& g = n.grad;
        for (int i = 0; i < 2; ++i) {
            Node& in = *n.inputs[static_cast<size_t>(i)];
            if (!in.requires_grad) continue;
            auto& gi = in.grad_buf();
            for (size_t j = 0; j < g.size(); ++j) gi[j] += g[j];
        }
    });
    auto& y = out.raw_data();
    const auto& av = a.data();
    const auto& bv = b.data();
    for (size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape("elementwise-multiply", a, b);
    Tensor out = Tensor::make_op("elementwise-multiply", a.shape(), {a, b}, [](Node& n) {
        const auto& g = n.grad;
        Node& na = *n.inputs[0];
        Node& nb = *n.inputs[1];
        if (na.requires_grad) {
            auto& ga = na.grad_buf();
            for (size_t j = 0; j < g.size(); ++j) ga[j] += g[j] * nb.value[j];
        }
        if (nb.requires_grad) {
            auto& gb = nb.grad_buf();
            for (size_t j = 0; j < g.size(); ++j) gb[j] += g[j] * na.value[j];
        }
    });
    auto& y = out.raw_data();
    const auto& av = a.data();
    const auto& bv = b.data();
    for (size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
    return out;
}

Tensor scale(const Tensor& a, double c) {
    Tensor out = Tensor::make_op("scale-by-constant", a.shape(), {a}, [c](Node& n) {
        Node& in = *n.inputs[0];
        if (!in.requires_grad) return;
        auto& gi = in.grad_buf();
        for (size_t j = 0; j < n.grad.size(); ++j) gi[j] += c * n.grad[j];
    });
    auto& y = out.raw_data();
    const auto& av = a.data();
    for (size_t i = 0; i < y.size(); ++i) y[i] = c * av[i];
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out = Tensor::make_op("relu", x.shape(), {x}, [](Node& n) {
        Node& in = *n.inputs[0];
        if (!in.requires_grad) return;
        auto& gi = in.grad_buf();
        for (size_t j = 0; j < n.grad.size(); ++j)
            if (in.value[j] > 0.0) gi[j] += n.grad[j];
    });
    auto& y = out.raw_data();
    const auto& xv = x.data();
    for (size_t i = 0; i < y.size(); ++i) y[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    return out;
}

Tensor sigmoid(const Tensor& x) {
    Tensor out = Tensor::make_op("sigmoid", x.shape(), {x}, [](Node& n) {
        Node& in = *n.inputs[0];
        if (!in.requires_grad) return;
        auto& gi = in.grad_buf();
        for (size_t j = 0; j < n.grad.size(); ++j) {
            double y = n.value[j];
            gi[j] += n.grad[j] * y * (1.0 - y);
        }
    });
    auto& y = out.raw_data();
    const auto& xv = x.data();
    for (size_t i = 0; i < y.size(); ++i) {
        double v = xv[i];
        y[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    return out;
}

Tensor prelu(const Tensor& x, const Tensor& slope) {
    if (slope.size() != 1)
        throw ShapeError("prelu: slope must hold one element, got " + shape_str(slope.shape()));
    Tensor out = Tensor::make_op("prelu", x.shape(), {x, slope}, [](Node& n) {
        Node& in = *n.inputs[0];
        Node& sl = *n.inputs[1];
        double a = sl.value[0];
        if (in.requires_grad) {
            auto& gi = in.grad_buf();
            for (size_t j = 0; j < n.grad.size(); ++j)
                gi[j] += in.value[j] > 0.0 ? n.grad[j] : a * n.grad[j];
        }
        if (sl.requires_grad) {
            double da = 0.0;
            for (size_t j = 0; j < n.grad.size(); ++j)
                if (in.value[j] <= 0.0) da += in.value[j] * n.grad[j];
            sl.grad_buf()[0] += da;
        }
    });
    auto& y = out.raw_data();
    const auto& xv = x.data();
    double a = slope.data()[0];
    for (size_t i = 0; i < y.size(); ++i) y[i] = xv[i] > 0.0 ? xv[i] : a * xv[i];
    return out;
}

Tensor concat_last(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat-on-channel: no inputs");
    Shape base = parts[0].shape();
    int last = static_cast<int>(base.size()) - 1;
    int total = 0;
    for (const Tensor& p : parts) {
        if (p.rank() != parts[0].rank())
            throw ShapeError("concat-on-channel: rank mismatch " + shape_str(p.shape()) + " vs " +
                             shape_str(base));
        for (int d = 0; d < last; ++d)
            if (p.dim(d) != base[static_cast<size_t>(d)])
                throw ShapeError("concat-on-channel: leading dims differ, " +
                                 shape_str(p.shape()) + " vs " + shape_str(base));
        total += p.dim(last);
    }
    Shape out_shape = base;
    out_shape[static_cast<size_t>(last)] = total;

    std::vector<int> widths;
    for (const Tensor& p : parts) widths.push_back(p.dim(last));

    Tensor out = Tensor::make_op("concat-on-channel", out_shape, parts, [widths, total](Node& n) {
        int64_t rows = n.numel() / total;
        int off = 0;
        for (size_t i = 0; i < n.inputs.size(); ++i) {
            Node& in = *n.inputs[i];
            int w = widths[i];
            if (in.requires_grad) {
                auto& gi = in.grad_buf();
                for (int64_t r = 0; r < rows; ++r) {
                    const double* src = n.grad.data() + r * total + off;
                    double* dst = gi.data() + r * w;
                    for (int c = 0; c < w; ++c) dst[c] += src[c];
                }
            }
            off += w;
        }
    });
    auto& y = out.raw_data();
    int64_t rows = out.size() / total;
    int off = 0;
    for (size_t i = 0; i < parts.size(); ++i) {
        const auto& pv = parts[i].data();
        int w = widths[i];
        for (int64_t r = 0; r < rows; ++r)
            std::copy_n(pv.data() + r * w, w, y.data() + r * total + off);
        off += w;
    }
    return out;
}

Tensor slice_last(const Tensor& x, int start, int len) {
    int last = x.rank() - 1;
    int width = x.dim(last);
    if (start < 0 || len <= 0 || start + len > width)
        throw ShapeError("slice-on-channel: range [" + std::to_string(start) + "," +
                         std::to_string(start + len) + ") out of width " + std::to_string(width));
    Shape out_shape = x.shape();
    out_shape[static_cast<size_t>(last)] = len;

    Tensor out = Tensor::make_op("slice-on-channel", out_shape, {x}, [start, len, width](Node& n) {
        Node& in = *n.inputs[0];
        if (!in.requires_grad) return;
        auto& gi = in.grad_buf();
        int64_t rows = n.numel() / len;
        for (int64_t r = 0; r < rows; ++r) {
            const double* src = n.grad.data() + r * len;
            double* dst = gi.data() + r * width + start;
            for (int c = 0; c < len; ++c) dst[c] += src[c];
        }
    });
    auto& y = out.raw_data();
    const auto& xv = x.data();
    int64_t rows = out.size() / len;
    for (int64_t r = 0; r < rows; ++r)
        std::copy_n(xv.data() + r * width + start, len, y.data() + r * len);
    return out;
}

Tensor mean_axes(const Tensor& x, std::vector<int> axes) {
    std::sort(axes.begin(), axes.end());
    if (std::adjacent_find(axes.begin(), axes.end()) != axes.end())
        throw ShapeError("mean-over-axes: duplicate axis");
    for (int a : axes)
        if (a < 0 || a >= x.rank())
            throw ShapeError("mean-over-axes: axis " + std::to_string(a) + " out of rank " +
                             std::to_string(x.rank()));
    if (axes.empty()) throw ShapeError("mean-over-axes: no axes given");

    const Shape& s = x.shape();
    int r = x.rank();
    std::vector<int64_t> strides(static_cast<size_t>(r), 1);
    for (int d = r - 2; d >= 0; --d)
        strides[static_cast<size_t>(d)] =
            strides[static_cast<size_t>(d + 1)] * s[static_cast<size_t>(d + 1)];

    Shape out_shape;
    std::vector<int64_t> kept_strides;
    std::vector<int> red_dims;
    std::vector<int64_t> red_strides;
    for (int d = 0; d < r; ++d) {
        if (std::binary_search(axes.begin(), axes.end(), d)) {
            red_dims.push_back(s[static_cast<size_t>(d)]);
            red_strides.push_back(strides[static_cast<size_t>(d)]);
        } else {
            out_shape.push_back(s[static_cast<size_t>(d)]);
            kept_strides.push_back(strides[static_cast<size_t>(d)]);
        }
    }
    if (out_shape.empty()) out_shape = {1};

    // Enumerate base offsets for output elements and in-group deltas once.
    auto enumerate = [](const std::vector<int>& dims, const std::vector<int64_t>& strs) {
        std::vector<int64_t> offs{0};
        for (size_t d = 0; d < dims.size(); ++d) {
            std::vector<int64_t> next;
            next.reserve(offs.size() * static_cast<size_t>(dims[d]));
            for (int64_t base : offs)
                for (int i = 0; i < dims[d]; ++i) next.push_back(base + i * strs[d]);
            offs.swap(next);
        }
        return offs;
    };
    std::vector<int> kept_dims;
    for (int v : out_shape) kept_dims.push_back(v);
    if (kept_strides.empty()) kept_dims = {1};
    if (kept_strides.empty()) kept_strides = {0};

    auto kept_offs = std::make_shared<std::vector<int64_t>>(enumerate(kept_dims, kept_strides));
    auto red_offs = std::make_shared<std::vector<int64_t>>(enumerate(red_dims, red_strides));
    double inv_n = 1.0 / static_cast<double>(red_offs->size());

    Tensor out =
        Tensor::make_op("mean-over-axes", out_shape, {x}, [kept_offs, red_offs, inv_n](Node& n) {
            Node& in = *n.inputs[0];
            if (!in.requires_grad) return;
            auto& gi = in.grad_buf();
            for (size_t o = 0; o < kept_offs->size(); ++o) {
                double g = n.grad[o] * inv_n;
                int64_t base = (*kept_offs)[o];
                for (int64_t d : *red_offs) gi[static_cast<size_t>(base + d)] += g;
            }
        });
    auto& y = out.raw_data();
    const auto& xv = x.data();
    std::vector<double> scratch(red_offs->size());
    for (size_t o = 0; o < kept_offs->size(); ++o) {
        int64_t base = (*kept_offs)[o];
        for (size_t j = 0; j < red_offs->size(); ++j)
            scratch[j] = xv[static_cast<size_t>(base + (*red_offs)[j])];
        std::sort(scratch.begin(), scratch.end());
        double acc = 0.0;
        for (double v : scratch) acc += v;
        y[o] = acc * inv_n;
    }
    return out;
}

Tensor scale_by_gate(const Tensor& x, const Tensor& gate) {
    int last = x.rank() - 1;
    int C = x.dim(last);
    bool per_frame;
    if (gate.rank() == 1 && gate.dim(0) == C) {
        per_frame = false;
    } else if (gate.rank() == 2 && x.rank() >= 2 && gate.dim(0) == x.dim(0) &&
               gate.dim(1) == C) {
        per_frame = true;
    } else {
        throw ShapeError("scale-by-gate: gate " + shape_str(gate.shape()) +
                         " incompatible with input " + shape_str(x.shape()));
    }
    int64_t rows = x.size() / C;                          // positions of C-vectors
    int64_t per_lead = per_frame ? rows / x.dim(0) : rows;  // rows sharing one gate row

    Tensor out = Tensor::make_op("scale-by-gate", x.shape(), {x, gate},
                                 [C, per_lead, rows](Node& n) {
        Node& nx = *n.inputs[0];
        Node& ng = *n.inputs[1];
        for (int64_t r = 0; r < rows; ++r) {
            int64_t grow = r / per_lead;  // 0 when gate is [C]
            const double* gv = ng.value.data() + (ng.shape.size() == 1 ? 0 : grow * C);
            const double* gout = n.grad.data() + r * C;
            if (nx.requires_grad) {
                double* gx = nx.grad_buf().data() + r * C;
                for (int c = 0; c < C; ++c) gx[c] += gout[c] * gv[c];
            }
            if (ng.requires_grad) {
                double* gg =
                    ng.grad_buf().data() + (ng.shape.size() == 1 ? 0 : grow * C);
                const double* xv = nx.value.data() + r * C;
                for (int c = 0; c < C; ++c) gg[c] += gout[c] * xv[c];
            }
        }
    });
    auto& y = out.raw_data();
    const auto& xv = x.data();
    const auto& gv = gate.data();
    for (int64_t r = 0; r < rows; ++r) {
        int64_t grow = per_frame ? r / per_lead : 0;
        const double* gp = gv.data() + (per_frame ? grow * C : 0);
        for (int c = 0; c < C; ++c) y[static_cast<size_t>(r * C + c)] =
            xv[static_cast<size_t>(r * C + c)] * gp[c];
    }
    return out;
}

}  // namespace isn::ops
