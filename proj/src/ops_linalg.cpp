#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Core>

#include "isn/ops.hpp"

namespace isn::ops {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Eigen kernels pick vector paths per the operand address mod the packet
// alignment, so products over Map'd heap vectors are not bit-reproducible
// across allocations. Every product here therefore runs on owned (aligned,
// fixed-stride) matrices; the copies in and out are exact.
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

void copy_from(double* dst, const EMat& src) {
    std::memcpy(dst, src.data(), sizeof(double) * static_cast<size_t>(src.size()));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("matmul: expects rank-2 operands, got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    int m = trans_a ? a.dim(1) : a.dim(0);
    int ka = trans_a ? a.dim(0) : a.dim(1);
    int kb = trans_b ? b.dim(1) : b.dim(0);
    int nn = trans_b ? b.dim(0) : b.dim(1);
    if (ka != kb)
        throw ShapeError("matmul: inner dims differ, " + shape_str(a.shape()) +
                         (trans_a ? "^T" : "") + " x " + shape_str(b.shape()) +
                         (trans_b ? "^T" : ""));

    Tensor out = Tensor::make_op("matmul", {m, nn}, {a, b},
                                 [m, ka, nn, trans_a, trans_b](Node& n) {
        Node& na = *n.inputs[0];
        Node& nb = *n.inputs[1];
        EMat g = owned(n.grad.data(), m, nn);
        EMat av = owned(na.value.data(), na.shape[0], na.shape[1]);
        EMat bv = owned(nb.value.data(), nb.shape[0], nb.shape[1]);
        if (na.requires_grad) {
            EMat t;
            if (!trans_a) {
                if (!trans_b) t = g * bv.transpose();
                else t = g * bv;
            } else {
                if (!trans_b) t = bv * g.transpose();
                else t = bv.transpose() * g.transpose();
            }
            add_from(na.grad_buf().data(), t);
        }
        if (nb.requires_grad) {
            EMat t;
            if (!trans_b) {
                if (!trans_a) t = av.transpose() * g;
                else t = av * g;
            } else {
                if (!trans_a) t = g.transpose() * av;
                else t = g.transpose() * av.transpose();
            }
            add_from(nb.grad_buf().data(), t);
        }
        (void)ka;
    });
    EMat av = owned(a.data().data(), a.dim(0), a.dim(1));
    EMat bv = owned(b.data().data(), b.dim(0), b.dim(1));
    EMat y;
    if (!trans_a) {
        if (!trans_b) y = av * bv;
        else y = av * bv.transpose();
    } else {
        if (!trans_b) y = av.transpose() * bv;
        else y = av.transpose() * bv.transpose();
    }
    copy_from(out.raw_data().data(), y);
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (w.rank() != 2) throw ShapeError("linear: weight must be [in,out]");
    int in_f = w.dim(0), out_f = w.dim(1);
    if (b.rank() != 1 || b.dim(0) != out_f)
        throw ShapeError("linear: bias " + shape_str(b.shape()) + " does not match out width " +
                         std::to_string(out_f));
    bool vec = x.rank() == 1;
    if ((vec ? x.dim(0) : x.dim(x.rank() - 1)) != in_f)
        throw ShapeError("linear: input " + shape_str(x.shape()) + " does not match weight " +
                         shape_str(w.shape()));
    int64_t rows = x.size() / in_f;
    Shape out_shape = x.shape();
    out_shape.back() = out_f;

    Tensor out = Tensor::make_op("linear", out_shape, {x, w, b},
                                 [rows, in_f, out_f](Node& n) {
        Node& nx = *n.inputs[0];
        Node& nw = *n.inputs[1];
        Node& nb = *n.inputs[2];
        EMat g = owned(n.grad.data(), rows, out_f);
        if (nx.requires_grad) {
            EMat wv = owned(nw.value.data(), in_f, out_f);
            EMat t = g * wv.transpose();
            add_from(nx.grad_buf().data(), t);
        }
        if (nw.requires_grad) {
            EMat xv = owned(nx.value.data(), rows, in_f);
            EMat t = xv.transpose() * g;
            add_from(nw.grad_buf().data(), t);
        }
        if (nb.requires_grad) {
            auto& gb = nb.grad_buf();
            const double* gp = n.grad.data();
            for (int64_t r = 0; r < rows; ++r)
                for (int c = 0; c < out_f; ++c) gb[static_cast<size_t>(c)] += gp[r * out_f + c];
        }
    });
    EMat xv = owned(x.data().data(), rows, in_f);
    EMat wv = owned(w.data().data(), in_f, out_f);
    EMat y = xv * wv;
    copy_from(out.raw_data().data(), y);
    const auto& bvec = b.data();
    double* yo = out.raw_data().data();
    for (int64_t r = 0; r < rows; ++r)
        for (int c = 0; c < out_f; ++c) yo[r * out_f + c] += bvec[static_cast<size_t>(c)];
    return out;
}

Tensor softmax_last(const Tensor& x) {
    int C = x.dim(x.rank() - 1);
    int64_t rows = x.size() / C;
    Tensor out = Tensor::make_op("softmax", x.shape(), {x}, [rows, C](Node& n) {
        Node& in = *n.inputs[0];
        if (!in.requires_grad) return;
        auto& gi = in.grad_buf();
        for (int64_t r = 0; r < rows; ++r) {
            const double* y = n.value.data() + r * C;
            const double* g = n.grad.data() + r * C;
            double dot = 0.0;
            for (int c = 0; c < C; ++c) dot += g[c] * y[c];
            double* gx = gi.data() + r * C;
            for (int c = 0; c < C; ++c) gx[c] += y[c] * (g[c] - dot);
        }
    });
    auto& y = out.raw_data();
    const auto& xv = x.data();
    for (int64_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * C;
        double* yo = y.data() + r * C;
        double mx = row[0];
        for (int c = 1; c < C; ++c) mx = std::max(mx, row[c]);
        double sum = 0.0;
        for (int c = 0; c < C; ++c) {
            yo[c] = std::exp(row[c] - mx);
            sum += yo[c];
        }
        double inv = 1.0 / sum;
        for (int c = 0; c < C; ++c) yo[c] *= inv;
    }
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    int C = x.dim(x.rank() - 1);
    if (gamma.rank() != 1 || gamma.dim(0) != C || beta.rank() != 1 || beta.dim(0) != C)
        throw ShapeError("layer-norm: gamma/beta must be [" + std::to_string(C) + "]");
    int64_t rows = x.size() / C;

    auto xhat = std::make_shared<std::vector<double>>(x.data().size());
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(rows));
    {
        const auto& xv = x.data();
        for (int64_t r = 0; r < rows; ++r) {
            const double* row = xv.data() + r * C;
            double mu = 0.0;
            for (int c = 0; c < C; ++c) mu += row[c];
            mu /= C;
            double var = 0.0;
            for (int c = 0; c < C; ++c) {
                double d = row[c] - mu;
                var += d * d;
            }
            var /= C;
            double is = 1.0 / std::sqrt(var + eps);
            (*inv_std)[static_cast<size_t>(r)] = is;
            double* xh = xhat->data() + r * C;
            for (int c = 0; c < C; ++c) xh[c] = (row[c] - mu) * is;
        }
    }

    Tensor out = Tensor::make_op("layer-norm", x.shape(), {x, gamma, beta},
                                 [rows, C, xhat, inv_std](Node& n) {
        Node& nx = *n.inputs[0];
        Node& ng = *n.inputs[1];
        Node& nb = *n.inputs[2];
        for (int64_t r = 0; r < rows; ++r) {
            const double* g = n.grad.data() + r * C;
            const double* xh = xhat->data() + r * C;
            if (ng.requires_grad) {
                auto& gg = ng.grad_buf();
                for (int c = 0; c < C; ++c) gg[static_cast<size_t>(c)] += g[c] * xh[c];
            }
            if (nb.requires_grad) {
                auto& gb = nb.grad_buf();
                for (int c = 0; c < C; ++c) gb[static_cast<size_t>(c)] += g[c];
            }
            if (nx.requires_grad) {
                double m1 = 0.0, m2 = 0.0;  // mean(dxh), mean(dxh*xh)
                for (int c = 0; c < C; ++c) {
                    double dxh = g[c] * ng.value[static_cast<size_t>(c)];
                    m1 += dxh;
                    m2 += dxh * xh[c];
                }
                m1 /= C;
                m2 /= C;
                double is = (*inv_std)[static_cast<size_t>(r)];
                double* gx = nx.grad_buf().data() + r * C;
                for (int c = 0; c < C; ++c) {
                    double dxh = g[c] * ng.value[static_cast<size_t>(c)];
                    gx[c] += (dxh - m1 - xh[c] * m2) * is;
                }
            }
        }
    });
    auto& y = out.raw_data();
    const auto& gv = gamma.data();
    const auto& bv = beta.data();
    for (int64_t r = 0; r < rows; ++r) {
        const double* xh = xhat->data() + r * C;
        double* yo = y.data() + r * C;
        for (int c = 0; c < C; ++c) yo[c] = xh[c] * gv[static_cast<size_t>(c)] + bv[static_cast<size_t>(c)];
    }
    return out;
}

Tensor batch_norm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                        BnStats* stats_out) {
    int C = x.dim(x.rank() - 1);
    if (gamma.rank() != 1 || gamma.dim(0) != C || beta.rank() != 1 || beta.dim(0) != C)
        throw ShapeError("batch-norm: gamma/beta must be [" + std::to_string(C) + "]");
    int64_t rows = x.size() / C;

    auto mean = std::make_shared<std::vector<double>>(static_cast<size_t>(C), 0.0);
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(C));
    std::vector<double> var(static_cast<size_t>(C), 0.0);
    {
        const auto& xv = x.data();
        for (int64_t r = 0; r < rows; ++r) {
            const double* row = xv.data() + r * C;
            for (int c = 0; c < C; ++c) (*mean)[static_cast<size_t>(c)] += row[c];
        }
        for (int c = 0; c < C; ++c) (*mean)[static_cast<size_t>(c)] /= static_cast<double>(rows);
        for (int64_t r = 0; r < rows; ++r) {
            const double* row = xv.data() + r * C;
            for (int c = 0; c < C; ++c) {
                double d = row[c] - (*mean)[static_cast<size_t>(c)];
                var[static_cast<size_t>(c)] += d * d;
            }
        }
        for (int c = 0; c < C; ++c) {
            var[static_cast<size_t>(c)] /= static_cast<double>(rows);
            (*inv_std)[static_cast<size_t>(c)] = 1.0 / std::sqrt(var[static_cast<size_t>(c)] + eps);
        }
    }
    if (stats_out) {
        stats_out->mean = *mean;
        stats_out->var = var;
        stats_out->group = rows;
    }

    Tensor out = Tensor::make_op("batch-norm", x.shape(), {x, gamma, beta},
                                 [rows, C, mean, inv_std](Node& n) {
        Node& nx = *n.inputs[0];
        Node& ng = *n.inputs[1];
        Node& nb = *n.inputs[2];
        std::vector<double> sum_g(static_cast<size_t>(C), 0.0);
        std::vector<double> sum_gxh(static_cast<size_t>(C), 0.0);
        for (int64_t r = 0; r < rows; ++r) {
            const double* g = n.grad.data() + r * C;
            const double* xv = nx.value.data() + r * C;
            for (int c = 0; c < C; ++c) {
                double xh = (xv[c] - (*mean)[static_cast<size_t>(c)]) * (*inv_std)[static_cast<size_t>(c)];
                sum_g[static_cast<size_t>(c)] += g[c];
                sum_gxh[static_cast<size_t>(c)] += g[c] * xh;
            }
        }
        if (ng.requires_grad) {
            auto& gg = ng.grad_buf();
            for (int c = 0; c < C; ++c) gg[static_cast<size_t>(c)] += sum_gxh[static_cast<size_t>(c)];
        }
        if (nb.requires_grad) {
            auto& gb = nb.grad_buf();
            for (int c = 0; c < C; ++c) gb[static_cast<size_t>(c)] += sum_g[static_cast<size_t>(c)];
        }
        if (nx.requires_grad) {
            double inv_rows = 1.0 / static_cast<double>(rows);
            auto& gx = nx.grad_buf();
            for (int64_t r = 0; r < rows; ++r) {
                const double* g = n.grad.data() + r * C;
                const double* xv = nx.value.data() + r * C;
                double* go = gx.data() + r * C;
                for (int c = 0; c < C; ++c) {
                    size_t ci = static_cast<size_t>(c);
                    double xh = (xv[c] - (*mean)[ci]) * (*inv_std)[ci];
                    double dxh = g[c] * ng.value[ci];
                    go[c] += ((dxh - sum_g[ci] * ng.value[ci] * inv_rows) -
                              xh * (sum_gxh[ci] * ng.value[ci] * inv_rows)) *
                             (*inv_std)[ci];
                }
            }
        }
    });
    auto& y = out.raw_data();
    const auto& xv = x.data();
    const auto& gv = gamma.data();
    const auto& bv = beta.data();
    for (int64_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * C;
        double* yo = y.data() + r * C;
        for (int c = 0; c < C; ++c) {
            size_t ci = static_cast<size_t>(c);
            yo[c] = (row[c] - (*mean)[ci]) * (*inv_std)[ci] * gv[ci] + bv[ci];
        }
    }
    return out;
}

Tensor batch_norm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       const std::vector<double>& running_mean,
                       const std::vector<double>& running_var, double eps) {
    int C = x.dim(x.rank() - 1);
    if (gamma.rank() != 1 || gamma.dim(0) != C || beta.rank() != 1 || beta.dim(0) != C ||
        running_mean.size() != static_cast<size_t>(C) ||
        running_var.size() != static_cast<size_t>(C))
        throw ShapeError("batch-norm eval: per-channel vectors must be [" + std::to_string(C) +
                         "]");
    int64_t rows = x.size() / C;

    auto mean = std::make_shared<std::vector<double>>(running_mean);
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(C));
    for (int c = 0; c < C; ++c)
        (*inv_std)[static_cast<size_t>(c)] =
            1.0 / std::sqrt(running_var[static_cast<size_t>(c)] + eps);

    Tensor out = Tensor::make_op("batch-norm-eval", x.shape(), {x, gamma, beta},
                                 [rows, C, mean, inv_std](Node& n) {
        Node& nx = *n.inputs[0];
        Node& ng = *n.inputs[1];
        Node& nb = *n.inputs[2];
        for (int64_t r = 0; r < rows; ++r) {
            const double* g = n.grad.data() + r * C;
            const double* xv = nx.value.data() + r * C;
            if (nx.requires_grad) {
                double* gx = nx.grad_buf().data() + r * C;
                for (int c = 0; c < C; ++c) {
                    size_t ci = static_cast<size_t>(c);
                    gx[c] += g[c] * ng.value[ci] * (*inv_std)[ci];
                }
            }
            if (ng.requires_grad) {
                auto& gg = ng.grad_buf();
                for (int c = 0; c < C; ++c) {
                    size_t ci = static_cast<size_t>(c);
                    gg[ci] += g[c] * (xv[c] - (*mean)[ci]) * (*inv_std)[ci];
                }
            }
            if (nb.requires_grad) {
                auto& gb = nb.grad_buf();
                for (int c = 0; c < C; ++c) gb[static_cast<size_t>(c)] += g[c];
            }
        }
    });
    auto& y = out.raw_data();
    const auto& xv = x.data();
    const auto& gv = gamma.data();
    const auto& bv = beta.data();
    for (int64_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * C;
        double* yo = y.data() + r * C;
        for (int c = 0; c < C; ++c) {
            size_t ci = static_cast<size_t>(c);
            yo[c] = (row[c] - (*mean)[ci]) * (*inv_std)[ci] * gv[ci] + bv[ci];
        }
    }
    return out;
}

Tensor cross_entropy_logits(const Tensor& logits, const std::vector<double>& q) {
    int64_t N = logits.size();
    if (logits.rank() > 2 || (logits.rank() == 2 && logits.dim(0) != 1))
        throw ShapeError("cross-entropy: logits must be [N] or [1,N], got " +
                         shape_str(logits.shape()));
    if (q.size() != static_cast<size_t>(N))
        throw ShapeError("cross-entropy: target length " + std::to_string(q.size()) +
                         " does not match logits " + shape_str(logits.shape()));
    const auto& zv = logits.data();
    for (double z : zv)
        if (!std::isfinite(z)) throw NumericError("cross-entropy: non-finite logit");

    double mx = zv[0];
    for (int64_t i = 1; i < N; ++i) mx = std::max(mx, zv[static_cast<size_t>(i)]);
    double sum = 0.0;
    for (int64_t i = 0; i < N; ++i) sum += std::exp(zv[static_cast<size_t>(i)] - mx);
    double lse = mx + std::log(sum);

    auto probs = std::make_shared<std::vector<double>>(static_cast<size_t>(N));
    for (int64_t i = 0; i < N; ++i)
        (*probs)[static_cast<size_t>(i)] = std::exp(zv[static_cast<size_t>(i)] - lse);
    auto qv = std::make_shared<std::vector<double>>(q);

    Tensor out = Tensor::make_op("cross-entropy", {1}, {logits}, [N, probs, qv](Node& n) {
        Node& nz = *n.inputs[0];
        if (!nz.requires_grad) return;
        double g = n.grad[0];
        auto& gz = nz.grad_buf();
        for (int64_t i = 0; i < N; ++i) {
            size_t ii = static_cast<size_t>(i);
            gz[ii] += g * ((*probs)[ii] - (*qv)[ii]);
        }
    });
    double qz = 0.0;
    for (int64_t i = 0; i < N; ++i) qz += q[static_cast<size_t>(i)] * zv[static_cast<size_t>(i)];
    out.raw_data()[0] = lse - qz;
    return out;
}

}  // namespace isn::ops
