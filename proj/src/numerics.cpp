#include "batfill/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "batfill/error.hpp"
#include "batfill/rng.hpp"

namespace batfill {

// ---- Tape ----

Var Tape::input(const Tensor& external, bool requires_grad) {
    Node node;
    node.external = &external;
    node.requires_grad = requires_grad && recording_;
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
    Node node;
    node.owned = std::move(value);
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

Var Tape::push(Tensor value, bool requires_grad, Backward backward) {
    Node node;
    node.owned = std::move(value);
    node.requires_grad = requires_grad && recording_;
    if (node.requires_grad) {
        node.backward = std::move(backward);
    }
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const {
    const Node& node = nodes_[v.id];
    return node.external != nullptr ? *node.external : node.owned;
}

Tensor& Tape::grad(Var v) {
    Node& node = nodes_[v.id];
    if (node.grad.size() == 0) {
        const Tensor& val = node.external != nullptr ? *node.external : node.owned;
        node.grad = Tensor(val.shape(), 0.0);
    }
    return node.grad;
}

void Tape::backward(Var loss) {
    BATFILL_CHECK(recording_, "Tape::backward: tape is not recording");
    BATFILL_CHECK(value(loss).size() == 1, "Tape::backward: loss must have exactly one element");
    grad(loss)[0] = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (node.backward && node.grad.size() > 0) {
            node.backward(*this, i);
        }
    }
}

// ---- value kernels ----

namespace {

void matmul_into(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t m,
                 std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* __restrict crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            const double* __restrict brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

// c[m x n] += a[m x k] * b[n x k]^T, via a transposed copy of b so the inner
// loop runs over contiguous memory.
void matmul_nt_into(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    std::vector<double> bt(k * n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t p = 0; p < k; ++p) {
            bt[p * n + j] = b[j * k + p];
        }
    }
    matmul_into(a, bt.data(), c, m, k, n);
}

// c[k x n] += a[m x k]^T * b[m x n]
void matmul_tn_into(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t m,
                    std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* __restrict brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            double* __restrict crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

void check_matrix(const Tensor& t, const char* what) {
    BATFILL_CHECK(t.rank() == 2, std::string(what) + ": expected a matrix, got " + t.shape_string());
}

constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_matrix(a, "matmul");
    check_matrix(b, "matmul");
    BATFILL_CHECK(a.cols() == b.rows(), "matmul: shape mismatch " + a.shape_string() + " * " + b.shape_string());
    Tensor c = Tensor::matrix(a.rows(), b.cols());
    matmul_into(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    check_matrix(a, "matmul_nt");
    check_matrix(b, "matmul_nt");
    BATFILL_CHECK(a.cols() == b.cols(), "matmul_nt: shape mismatch " + a.shape_string() + " * " + b.shape_string() + "^T");
    Tensor c = Tensor::matrix(a.rows(), b.rows());
    matmul_nt_into(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.rows());
    return c;
}

Tensor masked_softmax(const Tensor& logits, const AttentionMask& allowed) {
    check_matrix(logits, "masked_softmax");
    BATFILL_CHECK(allowed.size() == logits.rows() && allowed.size() == logits.cols(),
            "masked_softmax: mask size " + std::to_string(allowed.size()) + " does not match logits " +
                logits.shape_string());
    Tensor out(logits.shape(), 0.0);
    const std::size_t n = logits.cols();
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto bits = allowed.row(r);
        const auto in = logits.row(r);
        auto o = out.row(r);
        double mx = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::size_t c = 0; c < n; ++c) {
            if (bits[c]) {
                mx = std::max(mx, in[c]);
                any = true;
            }
        }
        BATFILL_CHECK(any, "masked_softmax: row " + std::to_string(r) + " has no allowed column");
        double total = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            if (bits[c]) {
                o[c] = std::exp(in[c] - mx);
                total += o[c];
            }
        }
        const double inv = 1.0 / total;
        for (std::size_t c = 0; c < n; ++c) {
            if (bits[c]) {
                o[c] *= inv;
            }
        }
    }
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    const std::size_t d = x.cols();
    BATFILL_CHECK(d >= 1, "layer_norm: empty feature dimension");
    BATFILL_CHECK(gain.size() == d && bias.size() == d, "layer_norm: gain/bias size mismatch");
    Tensor out(x.shape(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto in = x.row(r);
        auto o = out.row(r);
        double mean = 0.0;
        for (double v : in) {
            mean += v;
        }
        mean /= double(d);
        double var = 0.0;
        for (double v : in) {
            var += (v - mean) * (v - mean);
        }
        var /= double(d);
        const double rstd = 1.0 / std::sqrt(var + eps);
        for (std::size_t c = 0; c < d; ++c) {
            o[c] = (in[c] - mean) * rstd * gain[c] + bias[c];
        }
    }
    return out;
}

double gelu(double x) {
    const double inner = kGeluScale * (x + kGeluCubic * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(inner));
}

double gelu_derivative(double x) {
    const double inner = kGeluScale * (x + kGeluCubic * x * x * x);
    const double t = std::tanh(inner);
    const double dinner = kGeluScale * (1.0 + 3.0 * kGeluCubic * x * x);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner;
}

double mean_nll(const Tensor& logits, std::span<const int> targets) {
    BATFILL_CHECK(!targets.empty(), "loss: no targets (K = 0)");
    BATFILL_CHECK(logits.rows() == targets.size(), "loss: " + std::to_string(targets.size()) + " targets for logits " +
                                                 logits.shape_string());
    double total = 0.0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto row = logits.row(r);
        const int t = targets[r];
        BATFILL_CHECK(t >= 0 && std::size_t(t) < row.size(), "loss: target " + std::to_string(t) + " out of range");
        const double mx = *std::max_element(row.begin(), row.end());
        double s = 0.0;
        for (double v : row) {
            s += std::exp(v - mx);
        }
        total += mx + std::log(s) - row[std::size_t(t)];
    }
    return total / double(targets.size());
}

// ---- differentiable operations ----

Var matmul(Tape& tape, Var a, Var b) {
    Tensor out = matmul(tape.value(a), tape.value(b));
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    return tape.push(std::move(out), rg, [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(Var{self});
        const Tensor& av = t.value(a);
        const Tensor& bv = t.value(b);
        const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
        if (t.requires_grad(a)) {
            matmul_nt_into(g.data(), bv.data(), t.grad(a).data(), m, n, k);
        }
        if (t.requires_grad(b)) {
            matmul_tn_into(av.data(), g.data(), t.grad(b).data(), m, k, n);
        }
    });
}

Var matmul_nt(Tape& tape, Var a, Var b) {
    Tensor out = matmul_nt(tape.value(a), tape.value(b));
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    return tape.push(std::move(out), rg, [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(Var{self});  // m x n
        const Tensor& av = t.value(a);        // m x k
        const Tensor& bv = t.value(b);        // n x k
        const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
        if (t.requires_grad(a)) {
            matmul_into(g.data(), bv.data(), t.grad(a).data(), m, n, k);
        }
        if (t.requires_grad(b)) {
            matmul_tn_into(g.data(), av.data(), t.grad(b).data(), m, n, k);
        }
    });
}

Var add(Tape& tape, Var a, Var b) {
    const Tensor& av = tape.value(a);
    const Tensor& bv = tape.value(b);
    BATFILL_CHECK(av.same_shape(bv), "add: shape mismatch " + av.shape_string() + " + " + bv.shape_string());
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += bv[i];
    }
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    return tape.push(std::move(out), rg, [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(Var{self});
        for (Var v : {a, b}) {
            if (t.requires_grad(v)) {
                Tensor& gv = t.grad(v);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    gv[i] += g[i];
                }
            }
        }
    });
}

Var mul(Tape& tape, Var a, Var b) {
    const Tensor& av = tape.value(a);
    const Tensor& bv = tape.value(b);
    BATFILL_CHECK(av.same_shape(bv), "mul: shape mismatch " + av.shape_string() + " * " + bv.shape_string());
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= bv[i];
    }
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    return tape.push(std::move(out), rg, [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(Var{self});
        const Tensor& av = t.value(a);
        const Tensor& bv = t.value(b);
        if (t.requires_grad(a)) {
            Tensor& ga = t.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i] * bv[i];
            }
        }
        if (t.requires_grad(b)) {
            Tensor& gb = t.grad(b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gb[i] += g[i] * av[i];
            }
        }
    });
}

Var add_row(Tape& tape, Var x, Var bias) {
    const Tensor& xv = tape.value(x);
    const Tensor& bv = tape.value(bias);
    BATFILL_CHECK(bv.size() == xv.cols(), "add_row: bias size " + std::to_string(bv.size()) + " vs " + xv.shape_string());
    Tensor out = xv;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] += bv[c];
        }
    }
    const bool rg = tape.requires_grad(x) || tape.requires_grad(bias);
    return tape.push(std::move(out), rg, [x, bias](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(Var{self});
        if (t.requires_grad(x)) {
            Tensor& gx = t.grad(x);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += g[i];
            }
        }
        if (t.requires_grad(bias)) {
            Tensor& gb = t.grad(bias);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                const auto row = g.row(r);
                for (std::size_t c = 0; c < row.size(); ++c) {
                    gb[c] += row[c];
                }
            }
        }
    });
}

Var scale(Tape& tape, Var x, double factor) {
    Tensor out = tape.value(x);
    for (double& v : out.values()) {
        v *= factor;
    }
    return tape.push(std::move(out), tape.requires_grad(x), [x, factor](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(Var{self});
        Tensor& gx = t.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            gx[i] += g[i] * factor;
        }
    });
}

Var masked_softmax(Tape& tape, Var logits, const AttentionMask& allowed) {
    Tensor out = masked_softmax(tape.value(logits), allowed);
    return tape.push(std::move(out), tape.requires_grad(logits), [logits](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(Var{self});
        const Tensor& y = t.value(Var{self});
        Tensor& gx = t.grad(logits);
        for (std::size_t r = 0; r < y.rows(); ++r) {
            const auto yr = y.row(r);
            const auto gr = g.row(r);
            double dot = 0.0;
            for (std::size_t c = 0; c < yr.size(); ++c) {
                dot += yr[c] * gr[c];
            }
            auto out = gx.row(r);
            for (std::size_t c = 0; c < yr.size(); ++c) {
                // Disallowed entries have y = 0 and receive nothing.
                if (yr[c] != 0.0) {
                    out[c] += yr[c] * (gr[c] - dot);
                }
            }
        }
    });
}

Var layer_norm(Tape& tape, Var x, Var gain, Var bias, double eps) {
    const Tensor& xv = tape.value(x);
    const Tensor& gv = tape.value(gain);
    const Tensor& bv = tape.value(bias);
    const std::size_t d = xv.cols();
    BATFILL_CHECK(d >= 1, "layer_norm: empty feature dimension");
    BATFILL_CHECK(gv.size() == d && bv.size() == d, "layer_norm: gain/bias size mismatch");

    const std::size_t rows = xv.rows();
    Tensor out(xv.shape(), 0.0);
    // Normalized activations and inverse std, kept for backward.
    Tensor xhat(xv.shape(), 0.0);
    std::vector<double> rstd(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto in = xv.row(r);
        double mean = 0.0;
        for (double v : in) {
            mean += v;
        }
        mean /= double(d);
        double var = 0.0;
        for (double v : in) {
            var += (v - mean) * (v - mean);
        }
        var /= double(d);
        rstd[r] = 1.0 / std::sqrt(var + eps);
        auto h = xhat.row(r);
        auto o = out.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            h[c] = (in[c] - mean) * rstd[r];
            o[c] = h[c] * gv[c] + bv[c];
        }
    }
    const bool rg = tape.requires_grad(x) || tape.requires_grad(gain) || tape.requires_grad(bias);
    return tape.push(std::move(out), rg,
                     [x, gain, bias, xhat = std::move(xhat), rstd = std::move(rstd)](Tape& t, std::size_t self) {
                         const Tensor& g = t.grad(Var{self});
                         const Tensor& gv = t.value(gain);
                         const std::size_t d = g.cols();
                         if (t.requires_grad(gain) || t.requires_grad(bias)) {
                             for (std::size_t r = 0; r < g.rows(); ++r) {
                                 const auto gr = g.row(r);
                                 const auto h = xhat.row(r);
                                 if (t.requires_grad(gain)) {
                                     Tensor& gg = t.grad(gain);
                                     for (std::size_t c = 0; c < d; ++c) {
                                         gg[c] += gr[c] * h[c];
                                     }
                                 }
                                 if (t.requires_grad(bias)) {
                                     Tensor& gb = t.grad(bias);
                                     for (std::size_t c = 0; c < d; ++c) {
                                         gb[c] += gr[c];
                                     }
                                 }
                             }
                         }
                         if (t.requires_grad(x)) {
                             Tensor& gx = t.grad(x);
                             for (std::size_t r = 0; r < g.rows(); ++r) {
                                 const auto gr = g.row(r);
                                 const auto h = xhat.row(r);
                                 double mean_dh = 0.0;
                                 double mean_dh_h = 0.0;
                                 for (std::size_t c = 0; c < d; ++c) {
                                     const double dh = gr[c] * gv[c];
                                     mean_dh += dh;
                                     mean_dh_h += dh * h[c];
                                 }
                                 mean_dh /= double(d);
                                 mean_dh_h /= double(d);
                                 auto o = gx.row(r);
                                 for (std::size_t c = 0; c < d; ++c) {
                                     const double dh = gr[c] * gv[c];
                                     o[c] += rstd[r] * (dh - mean_dh - h[c] * mean_dh_h);
                                 }
                             }
                         }
                     });
}

Var gelu(Tape& tape, Var x) {
    Tensor out = tape.value(x);
    for (double& v : out.values()) {
        v = gelu(v);
    }
    return tape.push(std::move(out), tape.requires_grad(x), [x](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(Var{self});
        const Tensor& xv = t.value(x);
        Tensor& gx = t.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            gx[i] += g[i] * gelu_derivative(xv[i]);
        }
    });
}

namespace {

template <typename Id>
Var embedding_impl(Tape& tape, Var table, std::span<const Id> ids) {
    const Tensor& tv = tape.value(table);
    check_matrix(tv, "embedding");
    const std::size_t d = tv.cols();
    Tensor out = Tensor::matrix(ids.size(), d);
    std::vector<std::size_t> rows(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto id = static_cast<long long>(ids[i]);
        BATFILL_CHECK(id >= 0 && std::size_t(id) < tv.rows(),
                "embedding: id " + std::to_string(id) + " outside table of " + std::to_string(tv.rows()) + " rows");
        rows[i] = std::size_t(id);
        std::copy_n(tv.row(rows[i]).data(), d, out.row(i).data());
    }
    return tape.push(std::move(out), tape.requires_grad(table), [table, rows = std::move(rows)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(Var{self});
        Tensor& gt = t.grad(table);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto gr = g.row(i);
            auto dst = gt.row(rows[i]);
            for (std::size_t c = 0; c < gr.size(); ++c) {
                dst[c] += gr[c];
            }
        }
    });
}

}  // namespace

Var embedding(Tape& tape, Var table, std::span<const int> ids) { return embedding_impl(tape, table, ids); }

Var embedding(Tape& tape, Var table, std::span<const std::size_t> ids) { return embedding_impl(tape, table, ids); }

Var columns(Tape& tape, Var x, std::size_t begin, std::size_t count) {
    const Tensor& xv = tape.value(x);
    check_matrix(xv, "columns");
    BATFILL_CHECK(begin + count <= xv.cols(), "columns: range exceeds " + xv.shape_string());
    Tensor out = Tensor::matrix(xv.rows(), count);
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        std::copy_n(xv.row(r).data() + begin, count, out.row(r).data());
    }
    return tape.push(std::move(out), tape.requires_grad(x), [x, begin](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(Var{self});
        Tensor& gx = t.grad(x);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            const auto gr = g.row(r);
            auto dst = gx.row(r);
            for (std::size_t c = 0; c < gr.size(); ++c) {
                dst[begin + c] += gr[c];
            }
        }
    });
}

Var concat_columns(Tape& tape, std::span<const Var> parts) {
    BATFILL_CHECK(!parts.empty(), "concat_columns: no inputs");
    const std::size_t rows = tape.value(parts[0]).rows();
    std::size_t total = 0;
    bool rg = false;
    for (Var p : parts) {
        const Tensor& pv = tape.value(p);
        check_matrix(pv, "concat_columns");
        BATFILL_CHECK(pv.rows() == rows, "concat_columns: row count mismatch");
        total += pv.cols();
        rg = rg || tape.requires_grad(p);
    }
    Tensor out = Tensor::matrix(rows, total);
    std::size_t offset = 0;
    for (Var p : parts) {
        const Tensor& pv = tape.value(p);
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(pv.row(r).data(), pv.cols(), out.row(r).data() + offset);
        }
        offset += pv.cols();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return tape.push(std::move(out), rg, [inputs = std::move(inputs)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(Var{self});
        std::size_t offset = 0;
        for (Var p : inputs) {
            const std::size_t w = t.value(p).cols();
            if (t.requires_grad(p)) {
                Tensor& gp = t.grad(p);
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    const double* src = g.row(r).data() + offset;
                    auto dst = gp.row(r);
                    for (std::size_t c = 0; c < w; ++c) {
                        dst[c] += src[c];
                    }
                }
            }
            offset += w;
        }
    });
}

Var select_rows(Tape& tape, Var x, std::span<const std::size_t> rows) {
    const Tensor& xv = tape.value(x);
    check_matrix(xv, "select_rows");
    Tensor out = Tensor::matrix(rows.size(), xv.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        BATFILL_CHECK(rows[i] < xv.rows(), "select_rows: row " + std::to_string(rows[i]) + " outside " + xv.shape_string());
        std::copy_n(xv.row(rows[i]).data(), xv.cols(), out.row(i).data());
    }
    std::vector<std::size_t> picked(rows.begin(), rows.end());
    return tape.push(std::move(out), tape.requires_grad(x), [x, picked = std::move(picked)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(Var{self});
        Tensor& gx = t.grad(x);
        for (std::size_t i = 0; i < picked.size(); ++i) {
            const auto gr = g.row(i);
            auto dst = gx.row(picked[i]);
            for (std::size_t c = 0; c < gr.size(); ++c) {
                dst[c] += gr[c];
            }
        }
    });
}

Var cross_entropy(Tape& tape, Var logits, std::span<const int> targets) {
    const Tensor& lv = tape.value(logits);
    check_matrix(lv, "cross_entropy");
    const double loss = mean_nll(lv, targets);
    std::vector<int> picked(targets.begin(), targets.end());
    return tape.push(Tensor({1}, std::vector<double>{loss}), tape.requires_grad(logits),
                     [logits, picked = std::move(picked)](Tape& t, std::size_t self) {
                         const double g = t.grad(Var{self})[0];
                         const Tensor& lv = t.value(logits);
                         Tensor& gl = t.grad(logits);
                         const double w = g / double(picked.size());
                         for (std::size_t r = 0; r < lv.rows(); ++r) {
                             const auto row = lv.row(r);
                             const double mx = *std::max_element(row.begin(), row.end());
                             double s = 0.0;
                             for (double v : row) {
                                 s += std::exp(v - mx);
                             }
                             auto dst = gl.row(r);
                             for (std::size_t c = 0; c < row.size(); ++c) {
                                 dst[c] += w * std::exp(row[c] - mx) / s;
                             }
                             dst[std::size_t(picked[r])] -= w;
                         }
                     });
}

Var sum(Tape& tape, Var x) {
    const Tensor& xv = tape.value(x);
    double s = 0.0;
    for (double v : xv.values()) {
        s += v;
    }
    return tape.push(Tensor({1}, std::vector<double>{s}), tape.requires_grad(x), [x](Tape& t, std::size_t self) {
        const double g = t.grad(Var{self})[0];
        Tensor& gx = t.grad(x);
        for (double& v : gx.values()) {
            v += g;
        }
    });
}

// ---- grad check ----

GradCheckResult grad_check(const LossBuilder& loss_fn, std::span<Tensor* const> params, const GradCheckOptions& options) {
    std::vector<Tensor> analytic;
    {
        Tape tape(true);
        std::vector<Var> vars;
        for (Tensor* p : params) {
            vars.push_back(tape.input(*p, true));
        }
        const Var loss = loss_fn(tape, vars);
        BATFILL_CHECK(std::isfinite(tape.value(loss)[0]), "grad_check: non-finite loss");
        tape.backward(loss);
        for (std::size_t i = 0; i < vars.size(); ++i) {
            analytic.push_back(tape.grad(vars[i]));
        }
    }

    auto evaluate = [&]() {
        Tape tape(false);
        std::vector<Var> vars;
        for (Tensor* p : params) {
            vars.push_back(tape.input(*p, false));
        }
        const double v = tape.value(loss_fn(tape, vars))[0];
        BATFILL_CHECK(std::isfinite(v), "grad_check: non-finite loss under perturbation");
        return v;
    };

    Rng rng(options.seed);
    GradCheckResult result;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        BATFILL_CHECK(analytic[pi].all_finite(), "grad_check: non-finite analytic gradient");
        std::vector<std::size_t> indices(p.size());
        std::iota(indices.begin(), indices.end(), std::size_t{0});
        if (options.max_per_tensor != 0 && indices.size() > options.max_per_tensor) {
            for (std::size_t i = 0; i < options.max_per_tensor; ++i) {
                std::swap(indices[i], indices[i + rng.below(indices.size() - i)]);
            }
            indices.resize(options.max_per_tensor);
        }
        for (std::size_t idx : indices) {
            const double original = p[idx];
            p[idx] = original + options.eps;
            const double up = evaluate();
            p[idx] = original - options.eps;
            const double down = evaluate();
            p[idx] = original;
            const double numeric = (up - down) / (2.0 * options.eps);
            const double a = analytic[pi][idx];
            const double abs_err = std::abs(a - numeric);
            const double rel = abs_err / std::max(std::abs(a) + std::abs(numeric), options.floor);
            result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
            result.max_relative_error = std::max(result.max_relative_error, rel);
            ++result.checked;
        }
    }
    return result;
}

}  // namespace batfill
