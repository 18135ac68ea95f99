#include "autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ffae::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using Strided = Eigen::OuterStride<>;
using BlockMap = Eigen::Map<RowMat, 0, Strided>;
using ConstBlockMap = Eigen::Map<const RowMat, 0, Strided>;

MatMap map(Tensor& t) { return MatMap(t.data().data(), t.rows(), t.cols()); }
ConstMatMap map(const Tensor& t) { return ConstMatMap(t.data().data(), t.rows(), t.cols()); }

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                                b.shape_string());
}

// Gradient slot of input i, or nullptr when that input is a constant.
Tensor* input_grad(Node& n, std::size_t i) {
    Node& in = *n.inputs[i];
    return in.requires_grad ? &in.ensure_grad() : nullptr;
}

const Tensor& input_value(const Node& n, std::size_t i) { return n.inputs[i]->value; }

}  // namespace

Value matmul(const Value& a, const Value& b) {
    if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
    Tensor out(a.rows(), b.cols());
    map(out).noalias() = map(a.value()) * map(b.value());
    return make_result(std::move(out), {a, b}, "matmul", [](Node& n) {
        const auto g = map(static_cast<const Tensor&>(n.grad));
        if (Tensor* ga = input_grad(n, 0)) map(*ga).noalias() += g * map(input_value(n, 1)).transpose();
        if (Tensor* gb = input_grad(n, 1)) map(*gb).noalias() += map(input_value(n, 0)).transpose() * g;
    });
}

Value add(const Value& a, const Value& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const bool broadcast = !av.same_shape(bv);
    if (broadcast && !(bv.rows() == 1 && bv.cols() == av.cols())) shape_error("add", av, bv);
    Tensor out = av;
    if (broadcast) {
        map(out).rowwise() += map(bv).row(0);
    } else {
        map(out) += map(bv);
    }
    return make_result(std::move(out), {a, b}, "add", [broadcast](Node& n) {
        const auto g = map(static_cast<const Tensor&>(n.grad));
        if (Tensor* ga = input_grad(n, 0)) map(*ga) += g;
        if (Tensor* gb = input_grad(n, 1)) {
            if (broadcast) {
                map(*gb).row(0) += g.colwise().sum();
            } else {
                map(*gb) += g;
            }
        }
    });
}

Value sub(const Value& a, const Value& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const bool broadcast = !av.same_shape(bv);
    if (broadcast && !(bv.rows() == 1 && bv.cols() == av.cols())) shape_error("sub", av, bv);
    Tensor out = av;
    if (broadcast) {
        map(out).rowwise() -= map(bv).row(0);
    } else {
        map(out) -= map(bv);
    }
    return make_result(std::move(out), {a, b}, "sub", [broadcast](Node& n) {
        const auto g = map(static_cast<const Tensor&>(n.grad));
        if (Tensor* ga = input_grad(n, 0)) map(*ga) += g;
        if (Tensor* gb = input_grad(n, 1)) {
            if (broadcast) {
                map(*gb).row(0) -= g.colwise().sum();
            } else {
                map(*gb) -= g;
            }
        }
    });
}

Value mul(const Value& a, const Value& b) {
    if (!a.value().same_shape(b.value())) shape_error("mul", a.value(), b.value());
    Tensor out = a.value();
    map(out).array() *= map(b.value()).array();
    return make_result(std::move(out), {a, b}, "mul", [](Node& n) {
        const auto g = map(static_cast<const Tensor&>(n.grad)).array();
        if (Tensor* ga = input_grad(n, 0)) map(*ga).array() += g * map(input_value(n, 1)).array();
        if (Tensor* gb = input_grad(n, 1)) map(*gb).array() += g * map(input_value(n, 0)).array();
    });
}

Value scale(const Value& a, double factor) {
    Tensor out = a.value();
    map(out) *= factor;
    return make_result(std::move(out), {a}, "scale", [factor](Node& n) {
        if (Tensor* ga = input_grad(n, 0)) map(*ga) += factor * map(static_cast<const Tensor&>(n.grad));
    });
}

Value transpose(const Value& a) {
    Tensor out(a.cols(), a.rows());
    map(out) = map(a.value()).transpose();
    return make_result(std::move(out), {a}, "transpose", [](Node& n) {
        if (Tensor* ga = input_grad(n, 0)) map(*ga) += map(static_cast<const Tensor&>(n.grad)).transpose();
    });
}

Value concat_rows(std::span<const Value> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
    const std::size_t cols = parts.front().cols();
    std::size_t rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols) shape_error("concat_rows", parts.front().value(), p.value());
        rows += p.rows();
    }
    Tensor out(rows, cols);
    std::size_t offset = 0;
    for (const auto& p : parts) {
        std::copy(p.value().data().begin(), p.value().data().end(), out.data().begin() + offset * cols);
        offset += p.rows();
    }
    return make_result(std::move(out), std::vector<Value>(parts.begin(), parts.end()), "concat_rows",
                       [](Node& n) {
                           std::size_t offset = 0;
                           const std::size_t cols = n.value.cols();
                           for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                               const std::size_t r = n.inputs[i]->value.rows();
                               if (Tensor* gi = input_grad(n, i)) {
                                   const double* src = n.grad.data().data() + offset * cols;
                                   for (std::size_t j = 0; j < r * cols; ++j) (*gi)[j] += src[j];
                               }
                               offset += r;
                           }
                       });
}

Value slice_rows(const Value& a, std::size_t begin, std::size_t count) {
    if (begin + count > a.rows())
        throw std::invalid_argument("slice_rows: rows [" + std::to_string(begin) + ", " +
                                    std::to_string(begin + count) + ") out of " + a.value().shape_string());
    const std::size_t cols = a.cols();
    Tensor out(count, cols);
    const auto src = a.value().data().subspan(begin * cols, count * cols);
    std::copy(src.begin(), src.end(), out.data().begin());
    return make_result(std::move(out), {a}, "slice_rows", [begin](Node& n) {
        if (Tensor* ga = input_grad(n, 0)) {
            const std::size_t cols = n.value.cols();
            for (std::size_t j = 0; j < n.grad.size(); ++j) (*ga)[begin * cols + j] += n.grad[j];
        }
    });
}

Value gather_rows(const Value& a, std::span<const std::size_t> rows) {
    const std::size_t cols = a.cols();
    Tensor out(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= a.rows())
            throw std::invalid_argument("gather_rows: row " + std::to_string(rows[i]) + " out of " +
                                        a.value().shape_string());
        const auto src = a.value().row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    std::vector<std::size_t> index(rows.begin(), rows.end());
    return make_result(std::move(out), {a}, "gather_rows", [index = std::move(index)](Node& n) {
        if (Tensor* ga = input_grad(n, 0)) {
            for (std::size_t i = 0; i < index.size(); ++i) {
                auto dst = ga->row(index[i]);
                const auto src = n.grad.row(i);
                for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
            }
        }
    });
}

Value replace_rows(const Value& a, std::span<const std::size_t> rows, const Value& replacement) {
    if (replacement.rows() != 1 || replacement.cols() != a.cols())
        shape_error("replace_rows", a.value(), replacement.value());
    std::vector<bool> replaced(a.rows(), false);
    for (std::size_t r : rows) {
        if (r >= a.rows())
            throw std::invalid_argument("replace_rows: row " + std::to_string(r) + " out of " +
                                        a.value().shape_string());
        replaced[r] = true;
    }
    Tensor out = a.value();
    for (std::size_t r = 0; r < a.rows(); ++r)
        if (replaced[r]) std::copy(replacement.value().data().begin(), replacement.value().data().end(),
                                   out.row(r).begin());
    return make_result(std::move(out), {a, replacement}, "replace_rows", [replaced = std::move(replaced)](Node& n) {
        Tensor* ga = input_grad(n, 0);
        Tensor* gr = input_grad(n, 1);
        for (std::size_t r = 0; r < replaced.size(); ++r) {
            const auto src = n.grad.row(r);
            auto dst = replaced[r] ? (gr ? gr->row(0) : std::span<double>{}) : (ga ? ga->row(r) : std::span<double>{});
            for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
        }
    });
}

Value mean_pool(const Value& a) {
    if (a.rows() == 0) throw std::invalid_argument("mean_pool: empty input");
    Tensor out(1, a.cols());
    map(out).row(0) = map(a.value()).colwise().mean();
    return make_result(std::move(out), {a}, "mean_pool", [](Node& n) {
        if (Tensor* ga = input_grad(n, 0)) {
            const double inv = 1.0 / static_cast<double>(ga->rows());
            map(*ga).rowwise() += inv * map(static_cast<const Tensor&>(n.grad)).row(0);
        }
    });
}

Value sum(const Value& a) {
    double total = 0.0;
    for (double v : a.value().data()) total += v;
    return make_result(Tensor::scalar(total), {a}, "sum", [](Node& n) {
        if (Tensor* ga = input_grad(n, 0)) {
            const double g = n.grad[0];
            for (double& v : ga->data()) v += g;
        }
    });
}

constexpr double kInvSqrt2 = 0.5 * std::numbers::sqrt2;

Value gelu(const Value& a) {
    Tensor out = a.value();
    for (double& x : out.data()) x = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    return make_result(std::move(out), {a}, "gelu", [](Node& n) {
        if (Tensor* ga = input_grad(n, 0)) {
            const Tensor& x = input_value(n, 0);
            constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double cdf = 0.5 * (1.0 + std::erf(x[i] * kInvSqrt2));
                const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x[i] * x[i]);
                (*ga)[i] += n.grad[i] * (cdf + x[i] * pdf);
            }
        }
    });
}

namespace {

void softmax_rows_inplace(Tensor& t) {
    for (std::size_t r = 0; r < t.rows(); ++r) {
        auto row = t.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (double& v : row) {
            v = std::exp(v - mx);
            total += v;
        }
        for (double& v : row) v /= total;
    }
}

// dS = P * (dP - rowsum(dP * P)) accumulated into `out`.
void softmax_rows_backward(const Tensor& p, const Tensor& dp, Tensor& out) {
    for (std::size_t r = 0; r < p.rows(); ++r) {
        const auto pr = p.row(r);
        const auto dr = dp.row(r);
        double dot = 0.0;
        for (std::size_t c = 0; c < pr.size(); ++c) dot += pr[c] * dr[c];
        auto o = out.row(r);
        for (std::size_t c = 0; c < pr.size(); ++c) o[c] += pr[c] * (dr[c] - dot);
    }
}

}  // namespace

Value softmax(const Value& x, Axis axis) {
    if (axis == Axis::rows) return transpose(softmax(transpose(x), Axis::cols));
    Tensor out = x.value();
    softmax_rows_inplace(out);
    return make_result(std::move(out), {x}, "softmax", [](Node& n) {
        if (Tensor* gx = input_grad(n, 0)) softmax_rows_backward(n.value, n.grad, *gx);
    });
}

Value layer_norm(const Value& x, const Value& gain, const Value& bias, double eps) {
    const std::size_t rows = x.rows();
    const std::size_t cols = x.cols();
    if (cols < 2) throw std::invalid_argument("layer_norm: last axis must have length >= 2");
    if (gain.rows() != 1 || gain.cols() != cols) shape_error("layer_norm gain", x.value(), gain.value());
    if (bias.rows() != 1 || bias.cols() != cols) shape_error("layer_norm bias", x.value(), bias.value());

    Tensor normalized(rows, cols);
    std::vector<double> inv_std(rows);
    Tensor out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto xr = x.value().row(r);
        double mean = 0.0;
        for (double v : xr) mean += v;
        mean /= static_cast<double>(cols);
        double var = 0.0;
        for (double v : xr) var += (v - mean) * (v - mean);
        var /= static_cast<double>(cols);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t c = 0; c < cols; ++c) {
            normalized(r, c) = (xr[c] - mean) * inv_std[r];
            out(r, c) = normalized(r, c) * gain.value()[c] + bias.value()[c];
        }
    }
    return make_result(std::move(out), {x, gain, bias}, "layer_norm",
                       [normalized = std::move(normalized), inv_std = std::move(inv_std)](Node& n) {
                           const Tensor& g = input_value(n, 1);
                           Tensor* gx = input_grad(n, 0);
                           Tensor* gg = input_grad(n, 1);
                           Tensor* gb = input_grad(n, 2);
                           const std::size_t cols = n.value.cols();
                           std::vector<double> dxhat(cols);
                           for (std::size_t r = 0; r < n.value.rows(); ++r) {
                               const auto dy = n.grad.row(r);
                               const auto xh = normalized.row(r);
                               double mean_d = 0.0;
                               double mean_dx = 0.0;
                               for (std::size_t c = 0; c < cols; ++c) {
                                   dxhat[c] = dy[c] * g[c];
                                   mean_d += dxhat[c];
                                   mean_dx += dxhat[c] * xh[c];
                                   if (gg) (*gg)[c] += dy[c] * xh[c];
                                   if (gb) (*gb)[c] += dy[c];
                               }
                               if (!gx) continue;
                               mean_d /= static_cast<double>(cols);
                               mean_dx /= static_cast<double>(cols);
                               auto out = gx->row(r);
                               for (std::size_t c = 0; c < cols; ++c)
                                   out[c] += inv_std[r] * (dxhat[c] - mean_d - xh[c] * mean_dx);
                           }
                       });
}

Value cross_entropy(const Value& logits, std::span<const std::size_t> targets) {
    if (targets.size() != logits.rows())
        throw std::invalid_argument("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                                    logits.value().shape_string() + " logits");
    if (targets.empty()) throw std::invalid_argument("cross_entropy: no targets");
    Tensor probs = logits.value();
    double total = 0.0;
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        if (targets[r] >= probs.cols())
            throw std::invalid_argument("cross_entropy: target " + std::to_string(targets[r]) +
                                        " out of range for " + std::to_string(probs.cols()) + " classes");
        auto row = probs.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double s = 0.0;
        for (double v : row) s += std::exp(v - mx);
        const double lse = mx + std::log(s);
        total += lse - row[targets[r]];
        for (double& v : row) v = std::exp(v - lse);
    }
    const double inv_rows = 1.0 / static_cast<double>(probs.rows());
    std::vector<std::size_t> tg(targets.begin(), targets.end());
    return make_result(Tensor::scalar(total * inv_rows), {logits}, "cross_entropy",
                       [probs = std::move(probs), tg = std::move(tg), inv_rows](Node& n) {
                           Tensor* gl = input_grad(n, 0);
                           if (!gl) return;
                           const double g = n.grad[0] * inv_rows;
                           for (std::size_t r = 0; r < probs.rows(); ++r) {
                               auto dst = gl->row(r);
                               const auto p = probs.row(r);
                               for (std::size_t c = 0; c < p.size(); ++c) dst[c] += g * p[c];
                               dst[tg[r]] -= g;
                           }
                       });
}

Value cross_entropy(const Value& logits, std::size_t target) {
    const std::size_t t[] = {target};
    return cross_entropy(logits, t);
}

Value attention(const Value& q, const Value& k, const Value& v, std::size_t heads, const Tensor* additive_mask) {
    const std::size_t width = q.cols();
    if (k.cols() != width) shape_error("attention q/k", q.value(), k.value());
    if (v.rows() != k.rows() || v.cols() != width) shape_error("attention k/v", k.value(), v.value());
    if (heads == 0 || width % heads != 0)
        throw std::invalid_argument("attention: width " + std::to_string(width) + " not divisible by " +
                                    std::to_string(heads) + " heads");
    if (additive_mask && (additive_mask->rows() != q.rows() || additive_mask->cols() != k.rows()))
        shape_error("attention mask", *additive_mask, k.value());

    const std::size_t lq = q.rows();
    const std::size_t lk = k.rows();
    const std::size_t dh = width / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    const Strided stride(static_cast<Eigen::Index>(width));

    Tensor out(lq, width);
    std::vector<Tensor> probs(heads, Tensor(lq, lk));
    for (std::size_t h = 0; h < heads; ++h) {
        ConstBlockMap qh(q.value().data().data() + h * dh, lq, dh, stride);
        ConstBlockMap kh(k.value().data().data() + h * dh, lk, dh, stride);
        ConstBlockMap vh(v.value().data().data() + h * dh, lk, dh, stride);
        auto p = map(probs[h]);
        p.noalias() = inv_sqrt * (qh * kh.transpose());
        if (additive_mask) p += map(*additive_mask);
        softmax_rows_inplace(probs[h]);
        BlockMap oh(out.data().data() + h * dh, lq, dh, stride);
        oh.noalias() = map(probs[h]) * vh;
    }

    return make_result(std::move(out), {q, k, v}, "attention",
                       [probs = std::move(probs), heads, dh, inv_sqrt, width](Node& n) {
                           const Strided stride(static_cast<Eigen::Index>(width));
                           const Tensor& qv = input_value(n, 0);
                           const Tensor& kv = input_value(n, 1);
                           const Tensor& vv = input_value(n, 2);
                           Tensor* gq = input_grad(n, 0);
                           Tensor* gk = input_grad(n, 1);
                           Tensor* gv = input_grad(n, 2);
                           const std::size_t lq = qv.rows();
                           const std::size_t lk = kv.rows();
                           Tensor dp(lq, lk);
                           Tensor ds(lq, lk);
                           for (std::size_t h = 0; h < heads; ++h) {
                               const std::size_t off = h * dh;
                               ConstBlockMap doh(n.grad.data().data() + off, lq, dh, stride);
                               ConstBlockMap qh(qv.data().data() + off, lq, dh, stride);
                               ConstBlockMap kh(kv.data().data() + off, lk, dh, stride);
                               ConstBlockMap vh(vv.data().data() + off, lk, dh, stride);
                               const auto p = map(probs[h]);
                               if (gv) BlockMap(gv->data().data() + off, lk, dh, stride).noalias() += p.transpose() * doh;
                               if (!gq && !gk) continue;
                               map(dp).noalias() = doh * vh.transpose();
                               ds.fill(0.0);
                               softmax_rows_backward(probs[h], dp, ds);
                               if (gq)
                                   BlockMap(gq->data().data() + off, lq, dh, stride).noalias() +=
                                       inv_sqrt * (map(ds) * kh);
                               if (gk)
                                   BlockMap(gk->data().data() + off, lk, dh, stride).noalias() +=
                                       inv_sqrt * (map(ds).transpose() * qh);
                           }
                       });
}

}  // namespace ffae::ad
