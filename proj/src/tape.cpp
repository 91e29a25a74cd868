#include "tscf/tape.hpp"

#include <cmath>
#include <cstring>

#include "tscf/errors.hpp"

namespace tscf::nn {

const char* act_name(Act a) {
    switch (a) {
        case Act::Relu: return "relu";
        case Act::Tanh: return "tanh";
        case Act::Sigmoid: return "sigmoid";
        case Act::Softmax: return "softmax";
    }
    return "?";
}

Act act_from_name(const std::string& name) {
    if (name == "relu") return Act::Relu;
    if (name == "tanh") return Act::Tanh;
    if (name == "sigmoid") return Act::Sigmoid;
    if (name == "softmax") return Act::Softmax;
    throw ConfigError("unknown activation kind: " + name);
}

std::uint32_t Tape::push(Tensor value, std::vector<std::uint32_t> parents,
                         BackwardFn fn) {
    Node node;
    node.value = std::move(value);
    node.parents = std::move(parents);
    node.backward_fn = std::move(fn);
    nodes_.push_back(std::move(node));
    return static_cast<std::uint32_t>(nodes_.size() - 1);
}

const Tape::Node& Tape::checked(ValueId id) const {
    if (!id.valid() || id.index >= nodes_.size()) {
        throw StateError("tape: value id does not refer to a recorded node");
    }
    return nodes_[id.index];
}

Tape::ValueId Tape::leaf(Tensor t) {
    return ValueId{push(std::move(t), {}, nullptr)};
}

Tape::ValueId Tape::leaf(const std::vector<float>& values, Shape shape) {
    return leaf(Tensor(std::move(shape), values));
}

const Tensor& Tape::value(ValueId id) const { return checked(id).value; }

// ---------------------------------------------------------------------------
// conv1d

Tape::ValueId Tape::conv1d(ValueId input, ValueId weights, ValueId bias) {
    const Tensor& in = checked(input).value;
    const Tensor& w = checked(weights).value;
    const Tensor& b = checked(bias).value;

    if (w.rank() != 3) {
        throw DimensionError("conv1d: weights must be [C_out,C_in,k], got " +
                             shape_str(w.shape));
    }
    const std::size_t c_out = w.dim(0), c_in = w.dim(1), k = w.dim(2);
    if (k % 2 == 0) {
        throw DimensionError("conv1d: kernel width must be odd for 'same' padding, got " +
                             std::to_string(k));
    }
    if (b.shape != Shape{c_out}) {
        throw DimensionError("conv1d: bias " + shape_str(b.shape) +
                             " does not match C_out=" + std::to_string(c_out));
    }
    const bool batched = in.rank() == 3;
    if (!batched && in.rank() != 2) {
        throw DimensionError("conv1d: input must be [C_in,T] or [B,C_in,T], got " +
                             shape_str(in.shape));
    }
    const std::size_t batch = batched ? in.dim(0) : 1;
    const std::size_t ci_dim = batched ? in.dim(1) : in.dim(0);
    const std::size_t t_len = batched ? in.dim(2) : in.dim(1);
    if (ci_dim != c_in) {
        throw DimensionError("conv1d: input channels " + std::to_string(ci_dim) +
                             " do not match weights C_in=" + std::to_string(c_in));
    }

    Shape out_shape = batched ? Shape{batch, c_out, t_len} : Shape{c_out, t_len};
    Tensor out = Tensor::zeros(std::move(out_shape));
    const std::size_t pad = k / 2;

    const float* in_p = in.values.data();
    const float* w_p = w.values.data();
    float* out_p = out.values.data();
    for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t co = 0; co < c_out; ++co) {
            float* orow = out_p + (bi * c_out + co) * t_len;
            const float bv = b.values[co];
            for (std::size_t t = 0; t < t_len; ++t) orow[t] = bv;
            for (std::size_t ci = 0; ci < c_in; ++ci) {
                const float* irow = in_p + (bi * c_in + ci) * t_len;
                const float* wrow = w_p + (co * c_in + ci) * k;
                for (std::size_t j = 0; j < k; ++j) {
                    const float wv = wrow[j];
                    const std::size_t t_lo = pad > j ? pad - j : 0;
                    const std::size_t t_hi = j > pad ? t_len + pad - j : t_len;
                    // source index t + j - pad stays in [0, t_len)
                    for (std::size_t t = t_lo; t < t_hi; ++t) {
                        orow[t] += wv * irow[t + j - pad];
                    }
                }
            }
        }
    }

    auto backward = [batch, c_out, c_in, k, t_len, pad](Tape& tape, std::uint32_t self) {
        const auto& parents = tape.node_parents(self);
        const std::vector<float>& dy = tape.node_grad(self);
        const Tensor& in_v = tape.node_value(parents[0]);
        const Tensor& w_v = tape.node_value(parents[1]);
        std::vector<float>& din = tape.grad_buffer(parents[0]);
        std::vector<float>& dw = tape.grad_buffer(parents[1]);
        std::vector<float>& db = tape.grad_buffer(parents[2]);

        for (std::size_t bi = 0; bi < batch; ++bi) {
            for (std::size_t co = 0; co < c_out; ++co) {
                const float* dyrow = dy.data() + (bi * c_out + co) * t_len;
                float dbv = 0.0f;
                for (std::size_t t = 0; t < t_len; ++t) dbv += dyrow[t];
                db[co] += dbv;
                for (std::size_t ci = 0; ci < c_in; ++ci) {
                    const float* irow = in_v.values.data() + (bi * c_in + ci) * t_len;
                    float* dirow = din.data() + (bi * c_in + ci) * t_len;
                    const float* wrow = w_v.values.data() + (co * c_in + ci) * k;
                    float* dwrow = dw.data() + (co * c_in + ci) * k;
                    for (std::size_t j = 0; j < k; ++j) {
                        const std::size_t t_lo = pad > j ? pad - j : 0;
                        const std::size_t t_hi = j > pad ? t_len + pad - j : t_len;
                        const float wv = wrow[j];
                        float acc = 0.0f;
                        for (std::size_t t = t_lo; t < t_hi; ++t) {
                            acc += irow[t + j - pad] * dyrow[t];
                            dirow[t + j - pad] += wv * dyrow[t];
                        }
                        dwrow[j] += acc;
                    }
                }
            }
        }
    };

    return ValueId{push(std::move(out), {input.index, weights.index, bias.index},
                        std::move(backward))};
}

// ---------------------------------------------------------------------------
// dense

Tape::ValueId Tape::dense(ValueId input, ValueId weights, ValueId bias) {
    const Tensor& in = checked(input).value;
    const Tensor& w = checked(weights).value;
    const Tensor& b = checked(bias).value;

    if (w.rank() != 2) {
        throw DimensionError("dense: weights must be [M,N], got " + shape_str(w.shape));
    }
    const std::size_t m = w.dim(0), n = w.dim(1);
    if (b.shape != Shape{m}) {
        throw DimensionError("dense: bias " + shape_str(b.shape) +
                             " does not match M=" + std::to_string(m));
    }
    const bool batched = in.rank() == 2;
    if (!batched && in.rank() != 1) {
        throw DimensionError("dense: input must be [N] or [B,N], got " +
                             shape_str(in.shape));
    }
    const std::size_t batch = batched ? in.dim(0) : 1;
    const std::size_t in_n = batched ? in.dim(1) : in.dim(0);
    if (in_n != n) {
        throw DimensionError("dense: input width " + std::to_string(in_n) +
                             " does not match weights N=" + std::to_string(n));
    }

    Tensor out = Tensor::zeros(batched ? Shape{batch, m} : Shape{m});
    for (std::size_t bi = 0; bi < batch; ++bi) {
        const float* irow = in.values.data() + bi * n;
        float* orow = out.values.data() + bi * m;
        for (std::size_t mi = 0; mi < m; ++mi) {
            const float* wrow = w.values.data() + mi * n;
            float acc = 0.0f;
            for (std::size_t ni = 0; ni < n; ++ni) acc += wrow[ni] * irow[ni];
            orow[mi] = acc + b.values[mi];
        }
    }

    auto backward = [batch, m, n](Tape& tape, std::uint32_t self) {
        const auto& parents = tape.node_parents(self);
        const std::vector<float>& dy = tape.node_grad(self);
        const Tensor& in_v = tape.node_value(parents[0]);
        const Tensor& w_v = tape.node_value(parents[1]);
        std::vector<float>& din = tape.grad_buffer(parents[0]);
        std::vector<float>& dw = tape.grad_buffer(parents[1]);
        std::vector<float>& db = tape.grad_buffer(parents[2]);

        for (std::size_t bi = 0; bi < batch; ++bi) {
            const float* irow = in_v.values.data() + bi * n;
            const float* dyrow = dy.data() + bi * m;
            float* dirow = din.data() + bi * n;
            for (std::size_t mi = 0; mi < m; ++mi) {
                const float g = dyrow[mi];
                if (g == 0.0f) continue;
                const float* wrow = w_v.values.data() + mi * n;
                float* dwrow = dw.data() + mi * n;
                for (std::size_t ni = 0; ni < n; ++ni) {
                    dirow[ni] += g * wrow[ni];
                    dwrow[ni] += g * irow[ni];
                }
                db[mi] += g;
            }
        }
    };

    return ValueId{push(std::move(out), {input.index, weights.index, bias.index},
                        std::move(backward))};
}

// ---------------------------------------------------------------------------
// batchnorm

Tape::ValueId Tape::batchnorm(ValueId input, ValueId gamma, ValueId beta,
                              Tensor& running_mean, Tensor& running_var,
                              Mode mode, double momentum, double eps) {
    const Tensor& in = checked(input).value;
    const Tensor& g = checked(gamma).value;
    const Tensor& bt = checked(beta).value;

    if (in.rank() != 2 && in.rank() != 3) {
        throw DimensionError("batchnorm: input must be [B,F] or [B,C,T], got " +
                             shape_str(in.shape));
    }
    const std::size_t batch = in.dim(0);
    const std::size_t feats = in.dim(1);
    const std::size_t t_len = in.rank() == 3 ? in.dim(2) : 1;
    if (g.shape != Shape{feats} || bt.shape != Shape{feats}) {
        throw DimensionError("batchnorm: gamma " + shape_str(g.shape) + " / beta " +
                             shape_str(bt.shape) + " do not match feature count " +
                             std::to_string(feats));
    }
    if (running_mean.shape != Shape{feats} || running_var.shape != Shape{feats}) {
        throw DimensionError("batchnorm: running stats do not match feature count " +
                             std::to_string(feats));
    }
    if (mode == Mode::Train && batch < 2) {
        throw DimensionError("batchnorm: train mode requires batch size >= 2, got " +
                             std::to_string(batch));
    }

    const std::size_t count = batch * t_len;  // elements per feature
    std::vector<float> mean(feats), invstd(feats);
    if (mode == Mode::Train) {
        for (std::size_t f = 0; f < feats; ++f) {
            double acc = 0.0;
            for (std::size_t bi = 0; bi < batch; ++bi) {
                const float* row = in.values.data() + (bi * feats + f) * t_len;
                for (std::size_t t = 0; t < t_len; ++t) acc += row[t];
            }
            const double mu = acc / static_cast<double>(count);
            double vacc = 0.0;
            for (std::size_t bi = 0; bi < batch; ++bi) {
                const float* row = in.values.data() + (bi * feats + f) * t_len;
                for (std::size_t t = 0; t < t_len; ++t) {
                    const double d = row[t] - mu;
                    vacc += d * d;
                }
            }
            const double var = vacc / static_cast<double>(count);  // biased
            mean[f] = static_cast<float>(mu);
            invstd[f] = static_cast<float>(1.0 / std::sqrt(var + eps));
            // running variance keeps the unbiased estimate
            const double var_unbiased =
                count > 1 ? vacc / static_cast<double>(count - 1) : var;
            running_mean.values[f] = static_cast<float>(
                (1.0 - momentum) * running_mean.values[f] + momentum * mu);
            running_var.values[f] = static_cast<float>(
                (1.0 - momentum) * running_var.values[f] + momentum * var_unbiased);
        }
    } else {
        for (std::size_t f = 0; f < feats; ++f) {
            mean[f] = running_mean.values[f];
            invstd[f] = static_cast<float>(
                1.0 / std::sqrt(static_cast<double>(running_var.values[f]) + eps));
        }
    }

    Tensor out = Tensor::zeros(in.shape);
    std::vector<float> xhat(in.numel());
    for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t f = 0; f < feats; ++f) {
            const float* row = in.values.data() + (bi * feats + f) * t_len;
            float* xrow = xhat.data() + (bi * feats + f) * t_len;
            float* orow = out.values.data() + (bi * feats + f) * t_len;
            const float mu = mean[f], is = invstd[f];
            const float gv = g.values[f], bv = bt.values[f];
            for (std::size_t t = 0; t < t_len; ++t) {
                xrow[t] = (row[t] - mu) * is;
                orow[t] = gv * xrow[t] + bv;
            }
        }
    }

    const bool train = mode == Mode::Train;
    auto backward = [batch, feats, t_len, count, train, xhat = std::move(xhat),
                     invstd = std::move(invstd)](Tape& tape, std::uint32_t self) {
        const auto& parents = tape.node_parents(self);
        const std::vector<float>& dy = tape.node_grad(self);
        const Tensor& g_v = tape.node_value(parents[1]);
        std::vector<float>& din = tape.grad_buffer(parents[0]);
        std::vector<float>& dgamma = tape.grad_buffer(parents[1]);
        std::vector<float>& dbeta = tape.grad_buffer(parents[2]);

        for (std::size_t f = 0; f < feats; ++f) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t bi = 0; bi < batch; ++bi) {
                const std::size_t base = (bi * feats + f) * t_len;
                for (std::size_t t = 0; t < t_len; ++t) {
                    sum_dy += dy[base + t];
                    sum_dy_xhat += static_cast<double>(dy[base + t]) * xhat[base + t];
                }
            }
            dgamma[f] += static_cast<float>(sum_dy_xhat);
            dbeta[f] += static_cast<float>(sum_dy);

            const float gis = g_v.values[f] * invstd[f];
            if (train) {
                const float mean_dy = static_cast<float>(sum_dy / count);
                const float mean_dy_xhat = static_cast<float>(sum_dy_xhat / count);
                for (std::size_t bi = 0; bi < batch; ++bi) {
                    const std::size_t base = (bi * feats + f) * t_len;
                    for (std::size_t t = 0; t < t_len; ++t) {
                        din[base + t] += gis * (dy[base + t] - mean_dy -
                                                xhat[base + t] * mean_dy_xhat);
                    }
                }
            } else {
                for (std::size_t bi = 0; bi < batch; ++bi) {
                    const std::size_t base = (bi * feats + f) * t_len;
                    for (std::size_t t = 0; t < t_len; ++t) {
                        din[base + t] += gis * dy[base + t];
                    }
                }
            }
        }
    };

    return ValueId{push(std::move(out), {input.index, gamma.index, beta.index},
                        std::move(backward))};
}

// ---------------------------------------------------------------------------
// activations

Tape::ValueId Tape::activation(ValueId input, Act kind) {
    const Tensor& in = checked(input).value;
    Tensor out = Tensor::zeros(in.shape);

    switch (kind) {
        case Act::Relu:
            for (std::size_t i = 0; i < in.numel(); ++i) {
                out.values[i] = in.values[i] > 0.0f ? in.values[i] : 0.0f;
            }
            break;
        case Act::Tanh:
            for (std::size_t i = 0; i < in.numel(); ++i) {
                out.values[i] = std::tanh(in.values[i]);
            }
            break;
        case Act::Sigmoid:
            for (std::size_t i = 0; i < in.numel(); ++i) {
                out.values[i] = 1.0f / (1.0f + std::exp(-in.values[i]));
            }
            break;
        case Act::Softmax: {
            if (in.rank() == 0 || in.shape.back() == 0) {
                throw DimensionError("softmax: empty class axis");
            }
            const std::size_t width = in.shape.back();
            const std::size_t rows = in.numel() / width;
            for (std::size_t r = 0; r < rows; ++r) {
                const float* x = in.values.data() + r * width;
                float* y = out.values.data() + r * width;
                float mx = x[0];
                for (std::size_t i = 1; i < width; ++i) mx = std::max(mx, x[i]);
                double denom = 0.0;
                for (std::size_t i = 0; i < width; ++i) {
                    y[i] = std::exp(x[i] - mx);
                    denom += y[i];
                }
                const float inv = static_cast<float>(1.0 / denom);
                for (std::size_t i = 0; i < width; ++i) y[i] *= inv;
            }
            break;
        }
    }

    auto backward = [kind](Tape& tape, std::uint32_t self) {
        const auto& parents = tape.node_parents(self);
        const std::vector<float>& dy = tape.node_grad(self);
        const Tensor& x = tape.node_value(parents[0]);
        const Tensor& y = tape.node_value(self);
        std::vector<float>& dx = tape.grad_buffer(parents[0]);

        switch (kind) {
            case Act::Relu:
                for (std::size_t i = 0; i < x.numel(); ++i) {
                    if (x.values[i] > 0.0f) dx[i] += dy[i];
                }
                break;
            case Act::Tanh:
                for (std::size_t i = 0; i < x.numel(); ++i) {
                    dx[i] += dy[i] * (1.0f - y.values[i] * y.values[i]);
                }
                break;
            case Act::Sigmoid:
                for (std::size_t i = 0; i < x.numel(); ++i) {
                    dx[i] += dy[i] * y.values[i] * (1.0f - y.values[i]);
                }
                break;
            case Act::Softmax: {
                const std::size_t width = x.shape.back();
                const std::size_t rows = x.numel() / width;
                for (std::size_t r = 0; r < rows; ++r) {
                    const float* yr = y.values.data() + r * width;
                    const float* dyr = dy.data() + r * width;
                    float* dxr = dx.data() + r * width;
                    double dot = 0.0;
                    for (std::size_t i = 0; i < width; ++i) {
                        dot += static_cast<double>(dyr[i]) * yr[i];
                    }
                    for (std::size_t i = 0; i < width; ++i) {
                        dxr[i] += yr[i] * (dyr[i] - static_cast<float>(dot));
                    }
                }
                break;
            }
        }
    };

    return ValueId{push(std::move(out), {input.index}, std::move(backward))};
}

// ---------------------------------------------------------------------------
// dropout

Tape::ValueId Tape::dropout(ValueId input, double rate, Mode mode, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ConfigError("dropout: rate must be in [0,1), got " + std::to_string(rate));
    }
    const Tensor& in = checked(input).value;

    if (mode == Mode::Eval || rate == 0.0) {
        Tensor out = in;
        out.grad.reset();
        auto backward = [](Tape& tape, std::uint32_t self) {
            const std::vector<float>& dy = tape.node_grad(self);
            std::vector<float>& dx = tape.grad_buffer(tape.node_parents(self)[0]);
            for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
        };
        return ValueId{push(std::move(out), {input.index}, std::move(backward))};
    }

    const float keep_scale = static_cast<float>(1.0 / (1.0 - rate));
    std::vector<float> mask(in.numel());
    Tensor out = Tensor::zeros(in.shape);
    for (std::size_t i = 0; i < in.numel(); ++i) {
        mask[i] = rng.uniform() >= rate ? keep_scale : 0.0f;
        out.values[i] = in.values[i] * mask[i];
    }

    auto backward = [mask = std::move(mask)](Tape& tape, std::uint32_t self) {
        const std::vector<float>& dy = tape.node_grad(self);
        std::vector<float>& dx = tape.grad_buffer(tape.node_parents(self)[0]);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * mask[i];
    };
    return ValueId{push(std::move(out), {input.index}, std::move(backward))};
}

// ---------------------------------------------------------------------------
// glue

Tape::ValueId Tape::add(ValueId a, ValueId b) {
    const Tensor& ta = checked(a).value;
    const Tensor& tb = checked(b).value;
    if (ta.shape != tb.shape) {
        throw DimensionError("add: shape mismatch " + shape_str(ta.shape) + " vs " +
                             shape_str(tb.shape));
    }
    Tensor out = Tensor::zeros(ta.shape);
    for (std::size_t i = 0; i < ta.numel(); ++i) {
        out.values[i] = ta.values[i] + tb.values[i];
    }
    auto backward = [](Tape& tape, std::uint32_t self) {
        const std::vector<float>& dy = tape.node_grad(self);
        const auto& parents = tape.node_parents(self);
        std::vector<float>& da = tape.grad_buffer(parents[0]);
        std::vector<float>& db = tape.grad_buffer(parents[1]);
        for (std::size_t i = 0; i < dy.size(); ++i) {
            da[i] += dy[i];
            db[i] += dy[i];
        }
    };
    return ValueId{push(std::move(out), {a.index, b.index}, std::move(backward))};
}

Tape::ValueId Tape::reshape(ValueId input, Shape s) {
    const Tensor& in = checked(input).value;
    if (shape_numel(s) != in.numel()) {
        throw DimensionError("reshape: cannot view " + shape_str(in.shape) + " as " +
                             shape_str(s));
    }
    Tensor out(std::move(s), in.values);
    auto backward = [](Tape& tape, std::uint32_t self) {
        const std::vector<float>& dy = tape.node_grad(self);
        std::vector<float>& dx = tape.grad_buffer(tape.node_parents(self)[0]);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
    };
    return ValueId{push(std::move(out), {input.index}, std::move(backward))};
}

Tape::ValueId Tape::sum(ValueId input) {
    const Tensor& in = checked(input).value;
    double acc = 0.0;
    for (float v : in.values) acc += v;
    Tensor out(Shape{1}, {static_cast<float>(acc)});
    auto backward = [](Tape& tape, std::uint32_t self) {
        const float g = tape.node_grad(self)[0];
        std::vector<float>& dx = tape.grad_buffer(tape.node_parents(self)[0]);
        for (float& v : dx) v += g;
    };
    return ValueId{push(std::move(out), {input.index}, std::move(backward))};
}

Tape::ValueId Tape::weighted_sum(const std::vector<ValueId>& scalars,
                                 const std::vector<double>& coeffs) {
    if (scalars.size() != coeffs.size() || scalars.empty()) {
        throw DimensionError("weighted_sum: needs matching, non-empty scalars and coeffs");
    }
    double acc = 0.0;
    std::vector<std::uint32_t> parents;
    parents.reserve(scalars.size());
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        const Tensor& t = checked(scalars[i]).value;
        if (t.numel() != 1) {
            throw DimensionError("weighted_sum: operand " + std::to_string(i) +
                                 " is not scalar: " + shape_str(t.shape));
        }
        acc += coeffs[i] * static_cast<double>(t.values[0]);
        parents.push_back(scalars[i].index);
    }
    Tensor out(Shape{1}, {static_cast<float>(acc)});
    auto backward = [coeffs](Tape& tape, std::uint32_t self) {
        const float g = tape.node_grad(self)[0];
        const auto& parents = tape.node_parents(self);
        for (std::size_t i = 0; i < parents.size(); ++i) {
            tape.grad_buffer(parents[i])[0] += static_cast<float>(coeffs[i]) * g;
        }
    };
    return ValueId{push(std::move(out), std::move(parents), std::move(backward))};
}

Tape::ValueId Tape::custom(std::vector<std::uint32_t> parents, Tensor out,
                           BackwardFn fn) {
    for (std::uint32_t p : parents) {
        if (p >= nodes_.size()) {
            throw StateError("custom node: parent id out of range");
        }
    }
    return ValueId{push(std::move(out), std::move(parents), std::move(fn))};
}

// ---------------------------------------------------------------------------
// backward

void Tape::backward(ValueId loss) {
    if (nodes_.empty()) {
        throw StateError("backward before forward: tape has no recorded nodes");
    }
    if (backward_done_) {
        throw StateError("backward already run on this tape");
    }
    const Node& loss_node = checked(loss);
    if (loss_node.value.numel() != 1) {
        throw DimensionError("backward: seed must be a scalar loss, got " +
                             shape_str(loss_node.value.shape));
    }
    for (Node& n : nodes_) {
        n.grad.assign(n.value.numel(), 0.0f);
        n.live = false;
    }
    nodes_[loss.index].grad[0] = 1.0f;
    nodes_[loss.index].live = true;
    for (std::uint32_t i = loss.index + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.live && n.backward_fn) n.backward_fn(*this, i);
    }
    backward_done_ = true;
}

const std::vector<float>& Tape::grad(ValueId id) const {
    if (!backward_done_) {
        throw StateError("gradient requested before backward was run");
    }
    return checked(id).grad;
}

Tensor Tape::grad_tensor(ValueId id) const {
    const Node& n = checked(id);
    Tensor t(n.value.shape, grad(id));
    return t;
}

}  // namespace tscf::nn
