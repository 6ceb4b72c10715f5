#include "salience/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace salience {

Tape::NodeId Tape::push(Tensor val, bool requires_grad, std::function<void()> back) {
    Node n;
    n.grad = Tensor(val.shape); // zeros
    n.val = std::move(val);
    n.requires_grad = requires_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::leaf(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, nullptr);
}

Tape::NodeId Tape::detach(NodeId a) { return push(value(a), false, nullptr); }

void Tape::backward(NodeId root) {
    Node& r = node(root);
    if (r.val.size() != 1) throw ValidationError("backward: root must be scalar");
    std::fill(r.grad.data.begin(), r.grad.data.end(), 0.0);
    for (auto& n : nodes_) std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
    r.grad.data[0] = 1.0;
    for (NodeId i = root; i >= 0; --i) {
        Node& n = node(i);
        if (n.back && n.requires_grad) n.back();
    }
}

namespace {
void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape != b.shape) throw ValidationError(std::string(op) + ": shape mismatch");
}
} // namespace

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    check_same_shape(va, vb, "add");
    Tensor out(va.shape);
    for (int64_t i = 0; i < out.size(); ++i) out.data[i] = va.data[i] + vb.data[i];
    bool rg = node(a).requires_grad || node(b).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, a, b] {
        const Tensor& g = node(id).grad;
        Tensor& ga = node(a).grad;
        Tensor& gb = node(b).grad;
        for (int64_t i = 0; i < g.size(); ++i) {
            ga.data[i] += g.data[i];
            gb.data[i] += g.data[i];
        }
    };
    return id;
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    check_same_shape(va, vb, "sub");
    Tensor out(va.shape);
    for (int64_t i = 0; i < out.size(); ++i) out.data[i] = va.data[i] - vb.data[i];
    bool rg = node(a).requires_grad || node(b).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, a, b] {
        const Tensor& g = node(id).grad;
        for (int64_t i = 0; i < g.size(); ++i) {
            node(a).grad.data[i] += g.data[i];
            node(b).grad.data[i] -= g.data[i];
        }
    };
    return id;
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    check_same_shape(va, vb, "mul");
    Tensor out(va.shape);
    for (int64_t i = 0; i < out.size(); ++i) out.data[i] = va.data[i] * vb.data[i];
    bool rg = node(a).requires_grad || node(b).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, a, b] {
        const Tensor& g = node(id).grad;
        const Tensor& va2 = node(a).val;
        const Tensor& vb2 = node(b).val;
        for (int64_t i = 0; i < g.size(); ++i) {
            node(a).grad.data[i] += g.data[i] * vb2.data[i];
            node(b).grad.data[i] += g.data[i] * va2.data[i];
        }
    };
    return id;
}

Tape::NodeId Tape::scale(NodeId a, double s) {
    Tensor out(value(a).shape);
    const Tensor& va = value(a);
    for (int64_t i = 0; i < out.size(); ++i) out.data[i] = va.data[i] * s;
    bool rg = node(a).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, a, s] {
        const Tensor& g = node(id).grad;
        for (int64_t i = 0; i < g.size(); ++i) node(a).grad.data[i] += g.data[i] * s;
    };
    return id;
}

Tape::NodeId Tape::rsub_const(double c, NodeId a) {
    Tensor out(value(a).shape);
    const Tensor& va = value(a);
    for (int64_t i = 0; i < out.size(); ++i) out.data[i] = c - va.data[i];
    bool rg = node(a).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, a] {
        const Tensor& g = node(id).grad;
        for (int64_t i = 0; i < g.size(); ++i) node(a).grad.data[i] -= g.data[i];
    };
    return id;
}

Tape::NodeId Tape::relu(NodeId a) {
    Tensor out(value(a).shape);
    const Tensor& va = value(a);
    for (int64_t i = 0; i < out.size(); ++i) out.data[i] = va.data[i] > 0.0 ? va.data[i] : 0.0;
    bool rg = node(a).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, a] {
        const Tensor& g = node(id).grad;
        const Tensor& va2 = node(a).val;
        for (int64_t i = 0; i < g.size(); ++i)
            if (va2.data[i] > 0.0) node(a).grad.data[i] += g.data[i];
    };
    return id;
}

Tape::NodeId Tape::conv2d(NodeId x, NodeId w, NodeId b, int stride, int pad) {
    const Tensor& vx = value(x);
    const Tensor& vw = value(w);
    const Tensor& vb = value(b);
    if (vx.rank() != 3 || vw.rank() != 4) throw ValidationError("conv2d: bad ranks");
    const int ic = vx.dim(0), h = vx.dim(1), wid = vx.dim(2);
    const int oc = vw.dim(0), k = vw.dim(2);
    if (vw.dim(1) != ic || vw.dim(3) != k || vb.size() != oc)
        throw ValidationError("conv2d: shape mismatch");
    const int oh = (h + 2 * pad - k) / stride + 1;
    const int ow = (wid + 2 * pad - k) / stride + 1;
    if (oh <= 0 || ow <= 0) throw ValidationError("conv2d: empty output");

    Tensor out({oc, oh, ow});
    for (int o = 0; o < oc; ++o) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = vb.data[o];
                const int y0 = oy * stride - pad;
                const int x0 = ox * stride - pad;
                for (int c = 0; c < ic; ++c) {
                    const double* xp = &vx.data[(static_cast<size_t>(c)) * h * wid];
                    const double* wp = &vw.data[((static_cast<size_t>(o)) * ic + c) * k * k];
                    for (int ky = 0; ky < k; ++ky) {
                        const int yy = y0 + ky;
                        if (yy < 0 || yy >= h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int xx = x0 + kx;
                            if (xx < 0 || xx >= wid) continue;
                            acc += wp[ky * k + kx] * xp[yy * wid + xx];
                        }
                    }
                }
                out.data[((static_cast<size_t>(o)) * oh + oy) * ow + ox] = acc;
            }
        }
    }
    bool rg = node(x).requires_grad || node(w).requires_grad || node(b).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, x, w, b, stride, pad, ic, h, wid, oc, k, oh, ow] {
        const Tensor& g = node(id).grad;
        const Tensor& vx2 = node(x).val;
        const Tensor& vw2 = node(w).val;
        Tensor& gx = node(x).grad;
        Tensor& gw = node(w).grad;
        Tensor& gb = node(b).grad;
        for (int o = 0; o < oc; ++o) {
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    const double go = g.data[((static_cast<size_t>(o)) * oh + oy) * ow + ox];
                    if (go == 0.0) continue;
                    gb.data[o] += go;
                    const int y0 = oy * stride - pad;
                    const int x0 = ox * stride - pad;
                    for (int c = 0; c < ic; ++c) {
                        const size_t xoff = static_cast<size_t>(c) * h * wid;
                        const size_t woff = (static_cast<size_t>(o) * ic + c) * k * k;
                        for (int ky = 0; ky < k; ++ky) {
                            const int yy = y0 + ky;
                            if (yy < 0 || yy >= h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                const int xx = x0 + kx;
                                if (xx < 0 || xx >= wid) continue;
                                gw.data[woff + ky * k + kx] += go * vx2.data[xoff + yy * wid + xx];
                                gx.data[xoff + yy * wid + xx] += go * vw2.data[woff + ky * k + kx];
                            }
                        }
                    }
                }
            }
        }
    };
    return id;
}

Tape::NodeId Tape::max_pool(NodeId x, int k, int stride, int pad) {
    const Tensor& vx = value(x);
    if (vx.rank() != 3) throw ValidationError("max_pool: input must be 3D");
    const int c = vx.dim(0), h = vx.dim(1), w = vx.dim(2);
    const int oh = (h + 2 * pad - k) / stride + 1;
    const int ow = (w + 2 * pad - k) / stride + 1;
    Tensor out({c, oh, ow});
    auto argmax = std::make_shared<std::vector<int64_t>>(out.size());
    for (int ch = 0; ch < c; ++ch) {
        const double* xp = &vx.data[static_cast<size_t>(ch) * h * w];
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double best = -1e300;
                int64_t best_idx = -1;
                for (int ky = 0; ky < k; ++ky) {
                    const int yy = oy * stride - pad + ky;
                    if (yy < 0 || yy >= h) continue;
                    for (int kx = 0; kx < k; ++kx) {
                        const int xx = ox * stride - pad + kx;
                        if (xx < 0 || xx >= w) continue;
                        const double v = xp[yy * w + xx];
                        if (v > best) {
                            best = v;
                            best_idx = static_cast<size_t>(ch) * h * w + yy * w + xx;
                        }
                    }
                }
                const size_t oidx = (static_cast<size_t>(ch) * oh + oy) * ow + ox;
                out.data[oidx] = best;
                (*argmax)[oidx] = best_idx;
            }
        }
    }
    bool rg = node(x).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, x, argmax] {
        const Tensor& g = node(id).grad;
        for (int64_t i = 0; i < g.size(); ++i)
            if ((*argmax)[i] >= 0) node(x).grad.data[(*argmax)[i]] += g.data[i];
    };
    return id;
}

Tape::NodeId Tape::avg_pool(NodeId x, int k, int stride) {
    const Tensor& vx = value(x);
    if (vx.rank() != 3) throw ValidationError("avg_pool: input must be 3D");
    const int c = vx.dim(0), h = vx.dim(1), w = vx.dim(2);
    const int oh = (h - k) / stride + 1;
    const int ow = (w - k) / stride + 1;
    const double inv = 1.0 / (k * k);
    Tensor out({c, oh, ow});
    for (int ch = 0; ch < c; ++ch) {
        const double* xp = &vx.data[static_cast<size_t>(ch) * h * w];
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx)
                        acc += xp[(oy * stride + ky) * w + ox * stride + kx];
                out.data[(static_cast<size_t>(ch) * oh + oy) * ow + ox] = acc * inv;
            }
    }
    bool rg = node(x).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, x, k, stride, c, h, w, oh, ow, inv] {
        const Tensor& g = node(id).grad;
        Tensor& gx = node(x).grad;
        for (int ch = 0; ch < c; ++ch)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    const double go = g.data[(static_cast<size_t>(ch) * oh + oy) * ow + ox] * inv;
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx)
                            gx.data[static_cast<size_t>(ch) * h * w + (oy * stride + ky) * w +
                                    ox * stride + kx] += go;
                }
    };
    return id;
}

Tape::NodeId Tape::global_avg_pool(NodeId x) {
    const Tensor& vx = value(x);
    if (vx.rank() != 3) throw ValidationError("global_avg_pool: input must be 3D");
    const int c = vx.dim(0), h = vx.dim(1), w = vx.dim(2);
    const double inv = 1.0 / (h * w);
    Tensor out({c});
    for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        const double* xp = &vx.data[static_cast<size_t>(ch) * h * w];
        for (int i = 0; i < h * w; ++i) acc += xp[i];
        out.data[ch] = acc * inv;
    }
    bool rg = node(x).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, x, c, h, w, inv] {
        const Tensor& g = node(id).grad;
        for (int ch = 0; ch < c; ++ch) {
            const double go = g.data[ch] * inv;
            double* gp = &node(x).grad.data[static_cast<size_t>(ch) * h * w];
            for (int i = 0; i < h * w; ++i) gp[i] += go;
        }
    };
    return id;
}

Tape::NodeId Tape::linear(NodeId v, NodeId w, NodeId b) {
    const Tensor& vv = value(v);
    const Tensor& vw = value(w);
    const Tensor& vb = value(b);
    if (vw.rank() != 2 || vv.size() != vw.dim(1) || vb.size() != vw.dim(0))
        throw ValidationError("linear: shape mismatch");
    const int out_n = vw.dim(0), in_n = vw.dim(1);
    Tensor out({out_n});
    for (int o = 0; o < out_n; ++o) {
        double acc = vb.data[o];
        for (int i = 0; i < in_n; ++i) acc += vw.data[static_cast<size_t>(o) * in_n + i] * vv.data[i];
        out.data[o] = acc;
    }
    bool rg = node(v).requires_grad || node(w).requires_grad || node(b).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, v, w, b, out_n, in_n] {
        const Tensor& g = node(id).grad;
        const Tensor& vv2 = node(v).val;
        const Tensor& vw2 = node(w).val;
        for (int o = 0; o < out_n; ++o) {
            const double go = g.data[o];
            node(b).grad.data[o] += go;
            for (int i = 0; i < in_n; ++i) {
                node(w).grad.data[static_cast<size_t>(o) * in_n + i] += go * vv2.data[i];
                node(v).grad.data[i] += go * vw2.data[static_cast<size_t>(o) * in_n + i];
            }
        }
    };
    return id;
}

Tape::NodeId Tape::concat_channels(const std::vector<NodeId>& xs) {
    if (xs.empty()) throw ValidationError("concat_channels: empty input list");
    int total_c = 0;
    const int h = value(xs[0]).dim(1), w = value(xs[0]).dim(2);
    bool rg = false;
    for (NodeId x : xs) {
        const Tensor& vx = value(x);
        if (vx.rank() != 3 || vx.dim(1) != h || vx.dim(2) != w)
            throw ValidationError("concat_channels: spatial size mismatch");
        total_c += vx.dim(0);
        rg = rg || node(x).requires_grad;
    }
    Tensor out({total_c, h, w});
    size_t off = 0;
    for (NodeId x : xs) {
        const Tensor& vx = value(x);
        std::copy(vx.data.begin(), vx.data.end(), out.data.begin() + off);
        off += vx.data.size();
    }
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, xs] {
        const Tensor& g = node(id).grad;
        size_t off2 = 0;
        for (NodeId x : xs) {
            Tensor& gx = node(x).grad;
            for (int64_t i = 0; i < gx.size(); ++i) gx.data[i] += g.data[off2 + i];
            off2 += gx.data.size();
        }
    };
    return id;
}

Tape::NodeId Tape::batch_norm_frozen(NodeId x, NodeId gamma, NodeId beta,
                                     const Tensor& running_mean, const Tensor& running_var,
                                     double eps) {
    const Tensor& vx = value(x);
    if (vx.rank() != 3) throw ValidationError("batch_norm: input must be 3D");
    const int c = vx.dim(0), hw = vx.dim(1) * vx.dim(2);
    if (value(gamma).size() != c || value(beta).size() != c || running_mean.size() != c ||
        running_var.size() != c)
        throw ValidationError("batch_norm: channel mismatch");
    auto inv_std = std::make_shared<std::vector<double>>(c);
    for (int ch = 0; ch < c; ++ch)
        (*inv_std)[ch] = 1.0 / std::sqrt(running_var.data[ch] + eps);
    Tensor out(vx.shape);
    const Tensor& vg = value(gamma);
    const Tensor& vb = value(beta);
    auto mean = std::make_shared<std::vector<double>>(running_mean.data);
    for (int ch = 0; ch < c; ++ch) {
        const double s = vg.data[ch] * (*inv_std)[ch];
        const double m = (*mean)[ch];
        const double* xp = &vx.data[static_cast<size_t>(ch) * hw];
        double* op = &out.data[static_cast<size_t>(ch) * hw];
        for (int i = 0; i < hw; ++i) op[i] = (xp[i] - m) * s + vb.data[ch];
    }
    bool rg = node(x).requires_grad || node(gamma).requires_grad || node(beta).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, x, gamma, beta, c, hw, inv_std, mean] {
        const Tensor& g = node(id).grad;
        const Tensor& vx2 = node(x).val;
        const Tensor& vg2 = node(gamma).val;
        for (int ch = 0; ch < c; ++ch) {
            const double is = (*inv_std)[ch];
            const double m = (*mean)[ch];
            double dg = 0.0, db = 0.0;
            for (int i = 0; i < hw; ++i) {
                const double go = g.data[static_cast<size_t>(ch) * hw + i];
                db += go;
                dg += go * (vx2.data[static_cast<size_t>(ch) * hw + i] - m) * is;
                node(x).grad.data[static_cast<size_t>(ch) * hw + i] += go * vg2.data[ch] * is;
            }
            node(gamma).grad.data[ch] += dg;
            node(beta).grad.data[ch] += db;
        }
    };
    return id;
}

Tape::NodeId Tape::class_cam(NodeId features, NodeId class_weights, int class_index) {
    const Tensor& vf = value(features);
    const Tensor& vw = value(class_weights);
    if (vf.rank() != 3 || vw.rank() != 2 || vw.dim(1) != vf.dim(0))
        throw ValidationError("class_cam: shape mismatch");
    if (class_index < 0 || class_index >= vw.dim(0))
        throw ValidationError("class_cam: class index out of range");
    const int c = vf.dim(0), h = vf.dim(1), w = vf.dim(2);
    Tensor out({h, w});
    for (int ch = 0; ch < c; ++ch) {
        const double wc = vw.data[static_cast<size_t>(class_index) * c + ch];
        const double* fp = &vf.data[static_cast<size_t>(ch) * h * w];
        for (int i = 0; i < h * w; ++i) out.data[i] += wc * fp[i];
    }
    bool rg = node(features).requires_grad || node(class_weights).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, features, class_weights, class_index, c, h, w] {
        const Tensor& g = node(id).grad;
        const Tensor& vf2 = node(features).val;
        const Tensor& vw2 = node(class_weights).val;
        for (int ch = 0; ch < c; ++ch) {
            const double wc = vw2.data[static_cast<size_t>(class_index) * c + ch];
            double dw = 0.0;
            const double* fp = &vf2.data[static_cast<size_t>(ch) * h * w];
            double* gfp = &node(features).grad.data[static_cast<size_t>(ch) * h * w];
            for (int i = 0; i < h * w; ++i) {
                gfp[i] += g.data[i] * wc;
                dw += g.data[i] * fp[i];
            }
            node(class_weights).grad.data[static_cast<size_t>(class_index) * c + ch] += dw;
        }
    };
    return id;
}

Tape::NodeId Tape::normalize_unit(NodeId a) {
    const Tensor& va = value(a);
    int64_t imin = 0, imax = 0;
    for (int64_t i = 1; i < va.size(); ++i) {
        if (va.data[i] < va.data[imin]) imin = i;
        if (va.data[i] > va.data[imax]) imax = i;
    }
    const double mn = va.data[imin], mx = va.data[imax];
    Tensor out(va.shape);
    const bool degenerate = (mx == mn);
    if (degenerate) {
        std::fill(out.data.begin(), out.data.end(), 0.5);
    } else {
        const double inv = 1.0 / (mx - mn);
        for (int64_t i = 0; i < va.size(); ++i) out.data[i] = (va.data[i] - mn) * inv;
    }
    bool rg = node(a).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg && !degenerate) node(id).back = [this, id, a, imin, imax, mn, mx] {
        const Tensor& g = node(id).grad;
        const Tensor& va2 = node(a).val;
        Tensor& ga = node(a).grad;
        const double d = mx - mn;
        const double inv = 1.0 / d;
        const double inv2 = inv * inv;
        double dmin = 0.0, dmax = 0.0;
        for (int64_t i = 0; i < g.size(); ++i) {
            ga.data[i] += g.data[i] * inv;
            dmin += g.data[i] * (va2.data[i] - mx) * inv2;
            dmax -= g.data[i] * (va2.data[i] - mn) * inv2;
        }
        ga.data[imin] += dmin;
        ga.data[imax] += dmax;
    };
    return id;
}

Tape::NodeId Tape::mse_vs_const(NodeId a, const Tensor& target) {
    const Tensor& va = value(a);
    check_same_shape(va, target, "mse_vs_const");
    double acc = 0.0;
    for (int64_t i = 0; i < va.size(); ++i) {
        const double d = va.data[i] - target.data[i];
        acc += d * d;
    }
    const double n = static_cast<double>(va.size());
    Tensor out({1});
    out.data[0] = acc / n;
    bool rg = node(a).requires_grad;
    auto tgt = std::make_shared<Tensor>(target);
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, a, tgt, n] {
        const double go = node(id).grad.data[0] * 2.0 / n;
        const Tensor& va2 = node(a).val;
        for (int64_t i = 0; i < va2.size(); ++i)
            node(a).grad.data[i] += go * (va2.data[i] - tgt->data[i]);
    };
    return id;
}

Tape::NodeId Tape::mse(NodeId a, NodeId b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    check_same_shape(va, vb, "mse");
    double acc = 0.0;
    for (int64_t i = 0; i < va.size(); ++i) {
        const double d = va.data[i] - vb.data[i];
        acc += d * d;
    }
    const double n = static_cast<double>(va.size());
    Tensor out({1});
    out.data[0] = acc / n;
    bool rg = node(a).requires_grad || node(b).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, a, b, n] {
        const double go = node(id).grad.data[0] * 2.0 / n;
        const Tensor& va2 = node(a).val;
        const Tensor& vb2 = node(b).val;
        for (int64_t i = 0; i < va2.size(); ++i) {
            const double d = go * (va2.data[i] - vb2.data[i]);
            node(a).grad.data[i] += d;
            node(b).grad.data[i] -= d;
        }
    };
    return id;
}

Tape::NodeId Tape::cross_entropy(NodeId logits, int label) {
    const Tensor& vl = value(logits);
    if (vl.size() != 2) throw ValidationError("cross_entropy: expected 2 logits");
    if (label != 0 && label != 1) throw ValidationError("cross_entropy: label must be 0 or 1");
    const double m = std::max(vl.data[0], vl.data[1]);
    const double lse = m + std::log(std::exp(vl.data[0] - m) + std::exp(vl.data[1] - m));
    Tensor out({1});
    out.data[0] = lse - vl.data[label];
    bool rg = node(logits).requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, logits, label, m, lse] {
        const double go = node(id).grad.data[0];
        const Tensor& vl2 = node(logits).val;
        for (int c = 0; c < 2; ++c) {
            const double p = std::exp(vl2.data[c] - lse);
            node(logits).grad.data[c] += go * (p - (c == label ? 1.0 : 0.0));
        }
    };
    return id;
}

Tape::NodeId Tape::weighted_sum(const std::vector<NodeId>& terms,
                                const std::vector<double>& coeffs) {
    if (terms.empty() || terms.size() != coeffs.size())
        throw ValidationError("weighted_sum: term/coefficient mismatch");
    double acc = 0.0;
    bool rg = false;
    for (size_t i = 0; i < terms.size(); ++i) {
        if (value(terms[i]).size() != 1) throw ValidationError("weighted_sum: non-scalar term");
        acc += coeffs[i] * scalar(terms[i]);
        rg = rg || node(terms[i]).requires_grad;
    }
    Tensor out({1});
    out.data[0] = acc;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) node(id).back = [this, id, terms, coeffs] {
        const double go = node(id).grad.data[0];
        for (size_t i = 0; i < terms.size(); ++i) node(terms[i]).grad.data[0] += go * coeffs[i];
    };
    return id;
}

} // namespace salience
