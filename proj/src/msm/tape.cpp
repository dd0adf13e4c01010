#include "axmag/tape.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

#include "axmag/frame.hpp"

namespace axmag::nn {
namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using MapConstMat = Eigen::Map<const RowMat<T>>;

template <class T>
void check_same(const Tensor3<T>& a, const Tensor3<T>& b, const char* op) {
    if (!a.same_shape(b)) throw ShapeError(std::string(op) + ": shape mismatch");
}

}  // namespace

template <class T>
typename Tape<T>::Var Tape<T>::push(Tensor3<T> value, bool requires_grad) {
    nodes_.push_back(Node{std::move(value), {}, requires_grad, {}});
    return static_cast<Var>(nodes_.size() - 1);
}

template <class T>
Tensor3<T>& Tape<T>::grad_buffer(Var v) {
    Node& n = nodes_[v];
    if (n.grad.size() != n.value.size()) n.grad = Tensor3<T>(n.value.c, n.value.h, n.value.w);
    return n.grad;
}

template <class T>
typename Tape<T>::Var Tape<T>::constant(Tensor3<T> value) {
    return push(std::move(value), false);
}

template <class T>
typename Tape<T>::Var Tape<T>::leaf(Tensor3<T> value) {
    return push(std::move(value), true);
}

template <class T>
typename Tape<T>::Var Tape<T>::conv2d(Var x, Var weight, Var bias, int kh, int kw, int stride) {
    const Tensor3<T>& in = nodes_[x].value;
    const Tensor3<T>& wt = nodes_[weight].value;
    const int cin = in.c, cout = wt.c;
    if (wt.h != cin || wt.w != kh * kw) throw ShapeError("conv2d: weight does not match input channels or kernel");
    if (bias != kNone && nodes_[bias].value.size() != static_cast<std::size_t>(cout)) throw ShapeError("conv2d: bias size");
    const int ph = kh / 2, pw = kw / 2;
    const int ho = (in.h + 2 * ph - kh) / stride + 1;
    const int wo = (in.w + 2 * pw - kw) / stride + 1;
    const int k = cin * kh * kw;
    const int n = ho * wo;

    // im2col: row (ci, ky, kx), column (oy, ox)
    std::vector<T> cols(static_cast<std::size_t>(k) * n, T(0));
    for (int ci = 0; ci < cin; ++ci)
        for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
                T* row = cols.data() + static_cast<std::size_t>((ci * kh + ky) * kw + kx) * n;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride + ky - ph;
                    if (iy < 0 || iy >= in.h) continue;
                    const T* src = in.v.data() + (static_cast<std::size_t>(ci) * in.h + iy) * in.w;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride + kx - pw;
                        if (ix >= 0 && ix < in.w) row[oy * wo + ox] = src[ix];
                    }
                }
            }

    Tensor3<T> out(cout, ho, wo);
    MapMat<T> o(out.v.data(), cout, n);
    MapConstMat<T> wm(wt.v.data(), cout, k);
    MapConstMat<T> cm(cols.data(), k, n);
    o.noalias() = wm * cm;
    if (bias != kNone) {
        const auto& b = nodes_[bias].value.v;
        for (int co = 0; co < cout; ++co) o.row(co).array() += b[co];
    }

    // push() may reallocate the node list, so nothing may read `in` past it.
    const int in_h = in.h, in_w = in.w;
    const bool rg = nodes_[x].requires_grad || nodes_[weight].requires_grad || (bias != kNone && nodes_[bias].requires_grad);
    const Var id = push(std::move(out), rg);
    if (!rg) return id;
    nodes_[id].backward = [this, id, x, weight, bias, kh, kw, stride, ph, pw, cin, cout, ho, wo, k, n, in_h, in_w,
                           cols = std::move(cols)]() {
        MapConstMat<T> g(nodes_[id].grad.v.data(), cout, n);
        if (nodes_[weight].requires_grad) {
            MapMat<T> gw(grad_buffer(weight).v.data(), cout, k);
            gw.noalias() += g * MapConstMat<T>(cols.data(), k, n).transpose();
        }
        if (bias != kNone && nodes_[bias].requires_grad) {
            auto& gb = grad_buffer(bias).v;
            // Plain loop: Eigen's vectorized sum() order depends on buffer alignment.
            const T* gp = nodes_[id].grad.v.data();
            for (int co = 0; co < cout; ++co) {
                T acc = T(0);
                for (int i = 0; i < n; ++i) acc += gp[static_cast<std::size_t>(co) * n + i];
                gb[co] += acc;
            }
        }
        if (nodes_[x].requires_grad) {
            RowMat<T> gcols = MapConstMat<T>(nodes_[weight].value.v.data(), cout, k).transpose() * g;
            auto& gx = grad_buffer(x).v;
            for (int ci = 0; ci < cin; ++ci)
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx) {
                        const T* row = gcols.data() + static_cast<std::size_t>((ci * kh + ky) * kw + kx) * n;
                        for (int oy = 0; oy < ho; ++oy) {
                            const int iy = oy * stride + ky - ph;
                            if (iy < 0 || iy >= in_h) continue;
                            T* dst = gx.data() + (static_cast<std::size_t>(ci) * in_h + iy) * in_w;
                            for (int ox = 0; ox < wo; ++ox) {
                                const int ix = ox * stride + kx - pw;
                                if (ix >= 0 && ix < in_w) dst[ix] += row[oy * wo + ox];
                            }
                        }
                    }
        }
    };
    return id;
}

template <class T>
typename Tape<T>::Var Tape<T>::relu(Var x) {
    Tensor3<T> out = nodes_[x].value;
    for (T& v : out.v) v = v < T(0) ? T(0) : v;  // NaN passes through
    const bool rg = nodes_[x].requires_grad;
    const Var id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].backward = [this, id, x]() {
            const auto& g = nodes_[id].grad.v;
            const auto& y = nodes_[id].value.v;
            auto& gx = grad_buffer(x).v;
            for (std::size_t i = 0; i < g.size(); ++i)
                if (y[i] > T(0)) gx[i] += g[i];
        };
    }
    return id;
}

template <class T>
typename Tape<T>::Var Tape<T>::lincomb(Var a, T ca, Var b, T cb) {
    check_same(nodes_[a].value, nodes_[b].value, "lincomb");
    Tensor3<T> out = nodes_[a].value;
    const auto& bv = nodes_[b].value.v;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = ca * out.v[i] + cb * bv[i];
    const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    const Var id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].backward = [this, id, a, b, ca, cb]() {
            const auto& g = nodes_[id].grad.v;
            if (nodes_[a].requires_grad) {
                auto& ga = grad_buffer(a).v;
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += ca * g[i];
            }
            if (nodes_[b].requires_grad) {
                auto& gb = grad_buffer(b).v;
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += cb * g[i];
            }
        };
    }
    return id;
}

// Plain sums are exact (no multiplication by 1), which keeps s + h(0) == s bitwise.
template <class T>
typename Tape<T>::Var Tape<T>::add(Var a, Var b) {
    check_same(nodes_[a].value, nodes_[b].value, "add");
    Tensor3<T> out = nodes_[a].value;
    const auto& bv = nodes_[b].value.v;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += bv[i];
    const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    const Var id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].backward = [this, id, a, b]() {
            const auto& g = nodes_[id].grad.v;
            for (Var t : {a, b}) {
                if (!nodes_[t].requires_grad) continue;
                auto& gt = grad_buffer(t).v;
                for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i];
            }
        };
    }
    return id;
}

template <class T>
typename Tape<T>::Var Tape<T>::sub(Var a, Var b) {
    check_same(nodes_[a].value, nodes_[b].value, "sub");
    Tensor3<T> out = nodes_[a].value;
    const auto& bv = nodes_[b].value.v;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= bv[i];
    const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    const Var id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].backward = [this, id, a, b]() {
            const auto& g = nodes_[id].grad.v;
            if (nodes_[a].requires_grad) {
                auto& ga = grad_buffer(a).v;
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (nodes_[b].requires_grad) {
                auto& gb = grad_buffer(b).v;
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
            }
        };
    }
    return id;
}

template <class T>
typename Tape<T>::Var Tape<T>::scale(Var x, T s) {
    Tensor3<T> out = nodes_[x].value;
    for (T& v : out.v) v *= s;
    const bool rg = nodes_[x].requires_grad;
    const Var id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].backward = [this, id, x, s]() {
            const auto& g = nodes_[id].grad.v;
            auto& gx = grad_buffer(x).v;
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += s * g[i];
        };
    }
    return id;
}

template <class T>
typename Tape<T>::Var Tape<T>::mul_map(Var x, const Tensor3<T>& map) {
    const Tensor3<T>& in = nodes_[x].value;
    if (map.c != 1 || map.h != in.h || map.w != in.w) throw ShapeError("mul_map: map must be (1, H, W)");
    Tensor3<T> out = in;
    const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
    for (int c = 0; c < in.c; ++c)
        for (std::size_t i = 0; i < plane; ++i) out.v[c * plane + i] *= map.v[i];
    const bool rg = nodes_[x].requires_grad;
    const Var id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].backward = [this, id, x, map, plane]() {
            const auto& g = nodes_[id].grad.v;
            auto& gx = grad_buffer(x).v;
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += map.v[i % plane] * g[i];
        };
    }
    return id;
}

template <class T>
typename Tape<T>::Var Tape<T>::transpose_hw(Var x) {
    const Tensor3<T>& in = nodes_[x].value;
    Tensor3<T> out(in.c, in.w, in.h);
    for (int c = 0; c < in.c; ++c)
        for (int y = 0; y < in.h; ++y)
            for (int xx = 0; xx < in.w; ++xx) out.at(c, xx, y) = in.at(c, y, xx);
    const bool rg = nodes_[x].requires_grad;
    const Var id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].backward = [this, id, x]() {
            const auto& g = nodes_[id].grad;
            auto& gx = grad_buffer(x);
            for (int c = 0; c < gx.c; ++c)
                for (int y = 0; y < gx.h; ++y)
                    for (int xx = 0; xx < gx.w; ++xx) gx.at(c, y, xx) += g.at(c, xx, y);
        };
    }
    return id;
}

template <class T>
typename Tape<T>::Var Tape<T>::upsample2(Var x) {
    const Tensor3<T>& in = nodes_[x].value;
    Tensor3<T> out(in.c, in.h * 2, in.w * 2);
    for (int c = 0; c < out.c; ++c)
        for (int y = 0; y < out.h; ++y)
            for (int xx = 0; xx < out.w; ++xx) out.at(c, y, xx) = in.at(c, y / 2, xx / 2);
    const bool rg = nodes_[x].requires_grad;
    const Var id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].backward = [this, id, x]() {
            const auto& g = nodes_[id].grad;
            auto& gx = grad_buffer(x);
            for (int c = 0; c < g.c; ++c)
                for (int y = 0; y < g.h; ++y)
                    for (int xx = 0; xx < g.w; ++xx) gx.at(c, y / 2, xx / 2) += g.at(c, y, xx);
        };
    }
    return id;
}

template <class T>
typename Tape<T>::Var Tape<T>::concat(Var a, Var b) {
    const Tensor3<T>& av = nodes_[a].value;
    const Tensor3<T>& bv = nodes_[b].value;
    if (av.h != bv.h || av.w != bv.w) throw ShapeError("concat: spatial size mismatch");
    Tensor3<T> out(av.c + bv.c, av.h, av.w);
    std::copy(av.v.begin(), av.v.end(), out.v.begin());
    std::copy(bv.v.begin(), bv.v.end(), out.v.begin() + av.v.size());
    const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    const std::size_t split = av.v.size();
    const Var id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].backward = [this, id, a, b, split]() {
            const auto& g = nodes_[id].grad.v;
            if (nodes_[a].requires_grad) {
                auto& ga = grad_buffer(a).v;
                for (std::size_t i = 0; i < split; ++i) ga[i] += g[i];
            }
            if (nodes_[b].requires_grad) {
                auto& gb = grad_buffer(b).v;
                for (std::size_t i = split; i < g.size(); ++i) gb[i - split] += g[i];
            }
        };
    }
    return id;
}

template <class T>
typename Tape<T>::Var Tape<T>::l1(Var a, Var b) {
    check_same(nodes_[a].value, nodes_[b].value, "l1");
    const auto& av = nodes_[a].value.v;
    const auto& bv = nodes_[b].value.v;
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += std::abs(static_cast<double>(av[i]) - static_cast<double>(bv[i]));
    const T inv = T(1) / static_cast<T>(av.size());
    const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    const Var id = push(Tensor3<T>(1, 1, 1, static_cast<T>(s / static_cast<double>(av.size()))), rg);
    if (rg) {
        nodes_[id].backward = [this, id, a, b, inv]() {
            const T g = nodes_[id].grad.v[0] * inv;
            const auto& av2 = nodes_[a].value.v;
            const auto& bv2 = nodes_[b].value.v;
            std::vector<T>* ga = nodes_[a].requires_grad ? &grad_buffer(a).v : nullptr;
            std::vector<T>* gb = nodes_[b].requires_grad ? &grad_buffer(b).v : nullptr;
            for (std::size_t i = 0; i < av2.size(); ++i) {
                const T d = av2[i] - bv2[i];
                const T s = d > T(0) ? g : (d < T(0) ? -g : T(0));
                if (ga) (*ga)[i] += s;
                if (gb) (*gb)[i] -= s;
            }
        };
    }
    return id;
}

template <class T>
typename Tape<T>::Var Tape<T>::weighted_sum(const std::vector<Var>& terms, const std::vector<T>& weights) {
    if (terms.size() != weights.size()) throw std::invalid_argument("weighted_sum: one weight per term");
    T s = T(0);
    bool rg = false;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (nodes_[terms[i]].value.size() != 1) throw ShapeError("weighted_sum: terms must be scalars");
        s += weights[i] * nodes_[terms[i]].value.v[0];
        rg = rg || nodes_[terms[i]].requires_grad;
    }
    const Var id = push(Tensor3<T>(1, 1, 1, s), rg);
    if (rg) {
        nodes_[id].backward = [this, id, terms, weights]() {
            const T g = nodes_[id].grad.v[0];
            for (std::size_t i = 0; i < terms.size(); ++i)
                if (nodes_[terms[i]].requires_grad) grad_buffer(terms[i]).v[0] += weights[i] * g;
        };
    }
    return id;
}

template <class T>
void Tape<T>::backward(Var root) {
    if (nodes_[root].value.size() != 1) throw ShapeError("backward needs a scalar root");
    grad_buffer(root).v[0] = T(1);
    for (Var i = root; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.backward && n.grad.size() == n.value.size()) n.backward();
    }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace axmag::nn
