#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace axmag::nn {

/// Channel-major (C, H, W) array.
template <class T>
struct Tensor3 {
    int c = 0;
    int h = 0;
    int w = 0;
    std::vector<T> v;

    Tensor3() = default;
    Tensor3(int c_, int h_, int w_, T fill = T(0))
        : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, fill) {}

    std::size_t size() const { return v.size(); }
    T& at(int ch, int y, int x) { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
    T at(int ch, int y, int x) const { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
    bool same_shape(const Tensor3& o) const { return c == o.c && h == o.h && w == o.w; }
};

/// Reverse-mode differentiation record. Every operation appends a node;
/// since inputs always precede outputs, backward() walks the node list in
/// reverse, which visits each node once in reverse topological order.
template <class T>
class Tape {
public:
    using Var = int;
    static constexpr Var kNone = -1;

    Var constant(Tensor3<T> value);
    /// Leaf whose gradient is accumulated.
    Var leaf(Tensor3<T> value);

    const Tensor3<T>& value(Var v) const { return nodes_[v].value; }
    /// Gradient of a node after backward(); empty when nothing reached it.
    const Tensor3<T>& grad(Var v) const { return nodes_[v].grad; }
    bool requires_grad(Var v) const { return nodes_[v].requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    /// 2D convolution with zero padding (kh/2, kw/2). Weight is stored as
    /// (cout, cin, kh*kw); bias as (cout, 1, 1) or kNone.
    Var conv2d(Var x, Var weight, Var bias, int kh, int kw, int stride = 1);
    Var relu(Var x);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scale(Var x, T s);
    /// ca * a + cb * b.
    Var lincomb(Var a, T ca, Var b, T cb);
    /// Multiplies every channel by a (1, H, W) map; the map gets no gradient.
    Var mul_map(Var x, const Tensor3<T>& map);
    /// Swaps the two spatial axes.
    Var transpose_hw(Var x);
    /// Nearest-neighbour x2 upsampling.
    Var upsample2(Var x);
    /// Channel concatenation.
    Var concat(Var a, Var b);
    /// Mean absolute difference, a (1,1,1) scalar.
    Var l1(Var a, Var b);
    /// Sum of weighted scalar nodes.
    Var weighted_sum(const std::vector<Var>& terms, const std::vector<T>& weights);

    /// Seeds d(root)/d(root) = 1 and propagates to every node.
    void backward(Var root);

private:
    struct Node {
        Tensor3<T> value;
        Tensor3<T> grad;
        bool requires_grad = false;
        std::function<void()> backward;
    };

    Var push(Tensor3<T> value, bool requires_grad);
    Tensor3<T>& grad_buffer(Var v);

    std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace axmag::nn
