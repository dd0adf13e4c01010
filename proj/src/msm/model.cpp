#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "axmag/datagen.hpp"
#include "axmag/msm.hpp"

namespace axmag {

using nn::Tensor3;

// ---- parameters ----

template <class T>
void Model<T>::add(const std::string& name, int c, int h, int w, double stddev, std::mt19937_64& rng) {
    Tensor3<T> t(c, h, w);
    if (stddev > 0.0) {
        std::normal_distribution<double> dist(0.0, stddev);
        for (T& v : t.v) v = static_cast<T>(dist(rng));
    }
    blocks_.push_back({name, std::move(t)});
}

template <class T>
Model<T>::Model(const ModelConfig& cfg) : config_(cfg) {
    if (cfg.in_channels < 1 || cfg.channels < 1 || cfg.decoder_channels < 1) throw std::invalid_argument("channel counts must be positive");
    if (cfg.encoder_blocks < 0 || cfg.texture_blocks < 0 || cfg.decoder_blocks < 0) throw std::invalid_argument("block counts must be >= 0");
    std::mt19937_64 rng(cfg.seed);
    const int c = cfg.channels, d = cfg.decoder_channels;
    // He init before ReLU, unit-gain init for linear outputs.
    auto conv = [&](const std::string& name, int cout, int cin, int taps, bool relu_after, bool bias = true) {
        const double fan_in = static_cast<double>(cin) * taps;
        add(name + ".w", cout, cin, taps, std::sqrt((relu_after ? 2.0 : 1.0) / fan_in), rng);
        if (bias) add(name + ".b", cout, 1, 1, 0.0, rng);
    };
    auto res = [&](const std::string& prefix, int ch, int taps) {
        conv(prefix + ".a", ch, ch, taps, true);
        conv(prefix + ".b", ch, ch, taps, false);
    };

    conv("enc.in", c, cfg.in_channels, 49, true);
    conv("enc.down", c, c, 9, true);
    for (int i = 0; i < cfg.encoder_blocks; ++i) res("enc.res" + std::to_string(i), c, 9);

    conv("tex.down", c, c, 9, true);
    for (int i = 0; i < cfg.texture_blocks; ++i) res("tex.res" + std::to_string(i), c, 9);

    conv("shape.c0", c, c, 3, true);
    conv("shape.c1", c, c, 3, true);
    res("shape.res", c, 3);

    conv("manip.g", c, c, 3, true, false);
    conv("manip.h", c, c, 3, false, false);

    conv("dec.fuse", d, 3 * c, 9, true);
    for (int i = 0; i < cfg.decoder_blocks; ++i) res("dec.res" + std::to_string(i), d, 9);
    conv("dec.out", cfg.in_channels, d, 9, false);
}

template <class T>
std::size_t Model<T>::index(const std::string& name) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        if (blocks_[i].name == name) return i;
    throw std::out_of_range("no parameter block named " + name);
}

template <class T>
std::size_t Model<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks_) n += b.value.size();
    return n;
}

template <class T>
template <class U>
Model<U> Model<T>::cast() const {
    Model<U> out(config_);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        auto& dst = out.blocks()[i].value.v;
        const auto& src = blocks_[i].value.v;
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] = static_cast<U>(src[j]);
    }
    return out;
}

template class Model<float>;
template class Model<double>;
template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template Model<float> Model<float>::cast<float>() const;

// ---- conversions ----

template <class T>
Tensor3<T> frame_tensor(const Frame& f) {
    Tensor3<T> t(f.channels(), f.height(), f.width());
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x)
            for (int c = 0; c < f.channels(); ++c) t.at(c, y, x) = static_cast<T>(f.at(y, x, c));
    return t;
}

template <class T>
Frame tensor_frame(const Tensor3<T>& t) {
    Frame f(t.h, t.w, t.c);
    for (int y = 0; y < t.h; ++y)
        for (int x = 0; x < t.w; ++x)
            for (int c = 0; c < t.c; ++c) f.at(y, x, c) = static_cast<float>(t.at(c, y, x));
    return f;
}

template Tensor3<float> frame_tensor<float>(const Frame&);
template Tensor3<double> frame_tensor<double>(const Frame&);
template Frame tensor_frame<float>(const Tensor3<float>&);
template Frame tensor_frame<double>(const Tensor3<double>&);

namespace {

template <class T>
Tensor3<T> half_res_channel(const Frame& map, int channel, double offset) {
    Tensor3<T> t(1, map.height() / 2, map.width() / 2);
    for (int y = 0; y < t.h; ++y)
        for (int x = 0; x < t.w; ++x) t.at(0, y, x) = static_cast<T>(map.at(2 * y, 2 * x, channel) + offset);
    return t;
}

}  // namespace

template <class T>
AxisFactors<T> factors_from_map(const Frame& map) {
    if (map.channels() != 2) throw ShapeError("magnification map needs 2 channels");
    AxisFactors<T> f;
    f.par_map = half_res_channel<T>(map, 0, -1.0);
    f.perp_map = half_res_channel<T>(map, 1, -1.0);
    return f;
}

template <class T>
AxisFactors<T> factors_from_spec(const MagnificationSpec& spec) {
    AxisFactors<T> f;
    f.par = static_cast<T>(spec.alpha_par);
    f.perp = static_cast<T>(spec.alpha_perp);
    if (spec.per_pixel_map) {
        f.par_map = half_res_channel<T>(*spec.per_pixel_map, 0, 0.0);
        f.perp_map = half_res_channel<T>(*spec.per_pixel_map, 1, 0.0);
    }
    return f;
}

template AxisFactors<float> factors_from_map<float>(const Frame&);
template AxisFactors<double> factors_from_map<double>(const Frame&);
template AxisFactors<float> factors_from_spec<float>(const MagnificationSpec&);
template AxisFactors<double> factors_from_spec<double>(const MagnificationSpec&);

// ---- network ----

template <class T>
Network<T>::Network(const Model<T>& model, bool with_grad) : model_(model) {
    for (const auto& b : model.blocks()) params_.push_back(with_grad ? tape_.leaf(b.value) : tape_.constant(b.value));
}

template <class T>
typename Network<T>::Var Network<T>::param(const std::string& name) const {
    return params_[model_.index(name)];
}

template <class T>
typename Network<T>::Var Network<T>::conv(Var x, const std::string& name, int kh, int kw, int stride, bool bias) {
    return tape_.conv2d(x, param(name + ".w"), bias ? param(name + ".b") : nn::Tape<T>::kNone, kh, kw, stride);
}

template <class T>
typename Network<T>::Var Network<T>::residual(Var x, const std::string& prefix, int kh, int kw) {
    const Var a = tape_.relu(conv(x, prefix + ".a", kh, kw, 1));
    return tape_.add(x, conv(a, prefix + ".b", kh, kw, 1));
}

template <class T>
typename Network<T>::Var Network<T>::input(const Frame& frame) {
    if (frame.height() % 4 != 0 || frame.width() % 4 != 0) throw ShapeError("frame dimensions must be divisible by 4");
    if (frame.channels() != model_.config().in_channels) throw ShapeError("frame channels do not match the model");
    return tape_.constant(frame_tensor<T>(frame));
}

template <class T>
typename Network<T>::Var Network<T>::encode(Var image) {
    Var x = tape_.relu(conv(image, "enc.in", 7, 7, 1));
    x = tape_.relu(conv(x, "enc.down", 3, 3, 2));
    for (int i = 0; i < model_.config().encoder_blocks; ++i) x = residual(x, "enc.res" + std::to_string(i), 3, 3);
    return x;
}

template <class T>
typename Network<T>::Var Network<T>::texture(Var features) {
    Var x = tape_.relu(conv(features, "tex.down", 3, 3, 2));
    for (int i = 0; i < model_.config().texture_blocks; ++i) x = residual(x, "tex.res" + std::to_string(i), 3, 3);
    return x;
}

template <class T>
std::pair<typename Network<T>::Var, typename Network<T>::Var> Network<T>::shape(Var features) {
    auto branch = [&](Var x) {
        x = tape_.relu(conv(x, "shape.c0", 1, 3, 1));
        x = tape_.relu(conv(x, "shape.c1", 1, 3, 1));
        return residual(x, "shape.res", 1, 3);
    };
    const Var sx = branch(features);
    const Var sy = tape_.transpose_hw(branch(tape_.transpose_hw(features)));
    return {sx, sy};
}

template <class T>
std::pair<typename Network<T>::Var, typename Network<T>::Var> Network<T>::project(std::pair<Var, Var> s, double angle_deg) {
    const Vec2 p = axis_vector(angle_deg);
    const T c = static_cast<T>(p[0]), sn = static_cast<T>(p[1]);
    return {tape_.lincomb(s.first, c, s.second, sn), tape_.lincomb(s.first, -sn, s.second, c)};
}

template <class T>
std::pair<typename Network<T>::Var, typename Network<T>::Var> Network<T>::inverse_project(std::pair<Var, Var> s,
                                                                                           double angle_deg) {
    const Vec2 p = axis_vector(angle_deg);
    const T c = static_cast<T>(p[0]), sn = static_cast<T>(p[1]);
    return {tape_.lincomb(s.first, c, s.second, -sn), tape_.lincomb(s.first, sn, s.second, c)};
}

template <class T>
typename Network<T>::Var Network<T>::motion_feature(Var s1, Var s2, bool transposed) {
    Var d = tape_.sub(s2, s1);
    if (transposed) d = tape_.transpose_hw(d);
    return tape_.relu(conv(d, "manip.g", 1, 3, 1, false));
}

template <class T>
typename Network<T>::Var Network<T>::apply_motion(Var s2, Var feature, T alpha, const std::optional<Tensor3<T>>& map,
                                                  bool transposed) {
    Var m;
    if (map) {
        if (!transposed) {
            m = tape_.mul_map(feature, *map);
        } else {
            Tensor3<T> mt(1, map->w, map->h);
            for (int y = 0; y < map->h; ++y)
                for (int x = 0; x < map->w; ++x) mt.at(0, x, y) = map->at(0, y, x);
            m = tape_.mul_map(feature, mt);
        }
    } else {
        m = tape_.scale(feature, alpha);
    }
    Var h = conv(m, "manip.h", 1, 3, 1, false);
    if (transposed) h = tape_.transpose_hw(h);
    return tape_.add(s2, h);
}

template <class T>
typename Network<T>::Var Network<T>::manipulate(Var s1, Var s2, T alpha, const std::optional<Tensor3<T>>& map, bool transposed) {
    return apply_motion(s2, motion_feature(s1, s2, transposed), alpha, map, transposed);
}

template <class T>
typename Network<T>::Var Network<T>::decode(Var texture, Var dx, Var dy) {
    Var x = tape_.concat(tape_.concat(tape_.upsample2(texture), dx), dy);
    x = tape_.relu(conv(x, "dec.fuse", 3, 3, 1));
    for (int i = 0; i < model_.config().decoder_blocks; ++i) x = residual(x, "dec.res" + std::to_string(i), 3, 3);
    return conv(tape_.upsample2(x), "dec.out", 3, 3, 1);
}

template <class T>
typename Network<T>::Outputs Network<T>::forward(const Frame& a, const Frame& b, double angle_deg, const AxisFactors<T>& f) {
    if (!a.same_shape(b)) throw ShapeError("frame pair shapes differ");
    const Var ea = encode(input(a));
    const Var eb = encode(input(b));
    Outputs o;
    o.texture_a = texture(ea);
    o.texture_b = texture(eb);
    std::tie(o.shape_xa, o.shape_ya) = shape(ea);
    std::tie(o.shape_xb, o.shape_yb) = shape(eb);
    const auto pa = project({o.shape_xa, o.shape_ya}, angle_deg);
    const auto pb = project({o.shape_xb, o.shape_yb}, angle_deg);
    const Var dpar = manipulate(pa.first, pb.first, f.par, f.par_map, false);
    const Var dperp = manipulate(pa.second, pb.second, f.perp, f.perp_map, true);
    const auto [dx, dy] = inverse_project({dpar, dperp}, angle_deg);
    o.prediction = decode(o.texture_b, dx, dy);
    return o;
}

template class Network<float>;
template class Network<double>;

Frame msm_forward(const Model<float>& model, const Frame& a, const Frame& b, const MagnificationSpec& spec) {
    spec.validate(a.height(), a.width());
    Network<float> net(model, false);
    const auto o = net.forward(a, b, spec.angle_deg, factors_from_spec<float>(spec));
    return tensor_frame(net.tape().value(o.prediction));
}

// ---- loss ----

ColorPerturbation ColorPerturbation::sample(std::mt19937_64& rng, int channels) {
    ColorPerturbation p;
    std::uniform_real_distribution<double> gain(0.8, 1.2), offset(-0.05, 0.05);
    for (int c = 0; c < channels; ++c) {
        p.gain.push_back(gain(rng));
        p.offset.push_back(offset(rng));
    }
    return p;
}

ColorPerturbation ColorPerturbation::identity(int channels) {
    return {std::vector<double>(channels, 1.0), std::vector<double>(channels, 0.0)};
}

Frame ColorPerturbation::apply(const Frame& f) const {
    if (static_cast<int>(gain.size()) != f.channels()) throw ShapeError("perturbation channel count");
    Frame out = f;
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x)
            for (int c = 0; c < f.channels(); ++c)
                out.at(y, x, c) = static_cast<float>(std::clamp(gain[c] * f.at(y, x, c) + offset[c], 0.0, 1.0));
    return out;
}

template <class T>
std::pair<typename Network<T>::Var, LossTerms> build_loss(Network<T>& net, const LossInput& in, const ColorPerturbation& perturb) {
    auto& tape = net.tape();
    const auto o = net.forward(in.frame_a, in.frame_b, in.angle_deg, factors_from_map<T>(in.factor_map));
    const auto target = net.input(in.target);
    const auto [sxp, syp] = net.shape(net.encode(net.input(perturb.apply(in.frame_b))));

    const auto recon = tape.l1(o.prediction, target);
    const auto tex = tape.l1(o.texture_a, o.texture_b);
    const auto shx = tape.l1(o.shape_xb, sxp);
    const auto shy = tape.l1(o.shape_yb, syp);
    const ModelConfig& cfg = net.model().config();
    const T beta = static_cast<T>(cfg.beta);
    const T beta_y = cfg.symmetric_shape_loss ? beta : T(1);
    const auto total = tape.weighted_sum({recon, tex, shx, shy}, {T(1), beta, beta, beta_y});

    LossTerms terms;
    terms.total = static_cast<double>(tape.value(total).v[0]);
    terms.recon = static_cast<double>(tape.value(recon).v[0]);
    terms.texture = static_cast<double>(tape.value(tex).v[0]);
    terms.shape_x = static_cast<double>(tape.value(shx).v[0]);
    terms.shape_y = static_cast<double>(tape.value(shy).v[0]);
    return {total, terms};
}

template std::pair<Network<float>::Var, LossTerms> build_loss<float>(Network<float>&, const LossInput&, const ColorPerturbation&);
template std::pair<Network<double>::Var, LossTerms> build_loss<double>(Network<double>&, const LossInput&, const ColorPerturbation&);

}  // namespace axmag
