#include "axmag/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "axmag/image_io.hpp"
#include "axmag/imaging.hpp"
#include "axmag/parallel.hpp"

namespace axmag {
namespace {

constexpr double kPi = std::numbers::pi;

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Frame mask_to_frame(const Mask& m) { return Frame(m.height, m.width, 1, m.values); }

Mask frame_to_mask(const Frame& f) {
    Mask m;
    m.height = f.height();
    m.width = f.width();
    m.values.assign(f.data().begin(), f.data().end());
    return m;
}

// Bilinear resize, sample centres aligned.
Frame resize(const Frame& f, int h, int w) {
    Frame out(h, w, f.channels());
    const double sy = static_cast<double>(f.height()) / h;
    const double sx = static_cast<double>(f.width()) / w;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < f.channels(); ++c)
                out.at(y, x, c) = sample_bilinear(f, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5, c);
    return out;
}

Frame match_channels(const Frame& f, int channels) {
    if (f.channels() == channels) return f;
    const Frame gray = f.to_gray();
    Frame out(f.height(), f.width(), channels);
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x)
            for (int c = 0; c < channels; ++c) out.at(y, x, c) = gray.at(y, x);
    return out;
}

Layer procedural_background(std::mt19937_64& rng, const DatasetConfig& cfg) {
    const Frame tex = fractal_texture(cfg.size, cfg.size, cfg.channels, uniform(rng, 1.0, 2.0), rng);
    const Frame grad = gradient_texture(cfg.size, cfg.size, cfg.channels, rng);
    const float w = static_cast<float>(uniform(rng, 0.0, 0.5));
    Frame img(cfg.size, cfg.size, cfg.channels);
    for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = (1.0f - w) * tex.data()[i] + w * grad.data()[i];
    return {img, Mask::filled(cfg.size, cfg.size, 1.0f)};
}

Layer procedural_foreground(std::mt19937_64& rng, const DatasetConfig& cfg) {
    const double n = cfg.size;
    Frame img = fractal_texture(cfg.size, cfg.size, cfg.channels, uniform(rng, 0.8, 2.0), rng);
    const double cx = uniform(rng, 0.0, n), cy = uniform(rng, 0.0, n);
    const double radius = uniform(rng, 0.06, 0.25) * n;
    Mask mask = std::bernoulli_distribution(0.5)(rng) ? random_blob(cfg.size, cfg.size, cx, cy, radius, rng)
                                                       : random_polygon(cfg.size, cfg.size, cx, cy, radius, rng);
    return {std::move(img), std::move(mask)};
}

struct SourcePool {
    std::vector<std::filesystem::path> backgrounds;
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> foregrounds;  // image, mask
};

SourcePool scan_pool(const std::filesystem::path& dir) {
    SourcePool pool;
    if (std::filesystem::is_directory(dir / "backgrounds")) pool.backgrounds = list_frames(dir / "backgrounds");
    if (std::filesystem::is_directory(dir / "foregrounds")) {
        for (const auto& p : list_frames(dir / "foregrounds")) {
            const auto m = dir / "masks" / p.filename();
            if (std::filesystem::exists(m)) pool.foregrounds.emplace_back(p, m);
        }
    }
    if (pool.backgrounds.empty() || pool.foregrounds.empty()) {
        throw IoError("source directory needs backgrounds/*.png and foregrounds/*.png with masks/*.png: " + dir.string());
    }
    return pool;
}

Layer directory_background(std::mt19937_64& rng, const DatasetConfig& cfg, const SourcePool& pool) {
    const auto& p = pool.backgrounds[uniform_int(rng, 0, static_cast<int>(pool.backgrounds.size()) - 1)];
    return {resize(match_channels(load_frame(p), cfg.channels), cfg.size, cfg.size), Mask::filled(cfg.size, cfg.size, 1.0f)};
}

Layer directory_foreground(std::mt19937_64& rng, const DatasetConfig& cfg, const SourcePool& pool) {
    const auto& [ip, mp] = pool.foregrounds[uniform_int(rng, 0, static_cast<int>(pool.foregrounds.size()) - 1)];
    const Frame src = match_channels(load_frame(ip), cfg.channels);
    const Frame msrc = load_frame(mp).to_gray();
    if (msrc.height() != src.height() || msrc.width() != src.width()) throw ShapeError("mask size differs from image: " + mp.string());
    const double longest = std::max(src.height(), src.width());
    const double scale = uniform(rng, 0.2, 0.6) * cfg.size / longest;
    const int h = std::max(1, static_cast<int>(std::lround(src.height() * scale)));
    const int w = std::max(1, static_cast<int>(std::lround(src.width() * scale)));
    const Frame img = resize(src, h, w);
    const Frame msk = resize(msrc, h, w);
    const int oy = uniform_int(rng, -h / 2, cfg.size - h / 2);
    const int ox = uniform_int(rng, -w / 2, cfg.size - w / 2);

    // The layer image is the pasted object over a mean-colour fill.
    Layer layer{Frame(cfg.size, cfg.size, cfg.channels), Mask::filled(cfg.size, cfg.size, 0.0f)};
    for (int c = 0; c < cfg.channels; ++c) {
        double mean = 0.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) mean += img.at(y, x, c);
        mean /= static_cast<double>(h) * w;
        for (int y = 0; y < cfg.size; ++y)
            for (int x = 0; x < cfg.size; ++x) layer.image.at(y, x, c) = static_cast<float>(mean);
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int ty = oy + y, tx = ox + x;
            if (ty < 0 || tx < 0 || ty >= cfg.size || tx >= cfg.size) continue;
            for (int c = 0; c < cfg.channels; ++c) layer.image.at(ty, tx, c) = img.at(y, x, c);
            layer.mask.at(ty, tx) = msk.at(y, x) > 0.5f ? 1.0f : 0.0f;
        }
    }
    return layer;
}

Frame magnification_map(const LayerStack& stack, const MotionAssignment& motion) {
    const auto& base = stack.layers[0].mask;
    Frame map(base.height, base.width, 2);
    for (int y = 0; y < base.height; ++y) {
        for (int x = 0; x < base.width; ++x) {
            std::size_t top = 0;
            for (std::size_t k = 1; k < stack.layers.size(); ++k)
                if (stack.layers[k].mask.at(y, x) > 0.5f) top = k;
            map.at(y, x, 0) = static_cast<float>(motion.factors[top][0]);
            map.at(y, x, 1) = static_cast<float>(motion.factors[top][1]);
        }
    }
    return map;
}

std::vector<double> log_levels(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1));
    v.front() = lo;
    v.back() = hi;
    return v;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void LayerStack::validate() const {
    if (layers.empty()) throw ShapeError("layer stack is empty");
    const Frame& ref = layers[0].image;
    for (const auto& l : layers) {
        if (!l.image.same_shape(ref) || l.mask.height != ref.height() || l.mask.width != ref.width() ||
            l.mask.values.size() != static_cast<std::size_t>(ref.height()) * ref.width()) {
            throw ShapeError("layer dimensions differ");
        }
    }
    for (float v : layers[0].mask.values)
        if (v != 1.0f) throw ShapeError("background mask must be all ones");
}

void DatasetConfig::validate() const {
    if (size < 8) throw std::invalid_argument("size must be at least 8");
    if (channels != 1 && channels != 3) throw std::invalid_argument("channels must be 1 or 3");
    if (k_min < 1 || k_max < k_min) throw std::invalid_argument("layer counts must satisfy 1 <= k_min <= k_max");
    if (!(alpha_min > 0.0 && alpha_min <= alpha_max)) throw std::invalid_argument("alpha range must satisfy 0 < min <= max");
    if (!(angle_min >= 0.0 && angle_min <= angle_max && angle_max < 180.0)) throw std::invalid_argument("angle range must lie in [0, 180)");
    if (!(max_translation > 0.0 && max_amplified > 0.0)) throw std::invalid_argument("motion bounds must be positive");
    if (integer_motion && std::ceil(alpha_min) > std::floor(alpha_max)) throw std::invalid_argument("integer motion needs an integer in the alpha range");
}

LayerStack sample_scene(std::mt19937_64& rng, const DatasetConfig& config) {
    config.validate();
    const int k = uniform_int(rng, config.k_min, config.k_max);
    LayerStack stack;
    stack.layers.reserve(k);
    if (config.source == SourceMode::Directory) {
        const SourcePool pool = scan_pool(config.source_dir);
        stack.layers.push_back(directory_background(rng, config, pool));
        for (int i = 1; i < k; ++i) stack.layers.push_back(directory_foreground(rng, config, pool));
    } else {
        stack.layers.push_back(procedural_background(rng, config));
        for (int i = 1; i < k; ++i) stack.layers.push_back(procedural_foreground(rng, config));
    }
    return stack;
}

Frame compose(const LayerStack& stack) {
    stack.validate();
    Frame out = stack.layers[0].image;
    const int ch = out.channels();
    for (std::size_t k = 1; k < stack.layers.size(); ++k) {
        const auto& img = stack.layers[k].image.data();
        const auto& mask = stack.layers[k].mask.values;
        auto o = out.data();
        for (std::size_t p = 0; p < mask.size(); ++p) {
            const float m = mask[p];
            if (m == 0.0f) continue;
            for (int c = 0; c < ch; ++c) o[p * ch + c] = m * img[p * ch + c] + (1.0f - m) * o[p * ch + c];
        }
    }
    return out;
}

Vec2 axis_vector(double angle_deg) {
    const double r = std::remainder(angle_deg, 360.0);
    if (r == 0.0) return {1.0, 0.0};
    if (r == 90.0) return {0.0, 1.0};
    if (r == 180.0 || r == -180.0) return {-1.0, 0.0};
    if (r == -90.0) return {0.0, -1.0};
    const double a = angle_deg * kPi / 180.0;
    return {std::cos(a), std::sin(a)};
}

Vec2 magnified_translation(const Vec2& d, const Vec2& alpha, double angle_deg) {
    const Vec2 p = axis_vector(angle_deg);
    const Vec2 q = {-p[1], p[0]};
    const double dp = d[0] * p[0] + d[1] * p[1];
    const double dq = d[0] * q[0] + d[1] * q[1];
    const double sp = (alpha[0] - 1.0) * dp;
    const double sq = (alpha[1] - 1.0) * dq;
    return {d[0] + sp * p[0] + sq * q[0], d[1] + sp * p[1] + sq * q[1]};
}

LayerStack translate_stack(const LayerStack& stack, const std::vector<Vec2>& translations) {
    if (translations.size() != stack.layers.size()) throw ShapeError("one translation per layer required");
    LayerStack out;
    out.layers.reserve(stack.layers.size());
    for (std::size_t k = 0; k < stack.layers.size(); ++k) {
        const auto [dx, dy] = translations[k];
        Layer l;
        l.image = translate_bilinear(stack.layers[k].image, dx, dy);
        // keep the background mask exactly one
        l.mask = k == 0 ? stack.layers[k].mask : frame_to_mask(translate_bilinear(mask_to_frame(stack.layers[k].mask), dx, dy));
        out.layers.push_back(std::move(l));
    }
    return out;
}

TrainSample render_pair(const LayerStack& stack, const MotionAssignment& motion, std::uint64_t seed_a, std::uint64_t seed_b) {
    stack.validate();
    const std::size_t k = stack.layers.size();
    if (motion.translations.size() != k || motion.factors.size() != k) throw ShapeError("motion does not match layer count");
    std::vector<Vec2> magnified(k);
    for (std::size_t i = 0; i < k; ++i)
        magnified[i] = magnified_translation(motion.translations[i], motion.factors[i], motion.angle_deg);

    TrainSample s;
    s.motion = motion;
    s.dither_seed_a = seed_a;
    s.dither_seed_b = seed_b;
    s.frame_a = quantize_with_dither(compose(stack), seed_a);
    s.frame_b = quantize_with_dither(compose(translate_stack(stack, motion.translations)), seed_b);
    s.amplified = quantize_with_dither(compose(translate_stack(stack, magnified)), seed_b);
    s.mag_map = magnification_map(stack, motion);
    return s;
}

TrainSample make_pair(const LayerStack& stack, std::mt19937_64& rng, const DatasetConfig& config) {
    config.validate();
    const std::size_t k = stack.layers.size();
    MotionAssignment m;
    m.angle_deg = config.integer_motion ? 90.0 * uniform_int(rng, 0, 1) : uniform(rng, config.angle_min, config.angle_max);
    m.translations.resize(k);
    m.factors.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        Vec2 a;
        if (config.integer_motion) {
            const int lo = static_cast<int>(std::ceil(config.alpha_min)), hi = static_cast<int>(std::floor(config.alpha_max));
            a = {static_cast<double>(uniform_int(rng, lo, hi)), static_cast<double>(uniform_int(rng, lo, hi))};
        } else {
            a = {uniform(rng, config.alpha_min, config.alpha_max), uniform(rng, config.alpha_min, config.alpha_max)};
        }
        const double u = std::min(config.max_translation, config.max_amplified / std::max(a[0], a[1]));
        Vec2 d;
        if (config.integer_motion) {
            const int iu = static_cast<int>(std::floor(u));
            d = {static_cast<double>(uniform_int(rng, -iu, iu)), static_cast<double>(uniform_int(rng, -iu, iu))};
        } else {
            d = {uniform(rng, -u, u), uniform(rng, -u, u)};
        }
        m.factors[i] = a;
        m.translations[i] = d;
    }
    const std::uint64_t seed_a = rng();
    const std::uint64_t seed_b = config.shared_dither_seed ? seed_a : rng();
    return render_pair(stack, m, seed_a, seed_b);
}

std::mt19937_64 sample_rng(std::uint64_t seed, std::size_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
    return std::mt19937_64(seq);
}

std::vector<double> subpixel_levels() { return log_levels(0.04, 1.0, 15); }
std::vector<double> noise_levels() { return log_levels(0.01, 100.0, 21); }

std::size_t dataset_size(const DatasetConfig& config) {
    switch (config.eval_mode) {
        case EvalMode::Subpixel:
        case EvalMode::SubpixelGeneric: return config.count * subpixel_levels().size();
        case EvalMode::Noise: return config.count * noise_levels().size();
        case EvalMode::None: break;
    }
    return config.count;
}

TrainSample generate_sample(const DatasetConfig& config, std::size_t index) {
    std::mt19937_64 rng = sample_rng(config.seed, index);
    const LayerStack stack = sample_scene(rng, config);
    if (config.eval_mode == EvalMode::None) return make_pair(stack, rng, config);

    // Every layer moves by +-m along the axis and +-m across it; factors map
    // that to the requested amplified motion (half of it across the axis).
    const bool noise = config.eval_mode == EvalMode::Noise;
    const std::size_t level = config.count == 0 ? 0 : index / config.count;
    const double m = noise ? kNoiseEvalMotion : subpixel_levels().at(level);
    MotionAssignment motion;
    motion.angle_deg = config.eval_angle >= 0.0 ? config.eval_angle : uniform(rng, config.angle_min, config.angle_max);
    const double along = config.eval_amplified / m;
    const Vec2 alpha = {along, config.eval_mode == EvalMode::SubpixelGeneric ? along : along / 2.0};
    const Vec2 p = axis_vector(motion.angle_deg);
    const Vec2 q = {-p[1], p[0]};
    for (std::size_t k = 0; k < stack.layers.size(); ++k) {
        const double sp = std::bernoulli_distribution(0.5)(rng) ? m : -m;
        const double sq = std::bernoulli_distribution(0.5)(rng) ? m : -m;
        motion.translations.push_back({sp * p[0] + sq * q[0], sp * p[1] + sq * q[1]});
        motion.factors.push_back(alpha);
    }
    const std::uint64_t seed_a = rng();
    const std::uint64_t seed_b = config.shared_dither_seed ? seed_a : rng();
    TrainSample s = render_pair(stack, motion, seed_a, seed_b);
    s.level = static_cast<int>(level) + 1;
    s.motion_magnitude = m;
    if (noise) {
        s.noise_factor = noise_levels().at(level);
        // Noisy frames go back on the 8-bit grid so they survive a PNG round trip.
        s.frame_a = add_noise(s.frame_a, {s.noise_factor, rng()});
        s.frame_b = add_noise(s.frame_b, {s.noise_factor, rng()});
        for (Frame* f : {&s.frame_a, &s.frame_b})
            for (float& v : f->data()) v = quantize8(v);
    }
    return s;
}

void write_sample(const std::filesystem::path& dir, const TrainSample& s) {
    std::filesystem::create_directories(dir);
    save_png(dir / "frameA.png", s.frame_a);
    save_png(dir / "frameB.png", s.frame_b);
    save_png(dir / "amplified.png", s.amplified);
    write_axtf(dir / "mag_map.axtf", frame_to_tensor(s.mag_map));
    std::ofstream meta(dir / "meta.txt");
    if (!meta) throw IoError("cannot write " + (dir / "meta.txt").string());
    meta << "angle_deg=" << fmt(s.motion.angle_deg) << '\n';
    meta << "layers=" << s.motion.translations.size() << '\n';
    for (std::size_t k = 0; k < s.motion.translations.size(); ++k) {
        meta << "d_" << k + 1 << '=' << fmt(s.motion.translations[k][0]) << ',' << fmt(s.motion.translations[k][1]) << '\n';
        meta << "alpha_" << k + 1 << '=' << fmt(s.motion.factors[k][0]) << ',' << fmt(s.motion.factors[k][1]) << '\n';
    }
    meta << "dither_seed_a=" << s.dither_seed_a << '\n';
    meta << "dither_seed_b=" << s.dither_seed_b << '\n';
    if (s.level > 0) {
        meta << "level=" << s.level << '\n';
        meta << "motion=" << fmt(s.motion_magnitude) << '\n';
        meta << "noise_factor=" << fmt(s.noise_factor) << '\n';
    }
    if (!meta) throw IoError("failed writing " + (dir / "meta.txt").string());
}

TrainSample read_sample(const std::filesystem::path& dir) {
    TrainSample s;
    s.frame_a = load_frame(dir / "frameA.png");
    s.frame_b = load_frame(dir / "frameB.png");
    s.amplified = load_frame(dir / "amplified.png");
    s.mag_map = tensor_to_frame(read_axtf(dir / "mag_map.axtf"));

    std::ifstream meta(dir / "meta.txt");
    if (!meta) throw IoError("missing " + (dir / "meta.txt").string());
    std::map<std::string, std::string> kv;
    for (std::string line; std::getline(meta, line);) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const std::string& key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw IoError("meta.txt lacks " + key + " in " + dir.string());
        return it->second;
    };
    auto pair = [&](const std::string& key) {
        const std::string& v = get(key);
        const auto comma = v.find(',');
        if (comma == std::string::npos) throw IoError("malformed " + key + " in " + dir.string());
        return Vec2{std::stod(v.substr(0, comma)), std::stod(v.substr(comma + 1))};
    };
    try {
        s.motion.angle_deg = std::stod(get("angle_deg"));
        const int layers = std::stoi(get("layers"));
        for (int k = 1; k <= layers; ++k) {
            s.motion.translations.push_back(pair("d_" + std::to_string(k)));
            s.motion.factors.push_back(pair("alpha_" + std::to_string(k)));
        }
        s.dither_seed_a = std::stoull(get("dither_seed_a"));
        s.dither_seed_b = std::stoull(get("dither_seed_b"));
        if (kv.count("level")) {
            s.level = std::stoi(kv["level"]);
            s.motion_magnitude = std::stod(get("motion"));
            s.noise_factor = std::stod(get("noise_factor"));
        }
    } catch (const std::logic_error&) {
        throw IoError("malformed meta.txt in " + dir.string());
    }
    return s;
}

void write_dataset(const std::filesystem::path& root, const DatasetConfig& config) {
    config.validate();
    std::filesystem::create_directories(root);
    const std::size_t n = dataset_size(config);
    parallel_for(n, [&](std::size_t i) {
        char name[32];
        std::snprintf(name, sizeof name, "%06zu", i);
        write_sample(root / name, generate_sample(config, i));
    });
}

std::vector<std::filesystem::path> list_samples(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root)) throw IoError("not a dataset directory: " + root.string());
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(root))
        if (e.is_directory() && std::filesystem::exists(e.path() / "meta.txt")) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::string eval_mode_name(EvalMode mode) {
    switch (mode) {
        case EvalMode::None: return "train";
        case EvalMode::Subpixel: return "subpixel";
        case EvalMode::SubpixelGeneric: return "subpixel-generic";
        case EvalMode::Noise: return "noise";
    }
    return "train";
}

EvalMode parse_eval_mode(const std::string& name) {
    if (name == "train" || name == "none") return EvalMode::None;
    if (name == "subpixel") return EvalMode::Subpixel;
    if (name == "subpixel-generic") return EvalMode::SubpixelGeneric;
    if (name == "noise") return EvalMode::Noise;
    throw std::invalid_argument("unknown dataset mode: " + name);
}

}  // namespace axmag
