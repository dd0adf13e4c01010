#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "axmag/datagen.hpp"
#include "axmag/image_io.hpp"
#include "axmag/msm.hpp"
#include "axmag/parallel.hpp"

namespace axmag {
namespace fs = std::filesystem;
using nn::Tensor3;

// ---- serialization ----

namespace {

fs::path stem_of(const fs::path& manifest) { return manifest.parent_path() / manifest.stem(); }

}  // namespace

void save_model(const fs::path& manifest, const Model<float>& model) {
    if (manifest.has_parent_path()) fs::create_directories(manifest.parent_path());
    const std::string prefix = manifest.stem().string();
    std::ofstream out(manifest);
    if (!out) throw IoError("cannot write " + manifest.string());
    const ModelConfig& c = model.config();
    out << "axmag-msm 1\n";
    out << "config in_channels " << c.in_channels << '\n';
    out << "config channels " << c.channels << '\n';
    out << "config decoder_channels " << c.decoder_channels << '\n';
    out << "config encoder_blocks " << c.encoder_blocks << '\n';
    out << "config texture_blocks " << c.texture_blocks << '\n';
    out << "config decoder_blocks " << c.decoder_blocks << '\n';
    out << "config beta " << c.beta << '\n';
    out << "config symmetric_shape_loss " << (c.symmetric_shape_loss ? 1 : 0) << '\n';
    out << "config seed " << c.seed << '\n';
    for (const auto& b : model.blocks()) {
        const std::string file = prefix + "." + b.name + ".axtf";
        out << "block " << b.name << ' ' << b.value.c << ' ' << b.value.h << ' ' << b.value.w << ' ' << file << '\n';
        Tensor t;
        t.dims = {static_cast<std::uint32_t>(b.value.c), static_cast<std::uint32_t>(b.value.h), static_cast<std::uint32_t>(b.value.w)};
        t.values = b.value.v;
        write_axtf(manifest.parent_path() / file, t);
    }
    if (!out) throw IoError("failed writing " + manifest.string());
}

Model<float> load_model(const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot open model manifest " + manifest.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("axmag-msm", 0) != 0) throw IoError("not a model manifest: " + manifest.string());
    ModelConfig cfg;
    struct Entry {
        std::string name, file;
        int c, h, w;
    };
    std::vector<Entry> entries;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string kind;
        ss >> kind;
        if (kind == "config") {
            std::string key;
            ss >> key;
            if (key == "in_channels") ss >> cfg.in_channels;
            else if (key == "channels") ss >> cfg.channels;
            else if (key == "decoder_channels") ss >> cfg.decoder_channels;
            else if (key == "encoder_blocks") ss >> cfg.encoder_blocks;
            else if (key == "texture_blocks") ss >> cfg.texture_blocks;
            else if (key == "decoder_blocks") ss >> cfg.decoder_blocks;
            else if (key == "beta") ss >> cfg.beta;
            else if (key == "symmetric_shape_loss") { int v = 0; ss >> v; cfg.symmetric_shape_loss = v != 0; }
            else if (key == "seed") ss >> cfg.seed;
        } else if (kind == "block") {
            Entry e;
            ss >> e.name >> e.c >> e.h >> e.w >> e.file;
            entries.push_back(e);
        }
        if (ss.fail()) throw IoError("malformed manifest line: " + line);
    }
    Model<float> model(cfg);
    if (entries.size() != model.blocks().size()) throw IoError("manifest block count does not match its config");
    for (const auto& e : entries) {
        auto& b = model.blocks()[model.index(e.name)];
        if (b.value.c != e.c || b.value.h != e.h || b.value.w != e.w) throw IoError("block shape mismatch for " + e.name);
        const Tensor t = read_axtf(manifest.parent_path() / e.file);
        if (t.values.size() != b.value.size()) throw IoError("block file size mismatch for " + e.name);
        b.value.v = t.values;
    }
    return model;
}

// ---- training ----

LossInput load_loss_input(const fs::path& sample_dir) {
    TrainSample s = read_sample(sample_dir);
    return {std::move(s.frame_a), std::move(s.frame_b), std::move(s.amplified), s.motion.angle_deg, std::move(s.mag_map)};
}

namespace {

using Loader = std::function<LossInput(std::size_t)>;

std::mt19937_64 step_rng(std::uint64_t seed, std::size_t step, std::size_t slot) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(step),
                      static_cast<std::uint32_t>(slot), 0x9e3779b9u};
    return std::mt19937_64(seq);
}

TrainResult train_impl(std::size_t count, const Loader& load, const ModelConfig& mc, const TrainConfig& tc, const fs::path& out) {
    if (count == 0) throw std::invalid_argument("training set is empty");
    if (tc.epochs < 1 || tc.batch < 1) throw std::invalid_argument("epochs and batch must be positive");
    if (!(tc.lr >= 0.0) || !std::isfinite(tc.lr)) throw std::invalid_argument("learning rate must be finite and >= 0");

    TrainResult result{Model<float>(mc), {}};
    Model<float>& model = result.model;
    const std::size_t nblocks = model.blocks().size();
    std::vector<std::vector<double>> m1(nblocks), m2(nblocks);
    for (std::size_t b = 0; b < nblocks; ++b) {
        m1[b].assign(model.blocks()[b].value.size(), 0.0);
        m2[b].assign(model.blocks()[b].value.size(), 0.0);
    }
    constexpr double kB1 = 0.9, kB2 = 0.999, kEps = 1e-8;

    std::ofstream log;
    if (!out.empty()) {
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        const fs::path log_path = stem_of(out).string() + ".log.csv";
        log.open(log_path);
        if (!log) throw IoError("cannot write " + log_path.string());
        log << "step,loss,l_recon,l_texture,l_shape_x,l_shape_y\n";
        log.precision(9);
    }

    std::mt19937_64 shuffle_rng(tc.seed);
    std::vector<std::size_t> order(count);
    std::size_t step = 0;
    bool done = false;
    for (int epoch = 1; epoch <= tc.epochs && !done; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < count; start += static_cast<std::size_t>(tc.batch)) {
            const std::size_t bsz = std::min<std::size_t>(tc.batch, count - start);
            std::vector<std::vector<std::vector<float>>> grads(bsz);
            std::vector<LossTerms> terms(bsz);
            parallel_for(bsz, [&](std::size_t j) {
                const LossInput in = load(order[start + j]);
                auto rng = step_rng(tc.seed, step, j);
                const auto perturb = tc.perturb ? ColorPerturbation::sample(rng, in.frame_b.channels())
                                                : ColorPerturbation::identity(in.frame_b.channels());
                Network<float> net(model, true);
                const auto [loss, t] = build_loss(net, in, perturb);
                terms[j] = t;
                net.tape().backward(loss);
                grads[j].resize(nblocks);
                for (std::size_t b = 0; b < nblocks; ++b) {
                    const auto& g = net.tape().grad(net.param_at(b));
                    grads[j][b] = g.size() ? g.v : std::vector<float>(model.blocks()[b].value.size(), 0.0f);
                }
            });

            LossTerms mean;
            for (const auto& t : terms) {
                mean.total += t.total / bsz;
                mean.recon += t.recon / bsz;
                mean.texture += t.texture / bsz;
                mean.shape_x += t.shape_x / bsz;
                mean.shape_y += t.shape_y / bsz;
            }
            ++step;
            if (!std::isfinite(mean.total)) {
                std::ostringstream msg;
                msg << "non-finite loss at step " << step << " (epoch " << epoch << "): recon " << mean.recon << ", texture "
                    << mean.texture << ", shape_x " << mean.shape_x << ", shape_y " << mean.shape_y;
                throw std::runtime_error(msg.str());
            }

            // Batch-mean gradient, reduced in sample order so the result does
            // not depend on the thread count.
            const double c1 = 1.0 - std::pow(kB1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(kB2, static_cast<double>(step));
            for (std::size_t b = 0; b < nblocks; ++b) {
                auto& p = model.blocks()[b].value.v;
                for (std::size_t i = 0; i < p.size(); ++i) {
                    double g = 0.0;
                    for (std::size_t j = 0; j < bsz; ++j) g += grads[j][b][i];
                    g /= static_cast<double>(bsz);
                    m1[b][i] = kB1 * m1[b][i] + (1.0 - kB1) * g;
                    m2[b][i] = kB2 * m2[b][i] + (1.0 - kB2) * g * g;
                    const double upd = tc.lr * (m1[b][i] / c1) / (std::sqrt(m2[b][i] / c2) + kEps);
                    p[i] = static_cast<float>(p[i] - upd);
                }
            }

            result.log.push_back(mean);
            if (log.is_open()) {
                log << step << ',' << mean.total << ',' << mean.recon << ',' << mean.texture << ',' << mean.shape_x << ','
                    << mean.shape_y << '\n';
                log.flush();
            }
            if (tc.max_steps && step >= tc.max_steps) {
                done = true;
                break;
            }
        }
        if (!out.empty()) save_model(stem_of(out).string() + ".epoch" + std::to_string(epoch) + ".txt", model);
    }
    if (!out.empty()) save_model(out, model);
    return result;
}

}  // namespace

TrainResult train_msm(const fs::path& data, const fs::path& out, const ModelConfig& model_config, const TrainConfig& config) {
    const auto samples = list_samples(data);
    return train_impl(samples.size(), [&](std::size_t i) { return load_loss_input(samples[i]); }, model_config, config, out);
}

TrainResult train_msm(const std::vector<LossInput>& samples, const ModelConfig& model_config, const TrainConfig& config,
                      const fs::path& out) {
    return train_impl(samples.size(), [&](std::size_t i) { return samples[i]; }, model_config, config, out);
}

// ---- video ----

namespace {

struct FrameFeatures {
    Tensor3<float> texture, par, perp;
};

FrameFeatures frame_features(const Model<float>& model, const Frame& frame, double angle_deg) {
    Network<float> net(model, false);
    const auto e = net.encode(net.input(frame));
    const auto t = net.texture(e);
    const auto p = net.project(net.shape(e), angle_deg);
    auto& tape = net.tape();
    return {tape.value(t), tape.value(p.first), tape.value(p.second)};
}

Tensor3<float> motion_feature(const Model<float>& model, const Tensor3<float>& s1, const Tensor3<float>& s2, bool transposed) {
    Network<float> net(model, false);
    auto& tape = net.tape();
    return tape.value(net.motion_feature(tape.constant(s1), tape.constant(s2), transposed));
}

Frame finish(const Model<float>& model, const FrameFeatures& f, const Tensor3<float>& g_par, const Tensor3<float>& g_perp,
             const AxisFactors<float>& factors, double angle_deg) {
    Network<float> net(model, false);
    auto& tape = net.tape();
    const auto dpar = net.apply_motion(tape.constant(f.par), tape.constant(g_par), factors.par, factors.par_map, false);
    const auto dperp = net.apply_motion(tape.constant(f.perp), tape.constant(g_perp), factors.perp, factors.perp_map, true);
    const auto [dx, dy] = net.inverse_project({dpar, dperp}, angle_deg);
    return tensor_frame(tape.value(net.decode(tape.constant(f.texture), dx, dy)));
}

void add_into(Tensor3<float>& acc, const Tensor3<float>& v) {
    for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += v.v[i];
}

}  // namespace

std::vector<Frame> magnify_video_msm(const std::vector<Frame>& frames, const MagnificationSpec& spec,
                                     const std::optional<TemporalFilterSpec>& tf, const Model<float>& model) {
    if (frames.size() < 2) throw std::invalid_argument("need at least 2 frames");
    for (const auto& f : frames)
        if (!f.same_shape(frames[0])) throw ShapeError("frames in a sequence must share one shape");
    spec.validate(frames[0].height(), frames[0].width());
    if (tf) tf->validate();
    const double angle = spec.angle_deg;
    const auto factors = factors_from_spec<float>(spec);
    const std::size_t steps = frames.size();

    const FrameFeatures first = frame_features(model, frames[0], angle);
    const Tensor3<float> zero_par(first.par.c, first.par.h, first.par.w);
    const Tensor3<float> zero_perp(first.perp.c, first.perp.w, first.perp.h);  // transposed layout

    std::vector<Frame> out(steps);
    if (!tf) {
        if (spec.mode == ReferenceMode::Static) {
            out[0] = finish(model, first, zero_par, zero_perp, factors, angle);
            parallel_for(steps - 1, [&](std::size_t i) {
                const std::size_t t = i + 1;
                const FrameFeatures f = frame_features(model, frames[t], angle);
                out[t] = finish(model, f, motion_feature(model, first.par, f.par, false),
                                motion_feature(model, first.perp, f.perp, true), factors, angle);
            });
            return out;
        }
        Tensor3<float> acc_par = zero_par, acc_perp = zero_perp;
        FrameFeatures prev = first;
        out[0] = finish(model, first, acc_par, acc_perp, factors, angle);
        for (std::size_t t = 1; t < steps; ++t) {
            FrameFeatures f = frame_features(model, frames[t], angle);
            add_into(acc_par, motion_feature(model, prev.par, f.par, false));
            add_into(acc_perp, motion_feature(model, prev.perp, f.perp, true));
            out[t] = finish(model, f, acc_par, acc_perp, factors, angle);
            prev = std::move(f);
        }
        return out;
    }

    // Filtered: collect motion features over time, filter each element, then render.
    std::vector<std::vector<double>> series(steps);
    const std::size_t npar = zero_par.size();
    series[0].assign(npar + zero_perp.size(), 0.0);
    {
        Tensor3<float> acc_par = zero_par, acc_perp = zero_perp;
        FrameFeatures prev = first;
        for (std::size_t t = 1; t < steps; ++t) {
            FrameFeatures f = frame_features(model, frames[t], angle);
            const FrameFeatures& ref = spec.mode == ReferenceMode::Static ? first : prev;
            Tensor3<float> gp = motion_feature(model, ref.par, f.par, false);
            Tensor3<float> gq = motion_feature(model, ref.perp, f.perp, true);
            if (spec.mode == ReferenceMode::Dynamic) {
                add_into(acc_par, gp);
                add_into(acc_perp, gq);
                gp = acc_par;
                gq = acc_perp;
            }
            series[t].resize(npar + gq.size());
            std::copy(gp.v.begin(), gp.v.end(), series[t].begin());
            std::copy(gq.v.begin(), gq.v.end(), series[t].begin() + npar);
            prev = std::move(f);
        }
    }
    temporal_bandpass_sequence(series, *tf);
    parallel_for(steps, [&](std::size_t t) {
        const FrameFeatures f = t == 0 ? first : frame_features(model, frames[t], angle);
        Tensor3<float> gp = zero_par, gq = zero_perp;
        for (std::size_t i = 0; i < npar; ++i) gp.v[i] = static_cast<float>(series[t][i]);
        for (std::size_t i = 0; i < gq.size(); ++i) gq.v[i] = static_cast<float>(series[t][npar + i]);
        out[t] = finish(model, f, gp, gq, factors, angle);
    });
    return out;
}

}  // namespace axmag
