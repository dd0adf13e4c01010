#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "axmag/frame.hpp"
#include "axmag/procedural.hpp"

namespace axmag {

using Vec2 = std::array<double, 2>;

struct Layer {
    Frame image;
    Mask mask;
};

/// Back-to-front layers; layer 0 is the background with a full mask.
struct LayerStack {
    std::vector<Layer> layers;

    /// Throws ShapeError on inconsistent dimensions or a partial background mask.
    void validate() const;
};

struct MotionAssignment {
    double angle_deg = 0.0;
    std::vector<Vec2> translations;  // per layer, pixels
    std::vector<Vec2> factors;       // per layer, (along angle, orthogonal)
};

enum class SourceMode { Procedural, Directory };
enum class EvalMode { None, Subpixel, SubpixelGeneric, Noise };

struct DatasetConfig {
    std::size_t count = 1;  // samples, or samples per level for eval sets
    std::uint64_t seed = 0;
    int size = 384;
    int channels = 3;
    int k_min = 8;  // total layers including the background
    int k_max = 15;
    double alpha_min = 1.0;
    double alpha_max = 80.0;
    double angle_min = 0.0;
    double angle_max = 90.0;
    double max_translation = 10.0;  // per component
    double max_amplified = 30.0;    // per component, before projection
    SourceMode source = SourceMode::Procedural;
    /// Directory mode: `<dir>/backgrounds/*.png`, `<dir>/foregrounds/*.png`
    /// with same-named masks in `<dir>/masks/`.
    std::filesystem::path source_dir;
    EvalMode eval_mode = EvalMode::None;
    /// Eval sets: amplified motion along the axis (the other axis gets half).
    double eval_amplified = 10.0;
    /// Eval sets: fixed axis angle; negative draws it per sample.
    double eval_angle = -1.0;
    /// Angles in {0, 90}, integer translations and factors; for exact checks.
    bool integer_motion = false;
    /// Use one dither seed for all three images instead of separate A / B seeds.
    bool shared_dither_seed = false;

    void validate() const;
};

struct TrainSample {
    Frame frame_a;
    Frame frame_b;
    Frame amplified;
    Frame mag_map;  // H x W x 2, factors of the topmost frame-A layer
    MotionAssignment motion;
    std::uint64_t dither_seed_a = 0;
    std::uint64_t dither_seed_b = 0;  // also used for the amplified frame
    // eval metadata
    int level = 0;
    double motion_magnitude = 0.0;
    double noise_factor = 0.0;
};

LayerStack sample_scene(std::mt19937_64& rng, const DatasetConfig& config);

/// out = L1; for k >= 2: out = mask_k * L_k + (1 - mask_k) * out.
Frame compose(const LayerStack& stack);

/// Unit vector at `angle_deg`, exact at multiples of 90 degrees.
Vec2 axis_vector(double angle_deg);

/// alpha_par * (d.p) p + alpha_perp * (d.q) q with p the axis and q its
/// orthogonal, evaluated as d + (alpha_par - 1)(d.p)p + (alpha_perp - 1)(d.q)q
/// so unit factors return d exactly.
Vec2 magnified_translation(const Vec2& d, const Vec2& alpha, double angle_deg);

/// Translates every layer (image and mask) of the stack.
LayerStack translate_stack(const LayerStack& stack, const std::vector<Vec2>& translations);

/// Draws motion for the stack and renders the training triple.
TrainSample make_pair(const LayerStack& stack, std::mt19937_64& rng, const DatasetConfig& config);

/// Renders a triple for a given motion assignment.
TrainSample render_pair(const LayerStack& stack, const MotionAssignment& motion, std::uint64_t seed_a,
                        std::uint64_t seed_b);

/// Per-sample generator; identical for serial and parallel runs.
std::mt19937_64 sample_rng(std::uint64_t seed, std::size_t index);

/// Levels of the eval sets.
std::vector<double> subpixel_levels();  // 15 log-spaced in [0.04, 1]
std::vector<double> noise_levels();     // 21 log-spaced in [0.01, 100]
constexpr double kNoiseEvalMotion = 0.05;

/// Generates sample `index` of the dataset described by `config`.
TrainSample generate_sample(const DatasetConfig& config, std::size_t index);
std::size_t dataset_size(const DatasetConfig& config);

/// Writes `<root>/<index>/{frameA.png, frameB.png, amplified.png, meta.txt, mag_map.axtf}`.
void write_dataset(const std::filesystem::path& root, const DatasetConfig& config);
void write_sample(const std::filesystem::path& dir, const TrainSample& sample);
TrainSample read_sample(const std::filesystem::path& dir);
/// Sample directories under root, sorted.
std::vector<std::filesystem::path> list_samples(const std::filesystem::path& root);

std::string eval_mode_name(EvalMode mode);
EvalMode parse_eval_mode(const std::string& name);

}  // namespace axmag
