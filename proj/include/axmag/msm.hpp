#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "axmag/frame.hpp"
#include "axmag/magnification.hpp"
#include "axmag/tape.hpp"
#include "axmag/temporal_filter.hpp"

namespace axmag {

struct ModelConfig {
    int in_channels = 3;
    int channels = 32;          // encoder, texture and shape width
    int decoder_channels = 64;
    int encoder_blocks = 2;
    int texture_blocks = 2;
    int decoder_blocks = 2;
    double beta = 0.5;
    /// Weight the y-shape term by beta as well.
    bool symmetric_shape_loss = false;
    std::uint64_t seed = 0;
};

/// One named weight array.
template <class T>
struct ParamBlock {
    std::string name;
    nn::Tensor3<T> value;
};

/// All weights of the network. The shape-branch and manipulator kernels
/// exist once; the y path applies them to transposed feature maps.
template <class T>
class Model {
public:
    explicit Model(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }
    std::vector<ParamBlock<T>>& blocks() { return blocks_; }
    const std::vector<ParamBlock<T>>& blocks() const { return blocks_; }
    std::size_t index(const std::string& name) const;
    std::size_t parameter_count() const;

    template <class U>
    Model<U> cast() const;

private:
    void add(const std::string& name, int c, int h, int w, double stddev, std::mt19937_64& rng);

    ModelConfig config_;
    std::vector<ParamBlock<T>> blocks_;
};

/// Per-axis magnification for the network: scalar factors, or per-pixel
/// factors at half resolution, in the (1 + alpha) convention.
template <class T>
struct AxisFactors {
    T par = T(0);
    T perp = T(0);
    std::optional<nn::Tensor3<T>> par_map;   // (1, H/2, W/2)
    std::optional<nn::Tensor3<T>> perp_map;  // (1, H/2, W/2)
};

/// Forward graph over one tape. Parameters are bound as leaves when
/// gradients are wanted and as constants otherwise.
template <class T>
class Network {
public:
    using Var = typename nn::Tape<T>::Var;

    Network(const Model<T>& model, bool with_grad);

    nn::Tape<T>& tape() { return tape_; }
    const Model<T>& model() const { return model_; }
    Var param(const std::string& name) const;
    Var param_at(std::size_t block) const { return params_[block]; }

    Var input(const Frame& frame);
    Var encode(Var image);
    Var texture(Var features);
    /// (s_x, s_y); s_y is the x branch applied to transposed features.
    std::pair<Var, Var> shape(Var features);
    std::pair<Var, Var> project(std::pair<Var, Var> s, double angle_deg);
    std::pair<Var, Var> inverse_project(std::pair<Var, Var> s, double angle_deg);
    /// g(s2 - s1) on the axis path (horizontal kernels) or its transposed twin.
    Var motion_feature(Var s1, Var s2, bool transposed);
    /// s2 + h(alpha * feature), with the same transposition rule.
    Var apply_motion(Var s2, Var feature, T alpha, const std::optional<nn::Tensor3<T>>& map, bool transposed);
    Var manipulate(Var s1, Var s2, T alpha, const std::optional<nn::Tensor3<T>>& map, bool transposed);
    Var decode(Var texture, Var dx, Var dy);

    struct Outputs {
        Var prediction, texture_a, texture_b, shape_xa, shape_ya, shape_xb, shape_yb;
    };
    Outputs forward(const Frame& a, const Frame& b, double angle_deg, const AxisFactors<T>& factors);

private:
    Var conv(Var x, const std::string& name, int kh, int kw, int stride, bool bias = true);
    Var residual(Var x, const std::string& prefix, int kh, int kw);

    const Model<T>& model_;
    nn::Tape<T> tape_;
    std::vector<Var> params_;
};

/// Frame (HWC) to tensor (CHW) and back.
template <class T>
nn::Tensor3<T> frame_tensor(const Frame& f);
template <class T>
Frame tensor_frame(const nn::Tensor3<T>& t);

/// Converts an H x W x 2 map (dataset convention, alpha = 1 means no change)
/// to half-resolution network factors (alpha - 1), nearest neighbour.
template <class T>
AxisFactors<T> factors_from_map(const Frame& map);

/// Scalar factors or the MagnificationSpec map, in the (1 + alpha) convention.
template <class T>
AxisFactors<T> factors_from_spec(const MagnificationSpec& spec);

/// Runs the network; output is not clamped.
Frame msm_forward(const Model<float>& model, const Frame& a, const Frame& b, const MagnificationSpec& spec);

struct LossTerms {
    double total = 0.0;
    double recon = 0.0;
    double texture = 0.0;
    double shape_x = 0.0;
    double shape_y = 0.0;
};

/// Colour perturbation for the shape consistency target: per-channel gain
/// and offset, clamped to [0,1].
struct ColorPerturbation {
    std::vector<double> gain;
    std::vector<double> offset;
    static ColorPerturbation sample(std::mt19937_64& rng, int channels);
    static ColorPerturbation identity(int channels);
    Frame apply(const Frame& f) const;
};

/// Training example for the loss: factors follow the network convention.
struct LossInput {
    Frame frame_a;
    Frame frame_b;
    Frame target;
    double angle_deg = 0.0;
    Frame factor_map;  // H x W x 2 in dataset convention
};

/// Builds the loss on the network's tape and returns its node and terms.
template <class T>
std::pair<typename Network<T>::Var, LossTerms> build_loss(Network<T>& net, const LossInput& in,
                                                          const ColorPerturbation& perturb);

/// Writes `<manifest>` (block name, shape, file per line) and one AXTF file
/// per block next to it.
void save_model(const std::filesystem::path& manifest, const Model<float>& model);
Model<float> load_model(const std::filesystem::path& manifest);

struct TrainConfig {
    int epochs = 1;
    int batch = 8;
    double lr = 2e-4;
    std::uint64_t seed = 0;
    bool perturb = true;
    /// Optional cap on steps, for quick runs; 0 means no cap.
    std::size_t max_steps = 0;
};

struct TrainResult {
    Model<float> model;
    std::vector<LossTerms> log;  // per step
};

/// Adam training over a dataset directory. Writes `<out>` (final model),
/// `<stem>.epochN.txt` checkpoints and `<stem>.log.csv` with columns
/// step,loss,l_recon,l_texture,l_shape_x,l_shape_y. Throws
/// std::runtime_error when the loss becomes non-finite.
TrainResult train_msm(const std::filesystem::path& data, const std::filesystem::path& out, const ModelConfig& model_config,
                      const TrainConfig& config);

/// Same, over in-memory samples, without writing files.
TrainResult train_msm(const std::vector<LossInput>& samples, const ModelConfig& model_config, const TrainConfig& config,
                      const std::filesystem::path& out = {});

/// Loads a dataset sample as a loss input.
LossInput load_loss_input(const std::filesystem::path& sample_dir);

/// Video magnification with the network. Static mode compares each frame
/// with frame 0, dynamic mode accumulates g of consecutive shape changes.
/// An optional temporal filter is applied to those motion features before
/// scaling.
std::vector<Frame> magnify_video_msm(const std::vector<Frame>& frames, const MagnificationSpec& spec,
                                     const std::optional<TemporalFilterSpec>& tf, const Model<float>& model);

}  // namespace axmag
