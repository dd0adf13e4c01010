#pragma once

#include <span>
#include <vector>

namespace axmag {

enum class TemporalFilterKind { IdealFft, Butterworth, DifferenceOfFrames };

struct TemporalFilterSpec {
    TemporalFilterKind kind = TemporalFilterKind::IdealFft;
    double low_cut = 0.0;   // Hz
    double high_cut = 1.0;  // Hz
    double fps = 30.0;

    /// Throws std::invalid_argument unless 0 <= low < high <= fps/2 (bandpass kinds).
    void validate() const;
};

/// Filters one time series.
///   ideal: zero every DFT bin whose |frequency| is outside [low, high];
///   butterworth: causal second-order bandpass (bilinear transform);
///   difference: x_t - x_{t-1}, with 0 at t = 0.
std::vector<double> temporal_bandpass(std::span<const double> signal, const TemporalFilterSpec& spec);

/// Filters every element of a frame-major sequence along time, in place:
/// `sequence[t][i]` is element i at time t.
void temporal_bandpass_sequence(std::vector<std::vector<double>>& sequence, const TemporalFilterSpec& spec);

/// Second-order section coefficients {b0, b1, b2, a1, a2} (a0 = 1) of the
/// Butterworth bandpass used above.
std::vector<double> butterworth_bandpass_coefficients(const TemporalFilterSpec& spec);

}  // namespace axmag
