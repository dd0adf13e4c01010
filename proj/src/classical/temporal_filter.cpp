#include "axmag/temporal_filter.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "axmag/fft.hpp"

namespace axmag {

void TemporalFilterSpec::validate() const {
    if (!(fps > 0.0)) throw std::invalid_argument("fps must be positive");
    if (kind == TemporalFilterKind::DifferenceOfFrames) return;
    if (!(low_cut >= 0.0 && low_cut < high_cut && high_cut <= fps / 2.0)) {
        throw std::invalid_argument("temporal band must satisfy 0 <= low < high <= fps/2");
    }
}

std::vector<double> butterworth_bandpass_coefficients(const TemporalFilterSpec& spec) {
    spec.validate();
    const double k = 2.0 * spec.fps;
    const double nyquist_guard = 0.4999 * spec.fps;
    const double w1 = k * std::tan(std::numbers::pi * spec.low_cut / spec.fps);
    const double w2 = k * std::tan(std::numbers::pi * std::min(spec.high_cut, nyquist_guard) / spec.fps);
    const double bw = w2 - w1;
    const double w0sq = w1 * w2;
    const double a0 = k * k + bw * k + w0sq;
    return {bw * k / a0, 0.0, -bw * k / a0, (2.0 * w0sq - 2.0 * k * k) / a0, (k * k - bw * k + w0sq) / a0};
}

namespace {

std::vector<char> ideal_pass_mask(int n, const TemporalFilterSpec& spec) {
    std::vector<char> pass(n);
    for (int i = 0; i < n; ++i) {
        const double f = std::abs(static_cast<double>(signed_bin(i, n))) * spec.fps / n;
        pass[i] = f >= spec.low_cut && f <= spec.high_cut;
    }
    return pass;
}

}  // namespace

std::vector<double> temporal_bandpass(std::span<const double> signal, const TemporalFilterSpec& spec) {
    std::vector<std::vector<double>> seq(signal.size(), std::vector<double>(1));
    for (std::size_t t = 0; t < signal.size(); ++t) seq[t][0] = signal[t];
    temporal_bandpass_sequence(seq, spec);
    std::vector<double> out(signal.size());
    for (std::size_t t = 0; t < signal.size(); ++t) out[t] = seq[t][0];
    return out;
}

void temporal_bandpass_sequence(std::vector<std::vector<double>>& sequence, const TemporalFilterSpec& spec) {
    spec.validate();
    const int steps = static_cast<int>(sequence.size());
    if (steps == 0) return;
    const std::size_t elements = sequence[0].size();
    for (const auto& frame : sequence) {
        if (frame.size() != elements) throw std::invalid_argument("ragged temporal sequence");
    }

    switch (spec.kind) {
        case TemporalFilterKind::DifferenceOfFrames: {
            for (int t = steps - 1; t >= 1; --t)
                for (std::size_t i = 0; i < elements; ++i) sequence[t][i] -= sequence[t - 1][i];
            for (double& v : sequence[0]) v = 0.0;
            return;
        }
        case TemporalFilterKind::Butterworth: {
            if (steps < 3) throw std::invalid_argument("butterworth filtering needs at least 3 samples");
            const auto c = butterworth_bandpass_coefficients(spec);
            // Direct form II transposed, started in the steady state of the
            // first sample so a constant series yields zeros from t = 0.
            std::vector<double> s1(elements), s2(elements);
            for (std::size_t i = 0; i < elements; ++i) {
                const double x0 = sequence[0][i];
                const double y0 = (c[0] + c[1] + c[2]) / (1.0 + c[3] + c[4]) * x0;
                s2[i] = c[2] * x0 - c[4] * y0;
                s1[i] = c[1] * x0 - c[3] * y0 + s2[i];
            }
            for (int t = 0; t < steps; ++t) {
                for (std::size_t i = 0; i < elements; ++i) {
                    const double x = sequence[t][i];
                    const double y = c[0] * x + s1[i];
                    s1[i] = c[1] * x - c[3] * y + s2[i];
                    s2[i] = c[2] * x - c[4] * y;
                    sequence[t][i] = y;
                }
            }
            return;
        }
        case TemporalFilterKind::IdealFft: {
            const auto pass = ideal_pass_mask(steps, spec);
            constexpr std::size_t kChunk = 4096;
            std::vector<cplx> buf;
            for (std::size_t start = 0; start < elements; start += kChunk) {
                const std::size_t count = std::min(kChunk, elements - start);
                buf.assign(count * steps, cplx(0.0, 0.0));
                for (std::size_t i = 0; i < count; ++i)
                    for (int t = 0; t < steps; ++t) buf[i * steps + t] = sequence[t][start + i];
                fft1d_many(buf, steps, static_cast<int>(count), false);
                for (std::size_t i = 0; i < count; ++i)
                    for (int t = 0; t < steps; ++t)
                        if (!pass[t]) buf[i * steps + t] = 0.0;
                fft1d_many(buf, steps, static_cast<int>(count), true);
                for (std::size_t i = 0; i < count; ++i)
                    for (int t = 0; t < steps; ++t) sequence[t][start + i] = buf[i * steps + t].real() / steps;
            }
            return;
        }
    }
}

}  // namespace axmag
