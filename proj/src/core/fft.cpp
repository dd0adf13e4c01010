#include "axmag/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace axmag {
namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void run(std::vector<cplx>& data, int rank, const int* dims, bool inverse) {
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft(rank, dims, ptr, ptr, inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("FFTW planning failed");
    fftw_execute(plan);
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
}

}  // namespace

void fft1d_many(std::vector<cplx>& data, int length, int count, bool inverse) {
    if (data.size() != static_cast<std::size_t>(length) * count) throw std::invalid_argument("fft1d_many: size mismatch");
    if (data.empty()) return;
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_many_dft(1, &length, count, ptr, nullptr, 1, length, ptr, nullptr, 1, length,
                                  inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("FFTW planning failed");
    fftw_execute(plan);
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
}

void fft2d(std::vector<cplx>& data, int rows, int cols, bool inverse) {
    if (data.size() != static_cast<std::size_t>(rows) * cols) throw std::invalid_argument("fft2d: size mismatch");
    const int dims[2] = {rows, cols};
    run(data, 2, dims, inverse);
}

void fft1d(std::vector<cplx>& data, bool inverse) {
    if (data.empty()) return;
    const int dims[1] = {static_cast<int>(data.size())};
    run(data, 1, dims, inverse);
}

}  // namespace axmag
