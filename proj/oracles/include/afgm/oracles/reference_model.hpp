#pragma once

#include <cstddef>
#include <vector>

#include "afgm/oracles/complex_scan.hpp"

namespace afgm::oracles {

/// Flat-array description of the default forecaster (interactive encoder,
/// amplitude-only frequency-gated blocks with residual stacking, shared head).
struct RawModel {
    std::size_t T = 0;
    std::size_t H = 0;
    std::size_t D = 0;
    std::size_t V = 0;
    std::size_t kernel = 3;
    std::vector<std::size_t> patch_lengths;

    std::vector<double> conv_kernel;  // kernel x D x D (tap, in, out)
    double alpha_raw = 0.0;
    std::vector<std::vector<double>> proj_w;  // per scale: P x V
    std::vector<std::vector<double>> proj_b;  // per scale: V

    struct Block {
        RawAdapter adapter;
        RawScanParams scan;
    };
    std::vector<Block> blocks;

    std::vector<double> head_w;  // (M*V) x H
    std::vector<double> head_b;  // H
    std::vector<double> mean;    // D
    std::vector<double> stdev;   // D
};

/// Straight-line forward pass: x is T x D on the raw scale; returns H x D on the raw scale.
std::vector<double> reference_forward(const RawModel& model, const std::vector<double>& x);

}  // namespace afgm::oracles
