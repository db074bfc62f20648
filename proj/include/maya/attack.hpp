#pragma once

#include <span>
#include <vector>

#include "maya/mlp.hpp"

namespace maya {

constexpr int kQuantLevels = 10;
constexpr int kBlock = 5;

int quantize_level(double value, double quant_min, double quant_max, int levels = kQuantLevels);

// Non-overlapping segments of `segment_length` samples, 5-sample block means, 10-level one-hot.
std::vector<SampleVector> preprocess(std::span<const double> measured, int label, int segment_length,
                                     double quant_min, double quant_max);

}  // namespace maya
