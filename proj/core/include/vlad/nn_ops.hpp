#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace vlad {

/// A named, shaped parameter array. Values are stored row-major.
struct ParameterTensor {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<double> values;

    friend bool operator==(const ParameterTensor&, const ParameterTensor&) = default;
};

std::size_t element_count(std::span<const std::uint64_t> dims);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// Fills `values` with N(0, stddev^2) draws.
void fill_normal(std::span<double> values, double stddev, std::mt19937_64& rng);

/// Adam with bias correction. One instance per parameter tensor.
class AdamSlot {
public:
    AdamSlot() = default;
    explicit AdamSlot(std::size_t size) : m_(size, 0.0), v_(size, 0.0) {}

    void step(std::span<double> params, std::span<const double> grads, double learning_rate, std::int64_t t);

    std::vector<double>& first_moment() noexcept { return m_; }
    std::vector<double>& second_moment() noexcept { return v_; }
    const std::vector<double>& first_moment() const noexcept { return m_; }
    const std::vector<double>& second_moment() const noexcept { return v_; }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEpsilon = 1e-8;
    std::vector<double> m_;
    std::vector<double> v_;
};

/// Deterministic permutation of [0, n) for a training epoch.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::int64_t epoch);

}  // namespace vlad
