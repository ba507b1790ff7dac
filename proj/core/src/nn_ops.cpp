#include "vlad/nn_ops.hpp"

#include "vlad/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vlad {

std::size_t element_count(std::span<const std::uint64_t> dims)
{
    std::size_t n = 1;
    for (auto d : dims) n *= static_cast<std::size_t>(d);
    return n;
}

std::vector<double> softmax(std::span<const double> logits)
{
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits[i] - peak);
        total += p[i];
    }
    for (double& v : p) v /= total;
    return p;
}

void fill_normal(std::span<double> values, double stddev, std::mt19937_64& rng)
{
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& v : values) v = dist(rng);
}

void AdamSlot::step(std::span<double> params, std::span<const double> grads, double learning_rate, std::int64_t t)
{
    if (params.size() != grads.size() || params.size() != m_.size()) {
        throw model_error("optimizer state does not match parameter size");
    }
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
        v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i] * grads[i];
        const double mhat = m_[i] / c1;
        const double vhat = v_[i] / c2;
        params[i] -= learning_rate * mhat / (std::sqrt(vhat) + kEpsilon);
    }
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::int64_t epoch)
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

}  // namespace vlad
