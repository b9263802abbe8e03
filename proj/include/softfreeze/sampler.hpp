#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "softfreeze/rng.hpp"

namespace softfreeze {

struct SamplerConfig {
    double temperature = 0.7;  // 0 selects greedy decoding
    int top_k = 40;            // 0 means unlimited
    double top_p = 0.9;
    std::uint64_t seed = 42;

    void validate() const;
    bool operator==(const SamplerConfig&) const = default;
};

std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);

// -sum p ln p, with 0 ln 0 = 0.
double entropy(std::span<const double> probs);

// Lowest index among the maxima.
int argmax(std::span<const double> values);

class Sampler {
public:
    explicit Sampler(SamplerConfig config);

    // Temperature, then top-k (ties by ascending id), then nucleus truncation,
    // renormalize, draw. Temperature 0 returns argmax without consuming the
    // generator.
    int sample(std::span<const double> logits);

    const SamplerConfig& config() const { return config_; }
    const Rng& state() const { return rng_; }
    void set_state(const Rng& state) { rng_ = state; }

private:
    SamplerConfig config_;
    Rng rng_;
};

}  // namespace softfreeze
