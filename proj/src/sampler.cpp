#include "softfreeze/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "softfreeze/errors.hpp"

namespace softfreeze {

void SamplerConfig::validate() const {
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
        throw InputError("sampler.temperature must be finite and >= 0");
    }
    if (top_k < 0) {
        throw InputError("sampler.top_k must be >= 1, or 0 for unlimited");
    }
    if (!(top_p > 0.0 && top_p <= 1.0)) {
        throw InputError("sampler.top_p must lie in (0, 1]");
    }
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
    std::vector<double> p(logits.size());
    if (logits.empty()) return p;
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp((logits[i] - max_logit) / temperature);
        denom += p[i];
    }
    for (double& x : p) x /= denom;
    return p;
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

int argmax(std::span<const double> values) {
    return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

Sampler::Sampler(SamplerConfig config) : config_(config), rng_(config.seed) {
    config_.validate();
}

int Sampler::sample(std::span<const double> logits) {
    if (logits.empty()) {
        throw InputError("cannot sample from an empty distribution");
    }
    for (double l : logits) {
        if (!std::isfinite(l)) throw InputError("logits must be finite");
    }
    if (config_.temperature == 0.0 || config_.top_k == 1) {
        return argmax(logits);
    }

    const std::vector<double> probs = softmax(logits, config_.temperature);
    std::vector<int> order(logits.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return logits[a] > logits[b]; });

    std::size_t keep = order.size();
    if (config_.top_k > 0) {
        keep = std::min(keep, static_cast<std::size_t>(config_.top_k));
    }
    double mass = 0.0;
    for (std::size_t i = 0; i < keep; ++i) mass += probs[order[i]];
    if (config_.top_p < 1.0) {
        // Smallest prefix whose share of the top-k mass reaches top_p.
        double cumulative = 0.0;
        for (std::size_t i = 0; i < keep; ++i) {
            cumulative += probs[order[i]];
            if (cumulative >= config_.top_p * mass) {
                keep = i + 1;
                mass = cumulative;
                break;
            }
        }
    }

    const double u = uniform01(rng_) * mass;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
        cumulative += probs[order[i]];
        if (u < cumulative) return order[i];
    }
    return order[keep - 1];
}

}  // namespace softfreeze
