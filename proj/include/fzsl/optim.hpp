#ifndef FZSL_OPTIM_HPP
#define FZSL_OPTIM_HPP

#include "fzsl/common.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace fzsl {

struct OptimizerConfig {
    enum class Kind { sgd, adam } kind = Kind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// SGD or Adam over a fixed list of parameter blocks. State is allocated on
/// the first step and keyed by block position.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg = {}) : cfg_(cfg) {}

    template <typename Params>
    void step(Params& params, const Params& grads, double lr) {
        auto p = params.blocks();
        const auto g = grads.blocks();
        if (first_.empty()) {
            for (const auto& b : p) {
                first_.emplace_back(b.values.size(), 0.0);
                second_.emplace_back(b.values.size(), 0.0);
            }
        }
        require(first_.size() == p.size(), "optimizer: parameter layout changed");
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t b = 0; b < p.size(); ++b) {
            auto values = p[b].values;
            const auto grad = g[b].values;
            require(grad.size() == values.size(), "optimizer: gradient shape mismatch");
            if (cfg_.kind == OptimizerConfig::Kind::sgd) {
                for (std::size_t i = 0; i < values.size(); ++i) values[i] -= lr * grad[i];
                continue;
            }
            auto& m = first_[b];
            auto& v = second_[b];
            for (std::size_t i = 0; i < values.size(); ++i) {
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * grad[i];
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
                values[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
            }
        }
    }

    long steps() const { return t_; }

private:
    OptimizerConfig cfg_;
    std::vector<std::vector<double>> first_;
    std::vector<std::vector<double>> second_;
    long t_ = 0;
};

}  // namespace fzsl

#endif  // FZSL_OPTIM_HPP
