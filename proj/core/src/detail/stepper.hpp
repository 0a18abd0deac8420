#pragma once

#include "geoball/nball.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace geoball::detail {

// Plain SGD or Adam over one flat parameter vector split into blocks.
class ParameterStepper {
public:
    ParameterStepper(Optimizer kind, std::size_t size) : kind_(kind)
    {
        if (kind_ == Optimizer::Adam) {
            m_.assign(size, 0.0);
            v_.assign(size, 0.0);
        }
    }

    // Updates the block occupying [offset, offset + grad.size()) of the full vector.
    void step(std::span<double> params, std::span<const double> grad, std::size_t offset, double lr)
    {
        if (kind_ == Optimizer::Sgd) {
            for (std::size_t i = 0; i < grad.size(); ++i) params[i] -= lr * grad[i];
            return;
        }
        constexpr double beta1 = 0.9;
        constexpr double beta2 = 0.999;
        constexpr double eps = 1e-8;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < grad.size(); ++i) {
            double& m = m_[offset + i];
            double& v = v_[offset + i];
            m = beta1 * m + (1.0 - beta1) * grad[i];
            v = beta2 * v + (1.0 - beta2) * grad[i] * grad[i];
            params[i] -= lr * (m / c1) / (std::sqrt(v / c2) + eps);
        }
    }

    // Call once per optimisation step, before step().
    void tick() { ++t_; }

private:
    Optimizer kind_;
    std::vector<double> m_;
    std::vector<double> v_;
    long t_ = 0;
};

}  // namespace geoball::detail
