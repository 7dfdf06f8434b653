#pragma once

#include <string>
#include <vector>

#include "i2c/errors.hpp"
#include "i2c/tensor.hpp"

namespace i2c {

// Ordered, named parameter collection. Order is the serialization and
// optimizer-state order, so it must be stable for a given model config.
struct ParamList {
    struct Entry {
        std::string name;
        Tensor tensor;
    };
    std::vector<Entry> entries;

    Tensor& add(std::string name, Tensor t) {
        t.set_requires_grad(true);
        entries.push_back({std::move(name), std::move(t)});
        return entries.back().tensor;
    }

    Tensor& at(const std::string& name) {
        for (auto& e : entries)
            if (e.name == name) return e.tensor;
        throw UsageError("unknown parameter '" + name + "'");
    }
    const Tensor& at(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return e.tensor;
        throw UsageError("unknown parameter '" + name + "'");
    }

    std::size_t total_values() const {
        std::size_t n = 0;
        for (const auto& e : entries) n += e.tensor.numel();
        return n;
    }
};

// Plain SGD with classical momentum:
//   v <- momentum * v + grad;  p <- p - lr * v
// Gradients are zeroed after each step (reset is part of the step contract).
class SgdOptimizer {
public:
    SgdOptimizer(double lr, double momentum) : lr_(lr), momentum_(momentum) {
        if (lr < 0.0) throw ConfigError("sgd lr must be non-negative");
        if (momentum < 0.0 || momentum >= 1.0)
            throw ConfigError("sgd momentum must lie in [0,1), got " + std::to_string(momentum));
    }

    void step(ParamList& params) {
        if (velocity_.empty()) {
            velocity_.resize(params.entries.size());
            for (std::size_t i = 0; i < params.entries.size(); ++i)
                velocity_[i].assign(params.entries[i].tensor.numel(), 0.0);
        }
        if (velocity_.size() != params.entries.size())
            throw UsageError("sgd_step: parameter set changed between steps");
        for (std::size_t i = 0; i < params.entries.size(); ++i) {
            Tensor& p = params.entries[i].tensor;
            if (!p.requires_grad || p.grad.size() != p.data.size())
                throw UsageError("sgd_step: parameter '" + params.entries[i].name +
                                 "' has no populated gradient");
            auto& v = velocity_[i];
            for (std::size_t j = 0; j < p.data.size(); ++j) {
                v[j] = momentum_ * v[j] + p.grad[j];
                p.data[j] -= lr_ * v[j];
            }
            p.zero_grad();
        }
    }

private:
    double lr_;
    double momentum_;
    std::vector<std::vector<double>> velocity_;
};

}  // namespace i2c
