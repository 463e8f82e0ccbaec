#pragma once

#include <cmath>
#include <vector>

#include "urbdiff/nn/autodiff.hpp"

namespace urbdiff::nn {

// Plain SGD with classical momentum and L2 weight decay:
//   v <- momentum * v + grad + weight_decay * param
//   param <- param - lr * v
// Consumed gradients are cleared by step() so each pass starts fresh.
template <class T>
class SgdT {
public:
    SgdT(std::vector<VarT<T>> params, double lr, double momentum = 0.0,
         double weight_decay = 0.0)
        : params_(std::move(params)), lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {
        if (!(lr_ > 0.0) || !std::isfinite(lr_))
            throw ConfigError("sgd: learning rate must be positive and finite");
        if (momentum_ < 0.0 || momentum_ >= 1.0)
            throw ConfigError("sgd: momentum must be in [0, 1)");
        if (weight_decay_ < 0.0) throw ConfigError("sgd: weight decay must be nonnegative");
        velocity_.reserve(params_.size());
        for (const auto& p : params_)
            velocity_.emplace_back(p->value.shape);  // zero-initialised
    }

    void step() {
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& p = params_[k];
            if (p->grad.data.empty()) continue;  // parameter untouched this pass
            TensorT<T>& v = velocity_[k];
            for (std::size_t i = 0; i < p->value.data.size(); ++i) {
                const double g = static_cast<double>(p->grad.data[i]) +
                                 weight_decay_ * static_cast<double>(p->value.data[i]);
                if (!std::isfinite(g))
                    throw NumericFault("sgd: non-finite gradient in parameter '" + p->name + "'");
                const double vel = momentum_ * static_cast<double>(v.data[i]) + g;
                v.data[i] = static_cast<T>(vel);
                const double upd = static_cast<double>(p->value.data[i]) - lr_ * vel;
                if (!std::isfinite(upd))
                    throw NumericFault("sgd: non-finite update in parameter '" + p->name + "'");
                p->value.data[i] = static_cast<T>(upd);
            }
            p->zero_grad();
        }
    }

    void zero_grad() {
        for (auto& p : params_) p->zero_grad();
    }

    double lr() const { return lr_; }
    void set_lr(double lr) {
        if (!(lr > 0.0) || !std::isfinite(lr))
            throw ConfigError("sgd: learning rate must be positive and finite");
        lr_ = lr;
    }

private:
    std::vector<VarT<T>> params_;
    std::vector<TensorT<T>> velocity_;
    double lr_;
    double momentum_;
    double weight_decay_;
};

using Sgd = SgdT<float>;

}  // namespace urbdiff::nn
