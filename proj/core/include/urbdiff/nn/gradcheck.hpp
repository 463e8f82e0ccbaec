#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <sstream>
#include <utility>
#include <vector>

#include "urbdiff/nn/autodiff.hpp"
#include "urbdiff/rng.hpp"

namespace urbdiff::nn {

struct GradCheckOptions {
    double h = 1e-4;        // central-difference step
    int n_coords = 64;      // coordinates sampled per input tensor
    std::uint64_t seed = 7;
    // Optional guard: return true to skip a coordinate (e.g. near a relu or
    // maxpool decision boundary where the derivative is not defined).
    std::function<bool(std::size_t input_idx, std::int64_t coord)> skip;
};

struct GradCheckResult {
    double max_rel_err = 0.0;
    int checked = 0;
    int skipped = 0;
    std::string worst;

    bool ok(double tol) const { return checked > 0 && max_rel_err < tol; }
};

// Compares reverse-mode gradients of a scalar-valued graph against central
// finite differences, in double precision throughout. `build` must construct
// the graph fresh from the supplied inputs on every call and return a scalar
// node (its `scalar` field is used as the function value).
inline GradCheckResult finite_diff_check(
    const std::function<VarT<double>(const std::vector<VarT<double>>&)>& build,
    std::vector<VarT<double>> inputs, const GradCheckOptions& opts = {}) {
    if (opts.h < 1e-5 || opts.h > 1e-2)
        throw ConfigError("gradcheck: step size must lie in [1e-5, 1e-2]");
    if (opts.n_coords < 50)
        throw ConfigError("gradcheck: need at least 50 sampled coordinates");

    // Analytic pass.
    for (auto& in : inputs) {
        in->requires_grad = true;
        in->zero_grad();
    }
    auto root = build(inputs);
    backward(root);
    std::vector<TensorT<double>> analytic;
    analytic.reserve(inputs.size());
    for (auto& in : inputs) {
        in->ensure_grad();
        analytic.push_back(in->grad);
    }

    auto eval = [&]() {
        for (auto& in : inputs) in->requires_grad = false;
        auto node = build(inputs);
        return node->scalar;
    };

    GradCheckResult res;
    Rng rng(opts.seed);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        auto& in = inputs[k];
        const std::int64_t n = in->value.size();
        std::vector<std::int64_t> coords;
        if (n <= opts.n_coords) {
            for (std::int64_t i = 0; i < n; ++i) coords.push_back(i);
        } else {
            std::set<std::int64_t> seen;
            while (static_cast<int>(seen.size()) < opts.n_coords)
                seen.insert(static_cast<std::int64_t>(rng.next_index(static_cast<std::size_t>(n))));
            coords.assign(seen.begin(), seen.end());
        }
        for (std::int64_t i : coords) {
            if (opts.skip && opts.skip(k, i)) {
                ++res.skipped;
                continue;
            }
            const double orig = in->value.data[i];
            in->value.data[i] = orig + opts.h;
            const double f_plus = eval();
            in->value.data[i] = orig - opts.h;
            const double f_minus = eval();
            in->value.data[i] = orig;

            const double numeric = (f_plus - f_minus) / (2.0 * opts.h);
            const double a = analytic[k].data[i];
            const double rel =
                std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            ++res.checked;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                std::ostringstream os;
                os << "input " << k << " coord " << i << ": analytic=" << a
                   << " numeric=" << numeric << " rel=" << rel;
                res.worst = os.str();
            }
        }
        in->requires_grad = true;
    }
    return res;
}

}  // namespace urbdiff::nn
