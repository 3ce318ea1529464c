#ifndef MTCN_GRADCHECK_HPP
#define MTCN_GRADCHECK_HPP

#include <cmath>
#include <functional>

#include "mtcn/tensor.hpp"

namespace mtcn {

// Central-difference gradient estimate, always in 64-bit. This is the
// oracle every layer backward pass is validated against.
inline DTensor finite_diff_grad(const std::function<double(const DTensor&)>& f,
                                const DTensor& x, double eps) {
    if (!(eps > 0)) throw ConfigError("finite_diff_grad: eps must be positive");
    DTensor grad(x.shape());
    DTensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + eps;
        const double fp = f(probe);
        probe[i] = orig - eps;
        const double fm = f(probe);
        probe[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("finite_diff_grad: non-finite function value");
        grad[i] = (fp - fm) / (2.0 * eps);
    }
    return grad;
}

// Largest relative elementwise error, with an absolute floor so that
// near-zero entries do not blow up the ratio.
inline double max_rel_error(const DTensor& a, const DTensor& b, double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::fabs(a[i]), std::fabs(b[i]), floor});
        worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
    }
    return worst;
}

} // namespace mtcn

#endif
