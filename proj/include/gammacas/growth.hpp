#pragma once

#include <cstddef>

namespace gammacas::growth {

/// Parameters of the cascade growth rate  scale * t^growth * exp(-decay*t),
/// with t in hours. scale >= 0, growth >= 0, decay > 0.
struct GrowthParams {
    double scale = 0.0;   // A
    double growth = 0.0;  // gamma
    double decay = 1.0;   // lambda

    bool valid() const;
};

/// Fixed-step quadrature settings; the scheme is classical 4th-order
/// Runge-Kutta over `steps` equal sub-intervals of [0, T].
struct QuadratureConfig {
    int steps = 256;
};

/// Instantaneous growth rate at time t (events per hour). At t = 0 the value
/// is scale when growth = 0 and 0 otherwise.
double rate(const GrowthParams& p, double t);

/// Lower incomplete gamma  integral_0^x u^(s-1) e^(-u) du,  s > 0, x >= 0.
/// Power series below x = s+1, continued fraction above; relative error ~1e-14.
double lower_incomplete_gamma(double s, double x);

/// Expected cascade size at horizon T via the closed form
/// (scale / decay^(growth+1)) * lower_incomplete_gamma(growth+1, decay*T).
double cascade_size_closed_form(const GrowthParams& p, double horizon);

/// Expected cascade size by RK4 on y' = rate(t), y(0) = 0. Because the
/// integrand does not depend on y this reduces to composite Simpson on the
/// same nodes.
double cascade_size_quadrature(const GrowthParams& p, double horizon, const QuadratureConfig& cfg);

/// Value of the quadrature sum together with its exact partial derivatives
/// with respect to (scale, growth, decay). The growth partial at the t = 0
/// node is defined as 0 (limit of t^g * ln t).
struct QuadratureResult {
    double value = 0.0;
    double d_scale = 0.0;
    double d_growth = 0.0;
    double d_decay = 0.0;
};

QuadratureResult quadrature_with_gradient(const GrowthParams& p, double horizon,
                                          const QuadratureConfig& cfg);

}  // namespace gammacas::growth
