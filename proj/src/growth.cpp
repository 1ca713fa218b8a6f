#include "gammacas/growth.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gammacas::growth {

bool GrowthParams::valid() const {
    return std::isfinite(scale) && std::isfinite(growth) && std::isfinite(decay) && scale >= 0.0 &&
           growth >= 0.0 && decay > 0.0;
}

namespace {

void require_valid(const GrowthParams& p) {
    if (!p.valid()) throw std::domain_error("invalid growth parameters");
}

void require_steps(const QuadratureConfig& cfg) {
    if (cfg.steps < 1) throw std::domain_error("quadrature steps must be >= 1");
}

// gamma(s,x)/Gamma(s) by power series, valid and stable for x < s+1.
double gamma_p_series(double s, double x) {
    double term = 1.0 / s;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
        term *= x / (s + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

// Gamma(s,x)/Gamma(s) by modified Lentz continued fraction, for x >= s+1.
double gamma_q_contfrac(double s, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

}  // namespace

double rate(const GrowthParams& p, double t) {
    require_valid(p);
    if (!(t >= 0.0)) throw std::domain_error("rate: t must be >= 0");
    if (t == 0.0) return p.growth == 0.0 ? p.scale : 0.0;
    return p.scale * std::exp(p.growth * std::log(t) - p.decay * t);
}

double lower_incomplete_gamma(double s, double x) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::domain_error("lower_incomplete_gamma: s <= 0");
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::domain_error("lower_incomplete_gamma: x < 0");
    if (x == 0.0) return 0.0;
    double g = std::tgamma(s);
    if (x < s + 1.0) return g * gamma_p_series(s, x);
    return g * (1.0 - gamma_q_contfrac(s, x));
}

double cascade_size_closed_form(const GrowthParams& p, double horizon) {
    require_valid(p);
    if (!(horizon >= 0.0)) throw std::domain_error("cascade size: horizon must be >= 0");
    if (horizon == 0.0 || p.scale == 0.0) return 0.0;
    double s = p.growth + 1.0;
    return p.scale * std::exp(-s * std::log(p.decay)) * lower_incomplete_gamma(s, p.decay * horizon);
}

double cascade_size_quadrature(const GrowthParams& p, double horizon, const QuadratureConfig& cfg) {
    require_valid(p);
    require_steps(cfg);
    if (!(horizon >= 0.0)) throw std::domain_error("cascade size: horizon must be >= 0");
    if (horizon == 0.0) return 0.0;
    const double h = horizon / cfg.steps;
    double y = 0.0;
    for (int n = 0; n < cfg.steps; ++n) {
        double t = n * h;
        double k1 = rate(p, t);
        double k23 = rate(p, t + 0.5 * h);  // k2 == k3 when f is independent of y
        double k4 = rate(p, t + h);
        y += h / 6.0 * (k1 + 4.0 * k23 + k4);
    }
    return y;
}

QuadratureResult quadrature_with_gradient(const GrowthParams& p, double horizon,
                                          const QuadratureConfig& cfg) {
    require_valid(p);
    require_steps(cfg);
    if (!(horizon >= 0.0)) throw std::domain_error("cascade size: horizon must be >= 0");
    QuadratureResult out;
    if (horizon == 0.0) return out;
    const double h = horizon / cfg.steps;

    // Accumulates one weighted node of the quadrature sum. Partials of the
    // integrand: d/dA = t^g e^{-l t}, d/dg = A t^g ln(t) e^{-l t} (0 at t=0),
    // d/dl = -A t^{g+1} e^{-l t}.
    auto node = [&](double t, double w) {
        if (t <= 0.0) {
            if (p.growth == 0.0) {
                out.value += w * p.scale;
                out.d_scale += w;
            }
            return;
        }
        double lt = std::log(t);
        double base = std::exp(p.growth * lt - p.decay * t);
        out.value += w * p.scale * base;
        out.d_scale += w * base;
        out.d_growth += w * p.scale * base * lt;
        out.d_decay -= w * p.scale * base * t;
    };

    for (int n = 0; n < cfg.steps; ++n) {
        double t = n * h;
        node(t, h / 6.0);
        node(t + 0.5 * h, 4.0 * h / 6.0);
        node(t + h, h / 6.0);
    }
    return out;
}

}  // namespace gammacas::growth
