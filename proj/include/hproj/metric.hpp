#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hproj/errors.hpp"
#include "hproj/vec2.hpp"

namespace hproj {

struct Box {
    double xmin = -4.0, ymin = -4.0, xmax = 4.0, ymax = 4.0;

    bool contains(Vec2 p) const {
        return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
    }
    // Integration-time containment: a hair of slack so geodesics aimed at a
    // boundary point are not cut off by roundoff in the step positions.
    bool contains_eps(Vec2 p, double eps) const {
        return p.x >= xmin - eps && p.x <= xmax + eps && p.y >= ymin - eps && p.y <= ymax + eps;
    }
    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    // Largest chart norm attained inside the box.
    double corner_radius() const {
        double ax = std::max(std::abs(xmin), std::abs(xmax));
        double ay = std::max(std::abs(ymin), std::abs(ymax));
        return std::hypot(ax, ay);
    }
};

enum class MetricKind { Euclidean, RadialQuadratic, Polynomial };

inline const char* to_string(MetricKind k) {
    switch (k) {
        case MetricKind::Euclidean: return "euclidean";
        case MetricKind::RadialQuadratic: return "radial-quadratic";
        case MetricKind::Polynomial: return "polynomial";
    }
    return "?";
}

// Conformal metric g = e^{2*lambda(x,y)} (dx^2 + dy^2) with lambda given in
// closed form, so Christoffel symbols and curvature are exact. Subharmonic
// lambda is exactly non-positive Gaussian curvature, which construction
// enforces on a validation grid.
class ConformalMetric {
  public:
    static ConformalMetric euclidean(Box box = Box{}) {
        return ConformalMetric(MetricKind::Euclidean, {}, box);
    }

    // lambda = (x^2 + y^2)/2, the default curved metric: K = -2 e^{-(x^2+y^2)} < 0.
    static ConformalMetric radial_quadratic(Box box = Box{}) {
        return ConformalMetric(MetricKind::RadialQuadratic, {}, box);
    }

    // Coefficients in graded lexicographic order:
    //   [c00, c10, c01, c20, c11, c02, c30, c21, c12, c03, ...]
    // The list length must be a triangular number. Construction rejects any
    // lambda whose sampled Laplacian dips below -1e-12 on the validation grid.
    static ConformalMetric polynomial(std::vector<double> coeffs, Box box = Box{}) {
        return ConformalMetric(MetricKind::Polynomial, std::move(coeffs), box);
    }

    MetricKind kind() const { return kind_; }
    const Box& domain() const { return box_; }
    const std::vector<double>& coefficients() const { return coeffs_; }

    bool inside(Vec2 p) const { return box_.contains(p); }
    bool inside_integration(Vec2 p) const { return box_.contains_eps(p, 1e-9); }

    void require_inside(Vec2 p, const char* what) const {
        if (!box_.contains(p)) {
            throw DomainError(std::string(what) + ": point (" + std::to_string(p.x) +
                              ", " + std::to_string(p.y) + ") outside domain box");
        }
    }

    double lambda(Vec2 p) const {
        switch (kind_) {
            case MetricKind::Euclidean: return 0.0;
            case MetricKind::RadialQuadratic: return 0.5 * norm2(p);
            case MetricKind::Polynomial: return poly_eval(p, 0, 0);
        }
        return 0.0;
    }

    Vec2 grad_lambda(Vec2 p) const {
        switch (kind_) {
            case MetricKind::Euclidean: return {0.0, 0.0};
            case MetricKind::RadialQuadratic: return p;
            case MetricKind::Polynomial: return {poly_eval(p, 1, 0), poly_eval(p, 0, 1)};
        }
        return {0.0, 0.0};
    }

    double laplacian_lambda(Vec2 p) const {
        switch (kind_) {
            case MetricKind::Euclidean: return 0.0;
            case MetricKind::RadialQuadratic: return 2.0;
            case MetricKind::Polynomial: return poly_eval(p, 2, 0) + poly_eval(p, 0, 2);
        }
        return 0.0;
    }

    // e^{lambda}; the length scale of the metric at p.
    double conformal_factor(Vec2 p) const { return std::exp(lambda(p)); }

    // g_p(u, v) = e^{2 lambda(p)} <u, v>. Requires p inside the domain box.
    double inner(Vec2 p, Vec2 u, Vec2 v) const {
        require_inside(p, "metric_inner");
        return std::exp(2.0 * lambda(p)) * dot(u, v);
    }

    double g_norm(Vec2 p, Vec2 u) const {
        require_inside(p, "g_norm");
        return conformal_factor(p) * norm(u);
    }

    // Gaussian curvature K = -e^{-2 lambda} * (Laplacian of lambda).
    double curvature(Vec2 p) const {
        require_inside(p, "curvature");
        return -std::exp(-2.0 * lambda(p)) * laplacian_lambda(p);
    }

    // Christoffel symbols of the conformal metric,
    //   Gamma^k_ij = l_i d_jk + l_j d_ik - l_k d_ij  with  l = grad(lambda).
    // Returned as gamma[k][i][j]; symmetric in (i, j).
    struct Christoffel {
        double gamma[2][2][2];
    };

    Christoffel christoffel(Vec2 p) const {
        require_inside(p, "christoffel");
        const Vec2 l = grad_lambda(p);
        Christoffel c{};
        c.gamma[0][0][0] = l.x;
        c.gamma[0][0][1] = c.gamma[0][1][0] = l.y;
        c.gamma[0][1][1] = -l.x;
        c.gamma[1][0][0] = -l.y;
        c.gamma[1][0][1] = c.gamma[1][1][0] = l.x;
        c.gamma[1][1][1] = l.y;
        return c;
    }

    // Acceleration of a geodesic through p with chart velocity v:
    // the right-hand side of x'' = -Gamma(x)(x', x'), expanded for the
    // conformal symbols. Hot path of the integrator; no box check here.
    Vec2 geodesic_accel(Vec2 p, Vec2 v) const {
        const Vec2 l = grad_lambda(p);
        const double d = v.x * v.x - v.y * v.y;
        const double m = 2.0 * v.x * v.y;
        return {-l.x * d - l.y * m, l.y * d - l.x * m};
    }

    // Supremum of lambda over the closed disk B_r(c). Exact for the builtin
    // kinds; for polynomials the subharmonic maximum principle puts the max on
    // the boundary circle, which is sampled and padded with a gradient bound.
    double lambda_max_disk(Vec2 c, double r) const {
        switch (kind_) {
            case MetricKind::Euclidean:
                return 0.0;
            case MetricKind::RadialQuadratic: {
                const double reach = norm(c) + r;
                return 0.5 * reach * reach;
            }
            case MetricKind::Polynomial: {
                const int n = 128;
                double best = lambda(c);
                for (int k = 0; k < n; ++k) {
                    const double a = kTwoPi * k / n;
                    best = std::max(best, lambda({c.x + r * std::cos(a), c.y + r * std::sin(a)}));
                }
                return best + poly_grad_bound_ * (kPi * r / n);
            }
        }
        return 0.0;
    }

  private:
    ConformalMetric(MetricKind kind, std::vector<double> coeffs, Box box)
        : kind_(kind), coeffs_(std::move(coeffs)), box_(box) {
        if (box_.xmin >= box_.xmax || box_.ymin >= box_.ymax) {
            throw ValidationError("domain_box: degenerate rectangle");
        }
        if (kind_ == MetricKind::Polynomial) {
            init_polynomial();
        }
        validate_curvature_sign();
    }

    void init_polynomial() {
        // Map the flat list to (i, j, c) monomials, graded lex order.
        std::size_t idx = 0;
        for (int deg = 0; idx < coeffs_.size(); ++deg) {
            for (int i = deg; i >= 0 && idx < coeffs_.size(); --i, ++idx) {
                terms_.push_back({i, deg - i, coeffs_[idx]});
            }
            if (idx == coeffs_.size() && static_cast<std::size_t>((deg + 1) * (deg + 2) / 2) != coeffs_.size()) {
                throw ValidationError("polynomial coeffs: length must be a triangular number (1, 3, 6, 10, ...)");
            }
        }
        if (coeffs_.empty()) {
            throw ValidationError("polynomial coeffs: empty coefficient list");
        }
        const double rbox = box_.corner_radius();
        double bound = 0.0;
        for (const auto& t : terms_) {
            const int d = t.i + t.j;
            if (d > 0) bound += std::abs(t.c) * d * std::pow(rbox, d - 1);
        }
        poly_grad_bound_ = bound;
    }

    // K <= 0 for a conformal metric is exactly: lambda subharmonic. Sampled on
    // a 101x101 grid over the domain box, with finiteness of lambda and its
    // derivatives checked at the same points.
    void validate_curvature_sign() const {
        const int n = 101;
        for (int iy = 0; iy < n; ++iy) {
            for (int ix = 0; ix < n; ++ix) {
                const Vec2 p{box_.xmin + box_.width() * ix / (n - 1),
                             box_.ymin + box_.height() * iy / (n - 1)};
                const double lap = laplacian_lambda(p);
                const double lam = lambda(p);
                const Vec2 gl = grad_lambda(p);
                if (!std::isfinite(lam) || !finite(gl) || !std::isfinite(lap)) {
                    throw ValidationError("metric validation: non-finite lambda data at grid point");
                }
                if (lap < -1e-12) {
                    throw ValidationError(
                        "metric validation: Laplacian of lambda is " + std::to_string(lap) +
                        " < -1e-12 at (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                        "); curvature would be positive");
                }
            }
        }
    }

    // d^(dx+dy) lambda / dx^dx dy^dy for the polynomial kind.
    double poly_eval(Vec2 p, int dx, int dy) const {
        double sum = 0.0;
        for (const auto& t : terms_) {
            if (t.i < dx || t.j < dy) continue;
            double f = t.c;
            for (int k = 0; k < dx; ++k) f *= (t.i - k);
            for (int k = 0; k < dy; ++k) f *= (t.j - k);
            sum += f * std::pow(p.x, t.i - dx) * std::pow(p.y, t.j - dy);
        }
        return sum;
    }

    struct Term {
        int i, j;
        double c;
    };

    MetricKind kind_;
    std::vector<double> coeffs_;
    std::vector<Term> terms_;
    double poly_grad_bound_ = 0.0;
    Box box_;
};

// A tangent vector anchored at a base point, with its g-norm cached.
struct TangentVector {
    Vec2 base;
    Vec2 components;
    double g_norm = 0.0;
};

inline TangentVector make_tangent(const ConformalMetric& metric, Vec2 base, Vec2 components) {
    metric.require_inside(base, "tangent base");
    if (!finite(components)) throw DomainError("tangent components must be finite");
    return {base, components, metric.g_norm(base, components)};
}

}  // namespace hproj
