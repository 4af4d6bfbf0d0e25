#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "hproj/errors.hpp"
#include "hproj/geodesic.hpp"
#include "hproj/metric.hpp"
#include "hproj/vec2.hpp"

namespace hproj {

// Positively oriented g-orthonormal frame at the pencil base point,
// given by chart components.
struct Frame {
    Vec2 e1;
    Vec2 e2;
};

// One line of the pencil: the complete geodesic through the base point with
// initial velocity v_theta, integrated in both directions up to the extent
// (or the domain box, whichever cuts first). eval(t) interpolates the
// arc-length parametrization; t = 0 is the base point.
struct GeodesicLine {
    double theta = 0.0;
    double t_min = 0.0;
    double t_max = 0.0;
    GeodesicPath forward;   // t in [0, t_max]
    GeodesicPath backward;  // parametrized by -t in [0, -t_min]
    bool clipped_by_box = false;

    PosVel eval(double t) const {
        if (t >= 0.0) return forward.eval(t);
        PosVel pv = backward.eval(-t);
        pv.vel = -pv.vel;  // backward path runs along -v_theta
        return pv;
    }
};

// The pencil of lines l_theta through a base point p. Immutable after
// construction; line() is a pure function and instances may be shared across
// any number of workers.
class LinePencil {
  public:
    struct Options {
        double extent = 8.0;        // max |s| along each line
        double line_step = kDefaultStep;
        std::optional<Frame> frame; // default: normalized chart axes at p
    };

    LinePencil(ConformalMetric metric, Vec2 p) : LinePencil(std::move(metric), p, Options{8.0, kDefaultStep, std::nullopt}) {}

    LinePencil(ConformalMetric metric, Vec2 p, Options opt)
        : metric_(std::move(metric)), p_(p), extent_(opt.extent), line_step_(opt.line_step) {
        metric_.require_inside(p_, "pencil base");
        if (extent_ <= 0.0) throw DomainError("pencil: extent must be positive");
        if (line_step_ <= 0.0) throw DomainError("pencil: line step must be positive");
        if (opt.frame) {
            frame_ = *opt.frame;
        } else {
            const double inv = 1.0 / metric_.conformal_factor(p_);
            frame_ = {{inv, 0.0}, {0.0, inv}};
        }
        const double g11 = metric_.inner(p_, frame_.e1, frame_.e1);
        const double g22 = metric_.inner(p_, frame_.e2, frame_.e2);
        const double g12 = metric_.inner(p_, frame_.e1, frame_.e2);
        if (std::abs(g11 - 1.0) > 1e-12 || std::abs(g22 - 1.0) > 1e-12 || std::abs(g12) > 1e-12) {
            throw ValidationError("pencil frame is not g-orthonormal");
        }
        if (cross(frame_.e1, frame_.e2) <= 0.0) {
            throw ValidationError("pencil frame is not positively oriented");
        }
    }

    const ConformalMetric& metric() const { return metric_; }
    Vec2 base() const { return p_; }
    const Frame& frame() const { return frame_; }
    double extent() const { return extent_; }
    double line_step() const { return line_step_; }

    // Chart components of v_theta = cos(theta) e1 + sin(theta) e2.
    Vec2 direction(double theta) const {
        return std::cos(theta) * frame_.e1 + std::sin(theta) * frame_.e2;
    }

    TangentVector tangent(Vec2 components) const {
        return make_tangent(metric_, p_, components);
    }

    void require_based(const TangentVector& w) const {
        if (norm(w.base - p_) > 1e-12) {
            throw DomainError("tangent vector is not based at the pencil point");
        }
    }

    // Angle of w against e1 in [0, 2*pi), measured in the frame. Conformal
    // metrics make this the ordinary chart angle for the default frame.
    double frame_angle(const TangentVector& w) const {
        if (w.g_norm <= 0.0) throw DomainError("frame_angle: zero vector");
        const double a = metric_.inner(p_, w.components, frame_.e1);
        const double b = metric_.inner(p_, w.components, frame_.e2);
        return wrap_angle(std::atan2(b, a));
    }

    // theta with g(w, v_theta) = 0 and {w, v_theta} positively oriented;
    // equals arg(w) + pi/2 modulo 2*pi.
    double theta_perp(const TangentVector& w) const {
        return wrap_angle(frame_angle(w) + kPi / 2.0);
    }

    GeodesicLine line(double theta) const { return line(theta, extent_); }

    // Build a line up to min(extent_hint, extent). Hints keep inner loops
    // cheap when the caller knows every foot lies close to the base point.
    GeodesicLine line(double theta, double extent_hint) const {
        const double ext = std::clamp(extent_hint, 10.0 * line_step_, extent_);
        GeodesicLine l;
        l.theta = theta;
        const Vec2 dir = direction(theta);
        detail::shoot_into(metric_, p_, dir, ext, line_step_, l.forward);
        detail::shoot_into(metric_, p_, -dir, ext, line_step_, l.backward);
        l.t_max = l.forward.length();
        l.t_min = -l.backward.length();
        l.clipped_by_box = l.forward.truncated || l.backward.truncated;
        return l;
    }

  private:
    ConformalMetric metric_;
    Vec2 p_;
    Frame frame_;
    double extent_;
    double line_step_;
};

struct ProjectionResult {
    double theta = 0.0;
    double s = 0.0;        // signed foot parameter along l_theta
    Vec2 foot;
    double dist = 0.0;     // d(q, l_theta)
    double offset = 0.0;   // signed normal coordinate; dist = |offset|
    int iterations = 0;
};

struct ProjectOptions {
    double tol = 1e-12;    // chart residual at q
    int max_iter = 60;
    std::optional<std::pair<double, double>> warm;  // (s, offset) start
};

namespace detail {

// Fermi coordinates of q with respect to the line: solve
//   exp_{l(t)}( r * n(t) ) = q
// for (t, r), where n is the unit normal field along the line. On a Hadamard
// surface this map is a global diffeomorphism, the solution is unique, and it
// is exactly the orthogonal projection: foot l(t), distance |r|. A damped
// quasi-Newton iteration with the left column of the Jacobian by finite
// differences and the right column free (it is the normal geodesic's end
// velocity) converges in a handful of steps.
class FermiSolver {
  public:
    FermiSolver(const ConformalMetric& metric, const GeodesicLine& line)
        : metric_(metric), line_(line) {}

    struct Solution {
        double t = 0.0;
        double r = 0.0;
        Vec2 foot;
        int iterations = 0;
        double residual = 0.0;
    };

    Solution solve(Vec2 q, double t0, double r0, double tol, int max_iter) {
        double t = std::clamp(t0, line_.t_min, line_.t_max);
        double r = r0;
        Vec2 endpoint, dn_dr;
        eval_normal(t, r, &endpoint, &dn_dr);
        Vec2 f = endpoint - q;
        double fn = norm(f);
        int it = 0;
        const double step_floor = 1e-16;
        while (fn > tol && it < max_iter) {
            ++it;
            // Jacobian: dN/dt by one-sided finite difference, dN/dr exact.
            const double dt = (t + 1e-6 <= line_.t_max) ? 1e-6 : -1e-6;
            Vec2 ep2, unused;
            eval_normal(t + dt, r, &ep2, &unused);
            const Vec2 jt = (ep2 - endpoint) / dt;
            const Vec2 jr = dn_dr;
            const double det = jt.x * jr.y - jt.y * jr.x;
            if (std::abs(det) < 1e-30) break;
            // Cramer's rule for J * d = -f with J = [jt | jr].
            const double dt_step = (-f.x * jr.y + f.y * jr.x) / det;
            const double dr_step = (-jt.x * f.y + jt.y * f.x) / det;
            double scale = 1.0;
            for (int damp = 0; damp < 30; ++damp) {
                const double tn = std::clamp(t + scale * dt_step, line_.t_min, line_.t_max);
                const double rn = r + scale * dr_step;
                Vec2 ep_new, dn_new;
                eval_normal(tn, rn, &ep_new, &dn_new);
                const Vec2 fnew = ep_new - q;
                const double fnn = norm(fnew);
                if (fnn < fn || scale * (std::abs(dt_step) + std::abs(dr_step)) < step_floor) {
                    t = tn;
                    r = rn;
                    endpoint = ep_new;
                    dn_dr = dn_new;
                    f = fnew;
                    fn = fnn;
                    break;
                }
                scale *= 0.5;
            }
            if (scale * (std::abs(dt_step) + std::abs(dr_step)) < step_floor) break;
        }
        Solution sol;
        sol.t = t;
        sol.r = r;
        sol.foot = line_.eval(t).pos;
        sol.iterations = it;
        sol.residual = fn;
        return sol;
    }

  private:
    // Endpoint of the normal geodesic exp_{l(t)}(r n(t)) and its derivative
    // in r (the geodesic's end velocity, sign-adjusted).
    void eval_normal(double t, double r, Vec2* endpoint, Vec2* dn_dr) {
        const PosVel base = line_.eval(t);
        const Vec2 n = rot90(base.vel);  // g-unit normal: conformal rotation
        const double ar = std::abs(r);
        if (ar < 1e-15) {
            *endpoint = base.pos;
            *dn_dr = n;
            return;
        }
        const Vec2 dir = (r > 0.0) ? n : -n;
        shoot_into(metric_, base.pos, dir, ar, normal_step(ar), scratch_);
        *endpoint = scratch_.endpoint();
        const Vec2 vend = scratch_.end_velocity();
        *dn_dr = (r > 0.0) ? vend : -vend;
    }

    double normal_step(double length) const {
        // Keep at least 8 steps on short normals so RK4 error stays tiny.
        return std::min(line_.forward.step, std::max(length / 8.0, 1e-6));
    }

    const ConformalMetric& metric_;
    const GeodesicLine& line_;
    GeodesicPath scratch_;
};

}  // namespace detail

// Orthogonal projection of q onto the given pencil line: the unique foot of
// the strictly convex distance-to-line function. Throws ExtentError when the
// foot lands on the truncated end of the line.
inline ProjectionResult project(const LinePencil& pencil, const GeodesicLine& line, Vec2 q,
                                const ProjectOptions& opt = {}) {
    const ConformalMetric& metric = pencil.metric();
    metric.require_inside(q, "project");
    double t0, r0;
    if (opt.warm) {
        t0 = opt.warm->first;
        r0 = opt.warm->second;
    } else {
        // Flat-chart guess, rescaled by the conformal factor at the base.
        // r > 0 on the rot90(v_theta) side, matching the solver's normal field.
        const Vec2 d = q - pencil.base();
        const Vec2 u = pencil.direction(line.theta);
        const double ef = pencil.metric().conformal_factor(pencil.base()) / norm(u);
        t0 = dot(d, u) * ef;
        r0 = cross(u, d) * ef;
    }
    detail::FermiSolver solver(metric, line);
    const auto sol = solver.solve(q, t0, r0, opt.tol * (1.0 + norm(q)), opt.max_iter);
    if (sol.residual > opt.tol * (1.0 + norm(q)) * 10.0) {
        throw ConvergenceError("project: Fermi iteration did not converge", sol.residual);
    }
    const double margin = 1e-7;
    if (sol.t >= line.t_max - margin || sol.t <= line.t_min + margin) {
        throw ExtentError(line.clipped_by_box
                              ? "project: foot at domain-box truncation of the line"
                              : "project: foot at line extent; enlarge extent",
                          sol.t);
    }
    ProjectionResult res;
    res.theta = line.theta;
    res.s = sol.t;
    res.foot = sol.foot;
    res.offset = sol.r;
    res.dist = std::abs(sol.r);
    res.iterations = sol.iterations;
    return res;
}

inline ProjectionResult project(const LinePencil& pencil, double theta, Vec2 q,
                                const ProjectOptions& opt = {}) {
    // Feet satisfy |s| <= d(p, q) (the foot map is nonexpansive and fixes p),
    // so a line built out to a distance bound plus margin always contains the
    // foot strictly inside.
    const double hint = segment_length_bound(pencil.metric(), pencil.base(), q) * 1.05 + 0.25;
    const GeodesicLine line = pencil.line(theta, hint);
    return project(pencil, line, q, opt);
}

// pi(theta, w): signed foot parameter of exp_p(w) on l_theta.
inline double pi_theta(const LinePencil& pencil, double theta, const TangentVector& w,
                       double shoot_step = kDefaultStep) {
    pencil.require_based(w);
    const Vec2 q = exp_map(pencil.metric(), w, shoot_step);
    const GeodesicLine line = pencil.line(theta, w.g_norm * 1.5 + 0.25);
    return project(pencil, line, q).s;
}

// Central finite difference of pi(theta, w) in theta.
inline double dpi_dtheta(const LinePencil& pencil, double theta, const TangentVector& w,
                         double h = 1e-4) {
    if (h < 1e-6 || h > 1e-2) throw DomainError("dpi_dtheta: step must lie in [1e-6, 1e-2]");
    pencil.require_based(w);
    const Vec2 q = exp_map(pencil.metric(), w);
    const double hint = w.g_norm * 1.5 + 0.25;
    const double sp = project(pencil, pencil.line(theta + h, hint), q).s;
    const double sm = project(pencil, pencil.line(theta - h, hint), q).s;
    return (sp - sm) / (2.0 * h);
}

inline double d2pi_dtheta2(const LinePencil& pencil, double theta, const TangentVector& w,
                           double h = 1e-4) {
    if (h < 1e-6 || h > 1e-2) throw DomainError("d2pi_dtheta2: step must lie in [1e-6, 1e-2]");
    pencil.require_based(w);
    const Vec2 q = exp_map(pencil.metric(), w);
    const double hint = w.g_norm * 1.5 + 0.25;
    const double sp = project(pencil, pencil.line(theta + h, hint), q).s;
    const double s0 = project(pencil, pencil.line(theta, hint), q).s;
    const double sm = project(pencil, pencil.line(theta - h, hint), q).s;
    return (sp - 2.0 * s0 + sm) / (h * h);
}

// Circular separation of theta from the *line* direction theta0, i.e. the
// distance to the nearest of theta0 and theta0 + pi.
inline double line_angle_separation(double theta, double theta0) {
    double d = wrap_angle(theta - theta0);
    d = std::min(d, kTwoPi - d);         // distance to theta0
    return std::min(d, std::abs(kPi - wrap_angle(theta - theta0)));
}

// lim_{t -> 0+} pi(theta, t w)/t by Richardson extrapolation over t = 2^{-k}.
// Requires theta separated from the orthogonal line direction.
inline double small_scale_slope(const LinePencil& pencil, double theta, const TangentVector& w,
                                int k_min = 4, int k_max = 12) {
    if (w.g_norm <= 0.0) throw DomainError("small_scale_slope: zero vector");
    pencil.require_based(w);
    if (line_angle_separation(theta, pencil.theta_perp(w)) < 1e-3) {
        throw DomainError("small_scale_slope: theta too close to theta_perp");
    }
    const int n = k_max - k_min + 1;
    std::vector<double> row(n);
    const GeodesicLine line = pencil.line(theta, w.g_norm * std::pow(0.5, k_min) * 1.5 + 0.1);
    for (int i = 0; i < n; ++i) {
        const double t = std::pow(0.5, k_min + i);
        const TangentVector tw = pencil.tangent(t * w.components);
        const Vec2 q = exp_map(pencil.metric(), tw);
        row[i] = project(pencil, line, q).s / t;
    }
    // Neville table for nodes halving toward zero: eliminates successive
    // powers of t from the expansion of pi(theta, t w)/t.
    std::vector<double> prev = row, cur(n);
    for (int j = 1; j < n; ++j) {
        const double pow2 = std::pow(2.0, j);
        for (int i = j; i < n; ++i) {
            cur[i] = (pow2 * prev[i] - prev[i - 1]) / (pow2 - 1.0);
        }
        std::swap(prev, cur);
    }
    return prev[n - 1];
}

struct EpsScanResult {
    double eps_star = 0.0;        // largest verified half-width
    double scanned_up_to = 0.0;   // end of the scan grid
    bool hit_scan_limit = false;  // bound never failed inside the grid
    double first_violation_theta = 0.0;
    double first_violation_value = 0.0;
};

struct EpsScanOptions {
    double delta_step = 0.005;
    double delta_max = 1.2;
    double slack = 1e-3;   // tolerance added to both sides of the bound
    double fd_step = 1e-4;
};

// Empirical width of the Lemma-style derivative window: scan outward from
// theta_perp(w) until -|w| <= d pi/d theta <= -|w|/2 (with slack) first
// fails on either side.
inline EpsScanResult eps_scan(const LinePencil& pencil, const TangentVector& w,
                              const EpsScanOptions& opt = {}) {
    const double tp = pencil.theta_perp(w);
    const double lo_bound = -w.g_norm - opt.slack;
    const double hi_bound = -0.5 * w.g_norm + opt.slack;
    EpsScanResult res;
    res.scanned_up_to = opt.delta_max;
    double last_ok = 0.0;
    for (double d = opt.delta_step; d <= opt.delta_max + 1e-12; d += opt.delta_step) {
        for (const double side : {-1.0, 1.0}) {
            const double theta = tp + side * d;
            const double v = dpi_dtheta(pencil, theta, w, opt.fd_step);
            if (v < lo_bound || v > hi_bound) {
                res.eps_star = last_ok;
                res.first_violation_theta = theta;
                res.first_violation_value = v;
                return res;
            }
        }
        last_ok = d;
    }
    res.eps_star = last_ok;
    res.hit_scan_limit = true;
    return res;
}

}  // namespace hproj
