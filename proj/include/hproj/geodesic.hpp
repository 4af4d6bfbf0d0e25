#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hproj/errors.hpp"
#include "hproj/metric.hpp"
#include "hproj/vec2.hpp"

namespace hproj {

constexpr double kDefaultStep = 1e-3;

struct GeodesicSample {
    double t;   // arc-length parameter
    Vec2 pos;
    Vec2 vel;   // chart velocity, g-unit along an arc-length geodesic
    Vec2 acc;   // geodesic equation right-hand side at (pos, vel)
};

struct PosVel {
    Vec2 pos;
    Vec2 vel;
};

// Arc-length-parametrized geodesic as produced by the RK4 integrator.
// Samples are spaced `step` apart except for one final partial step that
// lands exactly on the requested length. Positions between samples come from
// quintic Hermite interpolation (position, velocity and acceleration match at
// both ends), so lookup error is O(step^6) and stays far below solver
// tolerances even at coarse steps.
struct GeodesicPath {
    std::vector<GeodesicSample> samples;
    double step = kDefaultStep;
    bool truncated = false;        // stopped at the domain-box boundary
    double requested_length = 0.0;

    double length() const { return samples.empty() ? 0.0 : samples.back().t; }
    Vec2 endpoint() const { return samples.back().pos; }
    Vec2 end_velocity() const { return samples.back().vel; }

    PosVel eval(double t) const {
        const double tmax = length();
        if (t <= 0.0) return {samples.front().pos, samples.front().vel};
        if (t >= tmax) return {samples.back().pos, samples.back().vel};
        std::size_t i = static_cast<std::size_t>(t / step);
        if (i >= samples.size() - 1) i = samples.size() - 2;
        while (i > 0 && samples[i].t > t) --i;
        while (i + 2 < samples.size() && samples[i + 1].t < t) ++i;
        return hermite(samples[i], samples[i + 1], t);
    }

    static PosVel hermite(const GeodesicSample& a, const GeodesicSample& b, double t) {
        const double h = b.t - a.t;
        const double u = (t - a.t) / h;
        const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
        // Quintic Hermite basis on [0, 1].
        const double h00 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
        const double h10 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
        const double h20 = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
        const double h01 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
        const double h11 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
        const double h21 = 0.5 * (u3 - 2.0 * u4 + u5);
        // d/du of the basis.
        const double g00 = -30.0 * u2 + 60.0 * u3 - 30.0 * u4;
        const double g10 = 1.0 - 18.0 * u2 + 32.0 * u3 - 15.0 * u4;
        const double g20 = 0.5 * (2.0 * u - 9.0 * u2 + 12.0 * u3 - 5.0 * u4);
        const double g01 = 30.0 * u2 - 60.0 * u3 + 30.0 * u4;
        const double g11 = -12.0 * u2 + 28.0 * u3 - 15.0 * u4;
        const double g21 = 0.5 * (3.0 * u2 - 8.0 * u3 + 5.0 * u4);
        const double h2 = h * h;
        PosVel out;
        out.pos = h00 * a.pos + (h10 * h) * a.vel + (h20 * h2) * a.acc +
                  h01 * b.pos + (h11 * h) * b.vel + (h21 * h2) * b.acc;
        out.vel = (1.0 / h) * (g00 * a.pos + (g10 * h) * a.vel + (g20 * h2) * a.acc +
                               g01 * b.pos + (g11 * h) * b.vel + (g21 * h2) * b.acc);
        return out;
    }
};

namespace detail {

struct State {
    Vec2 x;
    Vec2 v;
};

inline State rk4_step(const ConformalMetric& m, const State& s, double h) {
    const Vec2 k1x = s.v;
    const Vec2 k1v = m.geodesic_accel(s.x, s.v);
    const Vec2 k2x = s.v + (0.5 * h) * k1v;
    const Vec2 k2v = m.geodesic_accel(s.x + (0.5 * h) * k1x, k2x);
    const Vec2 k3x = s.v + (0.5 * h) * k2v;
    const Vec2 k3v = m.geodesic_accel(s.x + (0.5 * h) * k2x, k3x);
    const Vec2 k4x = s.v + h * k3v;
    const Vec2 k4v = m.geodesic_accel(s.x + h * k3x, k4x);
    return {s.x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
            s.v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)};
}

// Integrate from p with g-unit chart velocity `unit`, stopping at the domain
// box. Never throws on truncation; the caller decides.
inline void shoot_into(const ConformalMetric& metric, Vec2 p, Vec2 unit, double length,
                       double step, GeodesicPath& out) {
    out.samples.clear();
    out.step = step;
    out.truncated = false;
    out.requested_length = length;
    State s{p, unit};
    out.samples.push_back({0.0, s.x, s.v, metric.geodesic_accel(s.x, s.v)});
    if (length <= 0.0) return;
    const std::size_t nfull = static_cast<std::size_t>(length / step);
    out.samples.reserve(nfull + 2);
    double t = 0.0;
    for (std::size_t k = 1; k <= nfull; ++k) {
        const double tk = static_cast<double>(k) * step;
        const State next = rk4_step(metric, s, tk - t);
        if (!metric.inside_integration(next.x)) {
            out.truncated = true;
            return;
        }
        s = next;
        t = tk;
        out.samples.push_back({t, s.x, s.v, metric.geodesic_accel(s.x, s.v)});
    }
    if (length - t > 1e-15 * std::max(1.0, length)) {
        const State next = rk4_step(metric, s, length - t);
        if (!metric.inside_integration(next.x)) {
            out.truncated = true;
            return;
        }
        out.samples.push_back({length, next.x, next.v, metric.geodesic_accel(next.x, next.v)});
    }
}

}  // namespace detail

// Unit-speed geodesic from p in the direction of `dir` (any nonzero chart
// vector; normalized internally), integrated for the given arc length.
// Throws TruncationError with the exit parameter if the path leaves the
// domain box first.
inline GeodesicPath shoot(const ConformalMetric& metric, Vec2 p, Vec2 dir, double length,
                          double step = kDefaultStep) {
    metric.require_inside(p, "shoot");
    if (length < 0.0) throw DomainError("shoot: negative length");
    if (step <= 0.0) throw DomainError("shoot: step must be positive");
    const double gn = metric.g_norm(p, dir);
    if (gn < 1e-14) throw DomainError("shoot: zero direction");
    GeodesicPath path;
    detail::shoot_into(metric, p, dir / gn, length, step, path);
    if (path.truncated) {
        throw TruncationError("shoot: geodesic left the domain box", path.length());
    }
    return path;
}

// exp_p(w): endpoint of the unit-speed geodesic in direction w after arc
// length |w|_g. A vector with |w|_g < 1e-14 maps to p exactly.
inline Vec2 exp_map(const ConformalMetric& metric, const TangentVector& w,
                    double step = kDefaultStep) {
    if (w.g_norm < 1e-14) return w.base;
    return shoot(metric, w.base, w.components, w.g_norm, step).endpoint();
}

inline Vec2 exp_map(const ConformalMetric& metric, Vec2 p, Vec2 components,
                    double step = kDefaultStep) {
    return exp_map(metric, make_tangent(metric, p, components), step);
}

struct BvpOptions {
    double step = kDefaultStep;
    double tol = 1e-11;    // chart-coordinate miss at the target
    int max_iter = 200;
};

// Upper bound on d(p, q): the g-length of the straight chart segment,
// by Simpson quadrature of e^{lambda} along it. Any path dominates the
// geodesic, so this always bounds the distance from above.
inline double segment_length_bound(const ConformalMetric& metric, Vec2 p, Vec2 q) {
    const int n = 64;
    const Vec2 d = q - p;
    double sum = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double u = static_cast<double>(k) / n;
        const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        sum += w * metric.conformal_factor(p + u * d);
    }
    return sum * norm(d) / (3.0 * n);
}

// Two-point boundary value solver: finds the unit-speed geodesic from p
// through q by a bracketed secant iteration on the launch angle (the side on
// which a ray passes q is monotone in the angle on a Hadamard surface), with
// the arc length at q polished along the ray. Scratch buffers are reused
// across solves; one instance per worker.
class TwoPointSolver {
  public:
    explicit TwoPointSolver(const ConformalMetric& metric, BvpOptions opt = {})
        : metric_(metric), opt_(opt) {}

    struct Result {
        double length = 0.0;   // d(p, q)
        Vec2 direction;        // g-unit chart velocity at p
        double miss = 0.0;     // chart distance from the final point to q
        int iterations = 0;
    };

    Result solve(Vec2 p, Vec2 q) {
        metric_.require_inside(p, "distance");
        metric_.require_inside(q, "distance");
        Result res;
        if (norm(q - p) < 1e-14) {
            res.direction = {0.0, 0.0};
            return res;
        }
        cap_ = segment_length_bound(metric_, p, q) * 1.05 + 4.0 * opt_.step;
        p_ = p;
        q_ = q;
        iterations_ = 0;

        const double phi0 = std::atan2(q.y - p.y, q.x - p.x);
        Probe mid = probe(phi0);
        if (mid.miss <= opt_.tol) return finish(mid, phi0);

        // Expand a sign-changing bracket around the chart-angle guess.
        double lo = phi0, hi = phi0;
        Probe plo = mid, phi_probe = mid;
        bool bracketed = false;
        for (double d = 0.05; d <= 3.3; d *= 2.0) {
            lo = phi0 - d;
            hi = phi0 + d;
            plo = probe(lo);
            phi_probe = probe(hi);
            if (plo.side == 0.0) return finish(plo, lo);
            if (phi_probe.side == 0.0) return finish(phi_probe, hi);
            if ((plo.side < 0.0) != (phi_probe.side < 0.0)) {
                bracketed = true;
                break;
            }
        }
        if (!bracketed) {
            // Coarse sweep fallback; picks the best side change over the circle.
            double best_phi = phi0;
            double best_miss = mid.miss;
            const int n = 64;
            for (int k = 0; k < n; ++k) {
                const double a = phi0 + kTwoPi * k / n;
                const Probe pr = probe(a);
                if (pr.miss < best_miss) {
                    best_miss = pr.miss;
                    best_phi = a;
                }
            }
            lo = best_phi - kTwoPi / n;
            hi = best_phi + kTwoPi / n;
            plo = probe(lo);
            phi_probe = probe(hi);
            if ((plo.side < 0.0) == (phi_probe.side < 0.0)) {
                throw ConvergenceError("distance: failed to bracket launch angle", best_miss);
            }
        }

        // Illinois-damped regula falsi on the signed side of q.
        Probe best = plo.miss < phi_probe.miss ? plo : phi_probe;
        double best_angle = plo.miss < phi_probe.miss ? lo : hi;
        double flo = plo.side, fhi = phi_probe.side;
        while (iterations_ < opt_.max_iter) {
            double phi;
            if (std::abs(fhi - flo) > 0.0) {
                phi = hi - fhi * (hi - lo) / (fhi - flo);
                if (!(phi > std::min(lo, hi) && phi < std::max(lo, hi))) {
                    phi = 0.5 * (lo + hi);
                }
            } else {
                phi = 0.5 * (lo + hi);
            }
            const Probe pr = probe(phi);
            if (pr.miss < best.miss) {
                best = pr;
                best_angle = phi;
            }
            if (pr.miss <= opt_.tol) return finish(pr, phi);
            if ((pr.side < 0.0) == (flo < 0.0)) {
                lo = phi;
                flo = pr.side;
                fhi *= 0.5;  // Illinois trick: keep the stale end honest
            } else {
                hi = phi;
                fhi = pr.side;
                flo *= 0.5;
            }
            if (std::abs(hi - lo) < 1e-15) break;
        }
        if (best.miss <= opt_.tol * 10.0) return finish(best, best_angle);
        throw ConvergenceError("distance: launch-angle iteration did not converge", best.miss);
    }

  private:
    struct Probe {
        double t_closest = 0.0;
        double miss = 0.0;
        double side = 0.0;  // sign of cross(velocity, q - closest point)
        Vec2 dir_unit;
    };

    Probe probe(double phi) {
        ++iterations_;
        const Vec2 unit = (1.0 / metric_.conformal_factor(p_)) * Vec2{std::cos(phi), std::sin(phi)};
        detail::shoot_into(metric_, p_, unit, cap_, opt_.step, ray_);
        // Closest sample, then a few Newton steps on d/dt |x(t) - q|^2 using
        // the Hermite interpolant.
        const auto& s = ray_.samples;
        std::size_t kbest = 0;
        double dbest = norm2(s[0].pos - q_);
        for (std::size_t k = 1; k < s.size(); ++k) {
            const double dk = norm2(s[k].pos - q_);
            if (dk < dbest) {
                dbest = dk;
                kbest = k;
            }
        }
        const double t_lo = s[kbest > 0 ? kbest - 1 : 0].t;
        const double t_hi = s[std::min(kbest + 1, s.size() - 1)].t;
        double t = s[kbest].t;
        PosVel pv = ray_.eval(t);
        for (int it = 0; it < 8; ++it) {
            const Vec2 r = pv.pos - q_;
            const double d1 = 2.0 * dot(r, pv.vel);
            const Vec2 acc = metric_.geodesic_accel(pv.pos, pv.vel);
            const double d2 = 2.0 * (dot(pv.vel, pv.vel) + dot(r, acc));
            if (d2 <= 0.0) break;
            double tn = t - d1 / d2;
            tn = std::clamp(tn, t_lo, t_hi);
            if (std::abs(tn - t) < 1e-16 * std::max(1.0, t)) {
                t = tn;
                pv = ray_.eval(t);
                break;
            }
            t = tn;
            pv = ray_.eval(t);
        }
        Probe out;
        out.t_closest = t;
        out.miss = norm(pv.pos - q_);
        out.side = cross(pv.vel, q_ - pv.pos);
        out.dir_unit = unit;
        return out;
    }

    Result finish(const Probe& pr, double /*phi*/) const {
        Result r;
        r.length = pr.t_closest;
        r.direction = pr.dir_unit;
        r.miss = pr.miss;
        r.iterations = iterations_;
        return r;
    }

    const ConformalMetric& metric_;
    BvpOptions opt_;
    Vec2 p_, q_;
    double cap_ = 0.0;
    int iterations_ = 0;
    GeodesicPath ray_;
};

// Geodesic distance d(p, q). Unique minimizer since K <= 0 on a simply
// connected chart.
inline double distance(const ConformalMetric& metric, Vec2 p, Vec2 q, BvpOptions opt = {}) {
    TwoPointSolver solver(metric, opt);
    return solver.solve(p, q).length;
}

// Inverse of exp_p: the tangent vector at p that the geodesic to q starts
// with, scaled to |log|_g = d(p, q).
inline TangentVector log_map(const ConformalMetric& metric, Vec2 p, Vec2 q, BvpOptions opt = {}) {
    TwoPointSolver solver(metric, opt);
    const auto r = solver.solve(p, q);
    return {p, r.length * r.direction, r.length};
}

}  // namespace hproj
