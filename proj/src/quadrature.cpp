#include "mtebounds/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "mtebounds/errors.hpp"

namespace mtebounds {

namespace {

// Kronrod 15-point abscissae (non-negative half) and weights; the embedded
// 7-point Gauss rule uses the odd-indexed abscissae.
const double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                       0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                       0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                       0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
const double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                       0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                       0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                       0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
const double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, err;
    bool operator<(const Segment& o) const { return err < o.err; }
};

Segment gk15(const Integrand& f, double a, double b)
{
    double center = 0.5 * (a + b);
    double half = 0.5 * (b - a);
    double fc = f(center);
    double resk = fc * wgk[7];
    double resg = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        double dx = half * xgk[j];
        double f1 = f(center - dx);
        double f2 = f(center + dx);
        resk += wgk[j] * (f1 + f2);
        if (j % 2 == 1) resg += wg[j / 2] * (f1 + f2);
    }
    double value = resk * half;
    double err = std::abs((resk - resg) * half);
    return {a, b, value, err};
}

QuadratureResult integrate_finite(const Integrand& f, double a, double b, const QuadratureOptions& opt)
{
    std::priority_queue<Segment> heap;
    Segment first = gk15(f, a, b);
    heap.push(first);
    double total = first.value;
    double err = first.err;
    int evaluations = 15;
    int intervals = 1;
    while (err > std::max(opt.absTol, opt.relTol * std::abs(total))) {
        if (intervals >= opt.maxIntervals) {
            std::ostringstream msg;
            msg << "adaptive quadrature did not converge on [" << a << ", " << b << "]: achieved error "
                << err << " after " << evaluations << " evaluations";
            throw NumericalError(msg.str());
        }
        Segment worst = heap.top();
        heap.pop();
        double mid = 0.5 * (worst.a + worst.b);
        Segment left = gk15(f, worst.a, mid);
        Segment right = gk15(f, mid, worst.b);
        evaluations += 30;
        ++intervals;
        total += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        // Refresh the sums occasionally to avoid drift from cancellation.
        if (intervals % 64 == 0) {
            std::priority_queue<Segment> copy = heap;
            total = 0.0;
            err = 0.0;
            while (!copy.empty()) {
                total += copy.top().value;
                err += copy.top().err;
                copy.pop();
            }
        }
        if (mid <= worst.a || mid >= worst.b) break;  // interval no longer splittable
    }
    return {total, err, evaluations};
}

}  // namespace

QuadratureResult integrate(const Integrand& f, double a, double b, const QuadratureOptions& options)
{
    if (std::isnan(a) || std::isnan(b)) throw ConfigError("integrate: NaN limit");
    if (a == b) return {};
    if (a > b) {
        QuadratureResult r = integrate(f, b, a, options);
        r.value = -r.value;
        return r;
    }
    const bool infA = std::isinf(a);
    const bool infB = std::isinf(b);
    if (!infA && !infB) return integrate_finite(f, a, b, options);
    if (infA && infB) {
        // x = t / (1 - t^2), t in (-1, 1)
        auto g = [&f](double t) {
            double d = 1.0 - t * t;
            if (d <= 0.0) return 0.0;
            double x = t / d;
            double jac = (1.0 + t * t) / (d * d);
            double v = f(x) * jac;
            return std::isfinite(v) ? v : 0.0;
        };
        return integrate_finite(g, -1.0, 1.0, options);
    }
    if (infB) {
        // x = a + t / (1 - t), t in [0, 1)
        auto g = [&f, a](double t) {
            double d = 1.0 - t;
            if (d <= 0.0) return 0.0;
            double v = f(a + t / d) / (d * d);
            return std::isfinite(v) ? v : 0.0;
        };
        return integrate_finite(g, 0.0, 1.0, options);
    }
    // x = b - t / (1 - t), t in [0, 1)
    auto g = [&f, b](double t) {
        double d = 1.0 - t;
        if (d <= 0.0) return 0.0;
        double v = f(b - t / d) / (d * d);
        return std::isfinite(v) ? v : 0.0;
    };
    return integrate_finite(g, 0.0, 1.0, options);
}

double bisect_increasing(const std::function<double(double)>& g, double lo, double hi, double tol, int maxIter)
{
    if (!(lo < hi)) throw ConfigError("bisect_increasing: need lo < hi");
    double width = hi - lo;
    for (int k = 0; k < 200 && g(lo) > 0.0; ++k) {
        lo -= width;
        width *= 2.0;
    }
    width = hi - lo;
    for (int k = 0; k < 200 && g(hi) < 0.0; ++k) {
        hi += width;
        width *= 2.0;
    }
    if (g(lo) > 0.0 || g(hi) < 0.0) throw NumericalError("bisect_increasing: could not bracket the root");
    for (int it = 0; it < maxIter; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (g(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= tol * std::max(1.0, std::abs(mid))) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace mtebounds
