#include "netembed/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "netembed/rng.hpp"

namespace netembed {

std::string family_name(MetricFamily f) {
    switch (f) {
        case MetricFamily::Flat: return "flat";
        case MetricFamily::LinearPullback: return "linear-pullback";
        case MetricFamily::SinePullback: return "sine-pullback";
        case MetricFamily::Conformal: return "conformal";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// MetricField

MetricField MetricField::flat(int n) {
    if (n < 1) throw std::invalid_argument("flat metric: dimension must be >= 1");
    return MetricField(MetricFamily::Flat, n);
}

MetricField MetricField::linear_pullback(const Mat& a) {
    if (a.rows() != a.cols() || a.rows() < 1)
        throw std::invalid_argument("linear pullback: matrix must be square");
    Eigen::FullPivLU<Mat> lu(a);
    if (!lu.isInvertible())
        throw std::invalid_argument("linear pullback: matrix must be invertible");
    MetricField m(MetricFamily::LinearPullback, static_cast<int>(a.rows()));
    m.matrix_ = a;
    m.matrix_inv_ = lu.inverse();
    return m;
}

MetricField MetricField::sine_pullback(const Vec& amplitudes, const Vec& frequencies) {
    if (amplitudes.size() != frequencies.size() || amplitudes.size() < 2)
        throw std::invalid_argument("sine pullback: amplitude/frequency vectors of equal length >= 2");
    // |a_i w_i| <= 0.5 keeps sup |Dphi - I| <= 0.5, so phi is a global diffeomorphism
    double worst = 0.0;
    for (int i = 0; i < amplitudes.size(); ++i)
        worst = std::max(worst, std::abs(amplitudes[i] * frequencies[i]));
    if (worst > 0.5)
        throw std::invalid_argument("sine pullback: max |a_i * w_i| = " + std::to_string(worst) +
                                    " exceeds 0.5");
    MetricField m(MetricFamily::SinePullback, static_cast<int>(amplitudes.size()));
    m.amplitudes_ = amplitudes;
    m.frequencies_ = frequencies;
    return m;
}

MetricField MetricField::conformal(const Vec& coeffs) {
    if (coeffs.size() < 1) throw std::invalid_argument("conformal metric: empty coefficient vector");
    MetricField m(MetricFamily::Conformal, static_cast<int>(coeffs.size()));
    m.coeffs_ = coeffs;
    return m;
}

void MetricField::check_point(const Vec& x) const {
    if (x.size() != n_) throw std::domain_error("chart point has wrong dimension");
    if (!x.allFinite()) throw std::domain_error("chart point has non-finite entries");
}

Mat MetricField::metric(const Vec& x) const {
    check_point(x);
    switch (family_) {
        case MetricFamily::Flat:
            return Mat::Identity(n_, n_);
        case MetricFamily::LinearPullback:
            return matrix_.transpose() * matrix_;
        case MetricFamily::SinePullback: {
            Mat j = pullback_jacobian(x);
            return j.transpose() * j;
        }
        case MetricFamily::Conformal:
            return std::exp(2.0 * coeffs_.dot(x)) * Mat::Identity(n_, n_);
    }
    throw std::logic_error("unreachable");
}

std::vector<Mat> MetricField::metric_derivative(const Vec& x) const {
    check_point(x);
    std::vector<Mat> dg(n_, Mat::Zero(n_, n_));
    if (finite_difference_derivatives) {
        const double h = 1e-5;
        Vec xp = x, xm = x;
        for (int k = 0; k < n_; ++k) {
            xp[k] = x[k] + h;
            xm[k] = x[k] - h;
            dg[k] = (metric(xp) - metric(xm)) / (2.0 * h);
            xp[k] = x[k];
            xm[k] = x[k];
        }
        return dg;
    }
    switch (family_) {
        case MetricFamily::Flat:
        case MetricFamily::LinearPullback:
            return dg;  // constant metric
        case MetricFamily::SinePullback: {
            // g = J^T J with J_{li} = delta_{li} + a_l w_l cos(w_l x_{s_l}) delta_{i,s_l},
            // s_l = (l+1) mod n. Only dJ_{l,s_l}/dx_{s_l} is nonzero.
            Mat j = pullback_jacobian(x);
            for (int l = 0; l < n_; ++l) {
                int s = (l + 1) % n_;
                double djj = -amplitudes_[l] * frequencies_[l] * frequencies_[l] *
                             std::sin(frequencies_[l] * x[s]);
                // d g_ij / d x_s picks up dJ_{l,s} against row l of J
                for (int i = 0; i < n_; ++i) {
                    double t = djj * j(l, i);
                    dg[s](s, i) += t;
                    dg[s](i, s) += t;
                }
            }
            return dg;
        }
        case MetricFamily::Conformal: {
            double factor = 2.0 * std::exp(2.0 * coeffs_.dot(x));
            for (int k = 0; k < n_; ++k) dg[k] = factor * coeffs_[k] * Mat::Identity(n_, n_);
            return dg;
        }
    }
    throw std::logic_error("unreachable");
}

std::vector<Mat> MetricField::christoffel(const Vec& x) const {
    check_point(x);
    if (!finite_difference_derivatives && family_ == MetricFamily::Conformal) {
        // Gamma^k_ij = delta_ik c_j + delta_jk c_i - delta_ij c_k
        std::vector<Mat> gamma(n_, Mat::Zero(n_, n_));
        for (int k = 0; k < n_; ++k)
            for (int i = 0; i < n_; ++i)
                for (int jj = 0; jj < n_; ++jj) {
                    double v = 0.0;
                    if (i == k) v += coeffs_[jj];
                    if (jj == k) v += coeffs_[i];
                    if (i == jj) v -= coeffs_[k];
                    gamma[k](i, jj) = v;
                }
        return gamma;
    }
    Mat g = metric(x);
    Eigen::LLT<Mat> llt(g);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("christoffel: metric is not positive-definite at queried point");
    std::vector<Mat> dg = metric_derivative(x);
    std::vector<Mat> gamma(n_, Mat::Zero(n_, n_));
    Mat rhs(n_, n_);
    for (int i = 0; i < n_; ++i)
        for (int jj = i; jj < n_; ++jj) {
            Vec lower(n_);
            for (int l = 0; l < n_; ++l)
                lower[l] = 0.5 * (dg[i](jj, l) + dg[jj](i, l) - dg[l](i, jj));
            Vec up = llt.solve(lower);
            for (int k = 0; k < n_; ++k) {
                gamma[k](i, jj) = up[k];
                gamma[k](jj, i) = up[k];
            }
        }
    return gamma;
}

void MetricField::geodesic_acceleration(const Vec& x, const Vec& v, Vec& accel) const {
    switch (family_) {
        case MetricFamily::Flat:
        case MetricFamily::LinearPullback:
            accel.setZero(n_);
            return;
        case MetricFamily::SinePullback: {
            // phi(gamma) is straight: J xdd + (dJ/dt) xd = 0 with
            // ((dJ/dt) xd)_l = -a_l w_l^2 sin(w_l x_s) v_s^2
            if (n_ == 2) {
                Eigen::Matrix2d j;
                Eigen::Vector2d h;
                for (int l = 0; l < 2; ++l) {
                    int s = (l + 1) % 2;
                    double c = amplitudes_[l] * frequencies_[l];
                    j(l, l) = 1.0;
                    j(l, s) = c * std::cos(frequencies_[l] * x[s]);
                    h[l] = -c * frequencies_[l] * std::sin(frequencies_[l] * x[s]) * v[s] * v[s];
                }
                Eigen::Vector2d a = j.inverse() * (-h);
                accel.resize(2);
                accel[0] = a[0];
                accel[1] = a[1];
                return;
            }
            if (n_ == 3) {
                Eigen::Matrix3d j = Eigen::Matrix3d::Identity();
                Eigen::Vector3d h;
                for (int l = 0; l < 3; ++l) {
                    int s = (l + 1) % 3;
                    double c = amplitudes_[l] * frequencies_[l];
                    j(l, s) = c * std::cos(frequencies_[l] * x[s]);
                    h[l] = -c * frequencies_[l] * std::sin(frequencies_[l] * x[s]) * v[s] * v[s];
                }
                Eigen::Vector3d a = j.inverse() * (-h);
                accel.resize(3);
                accel[0] = a[0];
                accel[1] = a[1];
                accel[2] = a[2];
                return;
            }
            Mat j = pullback_jacobian(x);
            Vec h(n_);
            for (int l = 0; l < n_; ++l) {
                int s = (l + 1) % n_;
                h[l] = -amplitudes_[l] * frequencies_[l] * frequencies_[l] *
                       std::sin(frequencies_[l] * x[s]) * v[s] * v[s];
            }
            accel = j.partialPivLu().solve(-h);
            return;
        }
        case MetricFamily::Conformal: {
            double cv = coeffs_.dot(v);
            double vv = v.squaredNorm();
            accel = vv * coeffs_ - 2.0 * cv * v;
            return;
        }
    }
}

double MetricField::metric_dot(const Vec& x, const Vec& v, const Vec& w) const {
    switch (family_) {
        case MetricFamily::Flat:
            return v.dot(w);
        case MetricFamily::LinearPullback:
            return (matrix_ * v).dot(matrix_ * w);
        case MetricFamily::SinePullback: {
            Mat j = pullback_jacobian(x);
            return (j * v).dot(j * w);
        }
        case MetricFamily::Conformal:
            return std::exp(2.0 * coeffs_.dot(x)) * v.dot(w);
    }
    throw std::logic_error("unreachable");
}

double MetricField::metric_norm(const Vec& x, const Vec& v) const {
    return std::sqrt(std::max(0.0, metric_dot(x, v, v)));
}

Vec MetricField::pullback(const Vec& x) const {
    check_point(x);
    switch (family_) {
        case MetricFamily::Flat:
            return x;
        case MetricFamily::LinearPullback:
            return matrix_ * x;
        case MetricFamily::SinePullback: {
            Vec y = x;
            for (int i = 0; i < n_; ++i)
                y[i] += amplitudes_[i] * std::sin(frequencies_[i] * x[(i + 1) % n_]);
            return y;
        }
        case MetricFamily::Conformal:
            throw std::logic_error("conformal family has no flat pullback");
    }
    throw std::logic_error("unreachable");
}

Vec MetricField::pullback_inverse(const Vec& y) const {
    check_point(y);
    switch (family_) {
        case MetricFamily::Flat:
            return y;
        case MetricFamily::LinearPullback:
            return matrix_inv_ * y;
        case MetricFamily::SinePullback: {
            // x = y - P(x) is a contraction with rate <= 0.5 in the sup norm
            Vec x = y;
            for (int iter = 0; iter < 200; ++iter) {
                Vec xn = y;
                for (int i = 0; i < n_; ++i)
                    xn[i] -= amplitudes_[i] * std::sin(frequencies_[i] * x[(i + 1) % n_]);
                double step = (xn - x).lpNorm<Eigen::Infinity>();
                x = xn;
                if (step < 1e-15 * std::max(1.0, y.lpNorm<Eigen::Infinity>())) break;
            }
            for (int polish = 0; polish < 2; ++polish)
                x -= pullback_jacobian(x).partialPivLu().solve(pullback(x) - y);
            return x;
        }
        case MetricFamily::Conformal:
            throw std::logic_error("conformal family has no flat pullback");
    }
    throw std::logic_error("unreachable");
}

Mat MetricField::pullback_jacobian(const Vec& x) const {
    switch (family_) {
        case MetricFamily::Flat:
            return Mat::Identity(n_, n_);
        case MetricFamily::LinearPullback:
            return matrix_;
        case MetricFamily::SinePullback: {
            Mat j = Mat::Identity(n_, n_);
            for (int l = 0; l < n_; ++l) {
                int s = (l + 1) % n_;
                j(l, s) += amplitudes_[l] * frequencies_[l] * std::cos(frequencies_[l] * x[s]);
            }
            return j;
        }
        case MetricFamily::Conformal:
            throw std::logic_error("conformal family has no flat pullback");
    }
    throw std::logic_error("unreachable");
}

double MetricField::oracle_distance(const Vec& x, const Vec& y) const {
    return (pullback(x) - pullback(y)).norm();
}

double MetricField::chart_ratio_lower() const {
    switch (family_) {
        case MetricFamily::Flat:
            return 1.0;
        case MetricFamily::LinearPullback: {
            Eigen::JacobiSVD<Mat> svd(matrix_);
            return svd.singularValues().minCoeff();
        }
        case MetricFamily::SinePullback: {
            double s = 0.0;
            for (int i = 0; i < n_; ++i)
                s = std::max(s, std::abs(amplitudes_[i] * frequencies_[i]));
            return 1.0 - s;
        }
        case MetricFamily::Conformal:
            throw std::logic_error("conformal family has no global chart ratio");
    }
    throw std::logic_error("unreachable");
}

double MetricField::chart_ratio_upper() const {
    switch (family_) {
        case MetricFamily::Flat:
            return 1.0;
        case MetricFamily::LinearPullback: {
            Eigen::JacobiSVD<Mat> svd(matrix_);
            return svd.singularValues().maxCoeff();
        }
        case MetricFamily::SinePullback: {
            double s = 0.0;
            for (int i = 0; i < n_; ++i)
                s = std::max(s, std::abs(amplitudes_[i] * frequencies_[i]));
            return 1.0 + s;
        }
        case MetricFamily::Conformal:
            throw std::logic_error("conformal family has no global chart ratio");
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// GeodesicPath

Vec GeodesicPath::at(double t) const {
    if (samples.empty()) throw std::logic_error("empty geodesic path");
    if (t <= samples.front().t) return samples.front().position;
    if (t >= samples.back().t) return samples.back().position;
    std::size_t lo = 0, hi = samples.size() - 1;
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (samples[mid].t <= t)
            lo = mid;
        else
            hi = mid;
    }
    const GeodesicSample& a = samples[lo];
    const GeodesicSample& b = samples[hi];
    double h = b.t - a.t;
    if (h <= 0) return a.position;
    double u = (t - a.t) / h;
    double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * a.position + (u3 - 2 * u2 + u) * h * a.velocity +
           (-2 * u3 + 3 * u2) * b.position + (u3 - u2) * h * b.velocity;
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) with PI step control and FSAL

namespace {

struct Dopri5 {
    const MetricField& m;
    int n;
    Vec k1, k2, k3, k4, k5, k6, k7, ytmp, yerr, xw, vw, aw;

    explicit Dopri5(const MetricField& metric)
        : m(metric), n(metric.dimension()) {
        int d = 2 * n;
        k1.resize(d); k2.resize(d); k3.resize(d); k4.resize(d); k5.resize(d);
        k6.resize(d); k7.resize(d); ytmp.resize(d); yerr.resize(d);
        xw.resize(n); vw.resize(n); aw.resize(n);
    }

    void rhs(const Vec& y, Vec& out) {
        xw = y.head(n);
        vw = y.tail(n);
        m.geodesic_acceleration(xw, vw, aw);
        out.head(n) = vw;
        out.tail(n) = aw;
    }

    // Integrates y' = f(y) over [0, t_max]. Returns accepted step count.
    long run(Vec y, double t_max, double rtol, double atol, bool store,
             std::vector<GeodesicSample>* samples, Vec* y_end) {
        constexpr double a21 = 1.0 / 5;
        constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                         a54 = -212.0 / 729;
        constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                         a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                         b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                         e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
        const long max_steps = 4000000;

        double t = 0.0;
        rhs(y, k1);
        double d0 = y.norm() + atol, d1 = k1.norm() + atol;
        double h = std::min(t_max, 0.01 * d0 / d1);
        if (!(h > 0)) h = t_max * 1e-6;

        if (store) {
            samples->clear();
            samples->push_back({0.0, y.head(n), y.tail(n)});
        }

        long accepted = 0;
        double err_prev = 1.0;
        for (long step = 0; step < max_steps; ++step) {
            if (t >= t_max) break;
            bool last = false;
            if (t + h >= t_max) {
                h = t_max - t;
                last = true;
            }
            if (h < 1e-14 * std::max(1.0, t_max))
                throw IntegrationError("geodesic integration: step size underflow at t = " +
                                       std::to_string(t));

            ytmp = y + h * (a21 * k1);
            rhs(ytmp, k2);
            ytmp = y + h * (a31 * k1 + a32 * k2);
            rhs(ytmp, k3);
            ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
            rhs(ytmp, k4);
            ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            rhs(ytmp, k5);
            ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            rhs(ytmp, k6);
            ytmp = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            rhs(ytmp, k7);
            yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            double err = 0.0;
            for (int i = 0; i < 2 * n; ++i) {
                double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ytmp[i]));
                double q = yerr[i] / sc;
                err += q * q;
            }
            err = std::sqrt(err / (2 * n));

            if (err <= 1.0) {
                t = last ? t_max : t + h;
                y.swap(ytmp);
                k1.swap(k7);  // FSAL: k7 = f(ynew)
                ++accepted;
                if (store) samples->push_back({t, y.head(n), y.tail(n)});
                double scale = 0.9 * std::pow(std::max(err, 1e-10), -0.7 / 5.0) *
                               std::pow(std::max(err_prev, 1e-10), 0.4 / 5.0);
                h *= std::clamp(scale, 0.2, 5.0);
                err_prev = std::max(err, 1e-10);
            } else {
                // k1 still holds f(y) after a rejection
                h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
            }
        }
        if (t < t_max)
            throw IntegrationError("geodesic integration: step budget exhausted");
        if (y_end) *y_end = y;
        return accepted;
    }
};

Vec pack_state(const Vec& x, const Vec& v) {
    Vec y(x.size() + v.size());
    y.head(x.size()) = x;
    y.tail(v.size()) = v;
    return y;
}

GeodesicPath constant_path(const Vec& x) {
    GeodesicPath path;
    Vec zero = Vec::Zero(x.size());
    path.samples.push_back({0.0, x, zero});
    path.samples.push_back({1.0, x, zero});
    path.duration = 1.0;
    path.speed = 0.0;
    path.minimizing = true;
    return path;
}

double speed_drift(const MetricField& m, const std::vector<GeodesicSample>& samples) {
    if (samples.empty()) return 0.0;
    double s0 = m.metric_norm(samples.front().position, samples.front().velocity);
    if (s0 <= 0.0) return 0.0;
    double worst = 0.0;
    for (const auto& s : samples)
        worst = std::max(worst, std::abs(m.metric_norm(s.position, s.velocity) - s0) / s0);
    return worst;
}

}  // namespace

GeodesicPath geodesicivp_with_tol(const MetricField& m, const Vec& x, const Vec& v, double t_max,
                                  double rtol, double atol);

GeodesicPath geodesicivp_with_tol(const MetricField& m, const Vec& x, const Vec& v, double t_max,
                                  double rtol, double atol) {
    GeodesicPath path;
    Dopri5 solver(m);
    for (int attempt = 0; attempt < 3; ++attempt) {
        path.samples.clear();
        solver.run(pack_state(x, v), t_max, rtol, atol, true, &path.samples, nullptr);
        if (speed_drift(m, path.samples) < 1e-7) break;
        if (attempt == 2)
            throw IntegrationError("geodesic integration: metric speed drift above 1e-7");
        rtol *= 1e-2;
        atol *= 1e-2;
    }
    path.duration = t_max;
    path.speed = m.metric_norm(x, v);
    path.minimizing = true;
    return path;
}

GeodesicPath geodesic_ivp(const MetricField& m, const Vec& x, const Vec& v, double t_max) {
    if (!(t_max > 0)) throw std::invalid_argument("geodesic_ivp: t_max must be positive");
    if (!x.allFinite() || !v.allFinite()) throw std::domain_error("geodesic_ivp: non-finite input");
    return geodesicivp_with_tol(m, x, v, t_max, 1e-10, 1e-12);
}

GeodesicPath geodesic_bvp(const MetricField& m, const Vec& x, const Vec& y) {
    if (!x.allFinite() || !y.allFinite()) throw std::domain_error("geodesic_bvp: non-finite input");
    const int n = m.dimension();
    double scale = std::max({1.0, x.lpNorm<Eigen::Infinity>(), y.lpNorm<Eigen::Infinity>()});
    if ((x - y).lpNorm<Eigen::Infinity>() < 1e-12 * scale) return constant_path(x);

    const double tol = 1e-9;
    const int max_iters = 40;
    Dopri5 solver(m);
    Vec x_end(n), v_end(n);
    auto endpoint = [&](const Vec& w, Vec& out) {
        Vec y_end;
        solver.run(pack_state(x, w), 1.0, 1e-10, 1e-12, false, nullptr, &y_end);
        out = y_end.head(n);
    };

    Vec w = y - x;
    double last_residual = std::numeric_limits<double>::infinity();
    std::uint64_t restart_seed = 0x243f6a8885a308d3ull;
    for (int i = 0; i < x.size(); ++i) {
        double xi = x[i], yi = y[i];
        std::uint64_t bx, by;
        std::memcpy(&bx, &xi, 8);
        std::memcpy(&by, &yi, 8);
        restart_seed = hash_mix(hash_mix(restart_seed, bx), by);
    }

    for (int restart = 0; restart <= 8; ++restart) {
        Vec r(n), r_try(n), x_try(n);
        endpoint(w, x_end);
        r = x_end - y;
        double rn = r.lpNorm<Eigen::Infinity>();
        Mat jac(n, n);
        bool have_jac = false;
        bool failed = false;
        for (int iter = 0; iter < max_iters && !failed; ++iter) {
            if (rn < tol) {
                GeodesicPath path = geodesicivp_with_tol(m, x, w, 1.0, 1e-10, 1e-12);
                path.minimizing = true;
                return path;
            }
            if (!have_jac) {
                double wmax = std::max(w.lpNorm<Eigen::Infinity>(), 1e-3);
                for (int j = 0; j < n; ++j) {
                    double dw = 1e-8 * std::max(std::abs(w[j]), wmax);
                    Vec wp = w;
                    wp[j] += dw;
                    endpoint(wp, x_try);
                    jac.col(j) = (x_try - x_end) / dw;
                }
                have_jac = true;
            }
            Vec dstep = jac.partialPivLu().solve(-r);
            if (!dstep.allFinite()) {
                failed = true;
                break;
            }
            double alpha = 1.0;
            bool accepted = false;
            for (int back = 0; back < 7; ++back) {
                Vec w_try = w + alpha * dstep;
                endpoint(w_try, x_try);
                r_try = x_try - y;
                double rt = r_try.lpNorm<Eigen::Infinity>();
                if (rt < (1.0 - 0.25 * alpha) * rn || rt < tol) {
                    bool strong = (rt < 0.3 * rn) && alpha == 1.0;
                    w = w_try;
                    x_end = x_try;
                    r = r_try;
                    rn = rt;
                    accepted = true;
                    if (!strong) have_jac = false;  // refresh Jacobian when contraction weakens
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) {
                if (have_jac) {
                    have_jac = false;  // retry once with a fresh Jacobian
                } else {
                    failed = true;
                }
            }
        }
        last_residual = std::min(last_residual, rn);
        // randomized restart around the chart straight-line guess
        SplitMix64 rng(hash_mix(restart_seed, static_cast<std::uint64_t>(restart + 1)));
        Vec base = y - x;
        w = base + 0.25 * std::max(base.norm(), 1.0) * rng.gaussian_vector(n);
    }
    throw BvpError("geodesic_bvp: shooting failed to converge (last residual " +
                       std::to_string(last_residual) + ")",
                   last_residual);
}

double distance(const MetricField& m, const Vec& x, const Vec& y) {
    return geodesic_bvp(m, x, y).length();
}

TangentVector radial_projection(const MetricField& m, const Vec& origin, const Vec& x) {
    if ((x - origin).norm() <= 1e-9)
        throw std::domain_error("radial_projection: point coincides with the basepoint");
    GeodesicPath path = geodesic_bvp(m, origin, x);
    if (path.speed <= 0.0)
        throw std::domain_error("radial_projection: degenerate connecting geodesic");
    TangentVector v;
    v.base = origin;
    v.components = path.initial_velocity() / path.speed;
    return v;
}

}  // namespace netembed
