#include "cola/conjunction.hpp"

#include <cmath>

namespace cola {

namespace {

double det2(const Mat2& c) { return c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0); }

Mat2 inverse2(const Mat2& c) {
    const double d = det2(c);
    if (!(d > 0.0)) {
        throw Error(ErrorCode::SingularProjectedCovariance, "det C = " + std::to_string(d));
    }
    Mat2 inv;
    inv << c(1, 1), -c(0, 1), -c(1, 0), c(0, 0);
    return inv / d;
}

// Gauss-Legendre nodes/weights on [-1, 1], computed by Newton iteration on
// the Legendre polynomial. Used only by the diagnostic quadrature path.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

// Integral of the zero-mean Gaussian N(0, C) over the disk of radius r
// centered at `center`, by tensor Gauss-Legendre in polar coordinates around
// the disk center, refined until successive orders agree.
double disk_integral(const Vec2& center, const Mat2& c, double r) {
    const Mat2 cinv = inverse2(c);
    const double norm_const = 1.0 / (2.0 * M_PI * std::sqrt(det2(c)));
    auto evaluate = [&](int n_rad, int n_ang) {
        std::vector<double> xr, wr, xa, wa;
        gauss_legendre(n_rad, xr, wr);
        gauss_legendre(n_ang, xa, wa);
        double total = 0.0;
        for (int i = 0; i < n_rad; ++i) {
            const double rho = 0.5 * r * (xr[i] + 1.0);
            const double jr = 0.5 * r * wr[i] * rho;
            for (int j = 0; j < n_ang; ++j) {
                const double phi = M_PI * (xa[j] + 1.0);
                Vec2 x = center + rho * Vec2(std::cos(phi), std::sin(phi));
                const double q = x.dot(cinv * x);
                total += jr * M_PI * wa[j] * norm_const * std::exp(-0.5 * q);
            }
        }
        return total;
    };
    double prev = evaluate(16, 16);
    for (int order = 32; order <= 256; order *= 2) {
        const double next = evaluate(order, order);
        if (std::abs(next - prev) <= 1e-10 * std::max(next, 1e-300)) return next;
        prev = next;
    }
    return prev;
}

} // namespace

BPlaneFrame bplane(const Vec3& delta_r, const Vec3& delta_v) {
    const double vnorm = delta_v.norm();
    const Vec3 cross = delta_r.cross(delta_v);
    if (vnorm <= 0.0 || cross.norm() <= 1e-12 * delta_r.norm() * vnorm || cross.norm() == 0.0) {
        throw Error(ErrorCode::DegenerateEncounter, "delta_r x delta_v vanishes");
    }
    BPlaneFrame frame;
    frame.b_y = delta_v / vnorm;
    frame.b_z = cross / cross.norm();
    frame.b_x = frame.b_y.cross(frame.b_z);
    frame.projector.row(0) = frame.b_x;
    frame.projector.row(1) = frame.b_z;
    return frame;
}

Mat2 combined_covariance(const Mat3& c1_eci, const Mat3& c2_eci, const BPlaneFrame& frame) {
    const Mat3 sum = c1_eci + c2_eci;
    Mat2 c = frame.projector * sum * frame.projector.transpose();
    c = 0.5 * (c + c.transpose()).eval();
    if (!(det2(c) > 0.0)) {
        throw Error(ErrorCode::SingularProjectedCovariance,
                    "projected covariance is numerically singular");
    }
    return c;
}

double poc_ceiling(double r_hbr, const Mat2& c) {
    const double d = det2(c);
    if (!(d > 0.0)) throw Error(ErrorCode::SingularProjectedCovariance, "det C <= 0");
    return r_hbr * r_hbr / (2.0 * std::sqrt(d));
}

double poc_threshold(double target_pc, double r_hbr, const Mat2& c) {
    const double ceiling = poc_ceiling(r_hbr, c);
    if (!(target_pc > 0.0) || target_pc > ceiling * (1.0 + 1e-12)) {
        throw Error(ErrorCode::TargetUnreachable,
                    "target Pc " + std::to_string(target_pc) + " outside (0, " +
                        std::to_string(ceiling) + "]");
    }
    const double d = det2(c);
    return std::log(std::pow(r_hbr, 4) / (4.0 * target_pc * target_pc * d));
}

PocEstimate poc_estimate(const Vec2& delta_r_b, const Mat2& c, double r_hbr,
                         bool with_quadrature) {
    PocEstimate est;
    const Mat2 cinv = inverse2(c);
    est.mahalanobis_sq = delta_r_b.dot(cinv * delta_r_b);
    est.pc_closed_form = poc_ceiling(r_hbr, c) * std::exp(-0.5 * est.mahalanobis_sq);
    if (with_quadrature) est.pc_quadrature = disk_integral(delta_r_b, c, r_hbr);
    return est;
}

} // namespace cola
