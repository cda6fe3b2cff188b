#pragma once

// Genus-p Riemann theta function
//   theta(z) = sum_{n in Z^p} exp(2 pi i (n,z) + pi i (n, n tau)),
// with modular argument reduction (shifts by m + n tau, compensating factor
// kept in log form) and ellipsoidal truncation in the Im(tau) metric.

#include "todaspec/numeric.hpp"

namespace todaspec {

// theta = value * exp(log_shift); value stays O(1) after reduction, the
// exponential factor is recombined only in ratios.
struct ThetaValue {
    cd value = 1.0;
    cd log_shift = 0.0;

    cd full() const {
        if (log_shift.real() > 700.0)
            throw ThetaOverflow("compensating factor exp(" + std::to_string(log_shift.real()) +
                                ") exceeds floating range");
        return value * std::exp(log_shift);
    }
};

struct ThetaGradient {
    ThetaValue theta;
    Eigen::VectorXcd grad;  // same scaling as theta.value: d_j theta = grad(j) * exp(log_shift)

    // d_j log theta, finite away from the theta divisor.
    Eigen::VectorXcd dlog() const { return grad / theta.value; }
};

class ThetaContext {
  public:
    ThetaContext() = default;  // genus 0: theta == 1

    ThetaContext(Eigen::MatrixXcd tau, double tol = 1e-12) : tau_(std::move(tau)), tol_(tol) {
        const Eigen::Index p = tau_.rows();
        if (tau_.cols() != p) throw ValidationError("tau must be square");
        if (p == 0) return;
        const double asym = (tau_ - tau_.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-8 * (1.0 + tau_.cwiseAbs().maxCoeff()))
            throw ValidationError("tau is not symmetric: max asymmetry " + std::to_string(asym));
        im_tau_ = tau_.imag();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(im_tau_);
        if (es.info() != Eigen::Success) throw EigenFailed("Im(tau) eigendecomposition failed");
        lambda_min_ = es.eigenvalues().minCoeff();
        if (lambda_min_ <= 0.0)
            throw ValidationError("Im(tau) is not positive definite (lambda_min = " +
                                  std::to_string(lambda_min_) + ")");
        im_tau_inv_ = im_tau_.inverse();
        // radius so that exp(-pi lambda_min (R - r0)^2) * (count factor) < tol;
        // r0 bounds the reduced argument's offset in the Im(tau) metric.
        const double r0 = std::sqrt(double(p)) * 0.5 *
                          std::sqrt(im_tau_.cwiseAbs().maxCoeff() / lambda_min_) * 2.0;
        const double margin = std::log(1.0 / tol_) + double(p) * std::log(20.0) + 5.0;
        radius_ = r0 + std::sqrt(margin / (pi * lambda_min_));
    }

    int genus() const { return static_cast<int>(tau_.rows()); }
    const Eigen::MatrixXcd& tau() const { return tau_; }
    double tol() const { return tol_; }
    double lambda_min() const { return lambda_min_; }
    double truncation_radius() const { return radius_; }

    // Evaluate with an enlarged summation radius (used by convergence tests).
    ThetaGradient eval_with_radius(const Eigen::VectorXcd& z, double radius) const {
        return eval_impl(z, radius);
    }

    ThetaGradient eval_grad(const Eigen::VectorXcd& z) const { return eval_impl(z, radius_); }

    ThetaValue eval(const Eigen::VectorXcd& z) const { return eval_impl(z, radius_).theta; }

    // sum_j c_j (d_j log theta(z1) - d_j log theta(z2))
    cd dirlog(const Eigen::VectorXcd& c, const Eigen::VectorXcd& z1, const Eigen::VectorXcd& z2) const {
        if (genus() == 0) return 0.0;
        const ThetaGradient t1 = eval_grad(z1);
        const ThetaGradient t2 = eval_grad(z2);
        guard_divisor(t1.theta);
        guard_divisor(t2.theta);
        cd s = 0.0;
        for (int j = 0; j < genus(); ++j) s += c(j) * (t1.dlog()(j) - t2.dlog()(j));
        return s;
    }

    void guard_divisor(const ThetaValue& t) const {
        if (std::abs(t.value) < std::sqrt(tol_))
            throw OnThetaDivisor("theta argument within " + std::to_string(std::abs(t.value)) +
                                 " of the theta divisor");
    }

  private:
    ThetaGradient eval_impl(const Eigen::VectorXcd& z, double radius) const {
        const int p = genus();
        ThetaGradient out;
        out.grad = Eigen::VectorXcd::Zero(p);
        if (p == 0) {
            out.theta = ThetaValue{cd(1.0), cd(0.0)};
            return out;
        }

        // Argument reduction z = zr + m + n* tau with n* = round(ImTau^-1 Im z),
        // m = round(Re(z - n* tau)); then
        //   theta(z) = exp(-2 pi i (n*, zr) - pi i (n*, n* tau)) theta(zr).
        Eigen::VectorXd imz(p), rez(p);
        for (int j = 0; j < p; ++j) imz(j) = z(j).imag(), rez(j) = z(j).real();
        Eigen::VectorXd nst = im_tau_inv_ * imz;
        Eigen::VectorXi nstar(p), mstar(p);
        for (int j = 0; j < p; ++j) nstar(j) = static_cast<int>(std::lround(nst(j)));
        Eigen::VectorXcd ntau = Eigen::VectorXcd::Zero(p);
        for (int j = 0; j < p; ++j)
            for (int k = 0; k < p; ++k) ntau(j) += double(nstar(k)) * tau_(k, j);
        for (int j = 0; j < p; ++j)
            mstar(j) = static_cast<int>(std::lround(rez(j) - ntau(j).real()));
        Eigen::VectorXcd zr(p);
        for (int j = 0; j < p; ++j) zr(j) = z(j) - double(mstar(j)) - ntau(j);

        // exp factor: theta(z) = exp(E) * theta(zr)
        cd E = 0.0;
        for (int j = 0; j < p; ++j) E += -2.0 * pi * cd(0, 1) * double(nstar(j)) * zr(j);
        cd ntn = 0.0;
        for (int j = 0; j < p; ++j)
            for (int k = 0; k < p; ++k) ntn += double(nstar(j)) * tau_(j, k) * double(nstar(k));
        E += -pi * cd(0, 1) * ntn;

        // Ellipsoid enumeration around the stationary center c = -ImTau^-1 Im zr.
        Eigen::VectorXd center = -(im_tau_inv_ * zr.imag());
        const double B2 = lambda_min_ * radius * radius;
        cd sum = 0.0;
        Eigen::VectorXcd gsum = Eigen::VectorXcd::Zero(p);
        Eigen::VectorXi n = Eigen::VectorXi::Zero(p);
        enumerate(0, n, center, B2, zr, sum, gsum);
        out.theta = ThetaValue{sum, E};
        // d_j theta(z) = exp(E) [d_j theta(zr) - 2 pi i n*_j theta(zr)]
        for (int j = 0; j < p; ++j) out.grad(j) = gsum(j) - 2.0 * pi * cd(0, 1) * double(nstar(j)) * sum;
        return out;
    }

    // Recursive integer enumeration of (n - c)^T ImTau (n - c) <= B2,
    // lexicographic order (deterministic reduction order).
    void enumerate(int level, Eigen::VectorXi& n, const Eigen::VectorXd& center, double B2,
                   const Eigen::VectorXcd& zr, cd& sum, Eigen::VectorXcd& gsum) const {
        const int p = genus();
        if (level == p) {
            cd phase = 0.0;
            for (int j = 0; j < p; ++j) phase += 2.0 * pi * cd(0, 1) * double(n(j)) * zr(j);
            cd quad = 0.0;
            for (int j = 0; j < p; ++j)
                for (int k = 0; k < p; ++k) quad += double(n(j)) * tau_(j, k) * double(n(k));
            const cd term = std::exp(phase + pi * cd(0, 1) * quad);
            sum += term;
            for (int j = 0; j < p; ++j) gsum(j) += 2.0 * pi * cd(0, 1) * double(n(j)) * term;
            return;
        }
        // conservative per-coordinate bound: |n_j - c_j| <= sqrt(B2 / lambda_min)
        const double half_width = std::sqrt(B2 / lambda_min_);
        const int lo = static_cast<int>(std::floor(center(level) - half_width));
        const int hi = static_cast<int>(std::ceil(center(level) + half_width));
        for (int v = lo; v <= hi; ++v) {
            n(level) = v;
            if (level == p - 1) {
                // check full quadratic form before emitting
                Eigen::VectorXd d(p);
                for (int j = 0; j < p; ++j) d(j) = double(n(j)) - center(j);
                if (d.dot(im_tau_ * d) <= B2) enumerate(p, n, center, B2, zr, sum, gsum);
            } else {
                enumerate(level + 1, n, center, B2, zr, sum, gsum);
            }
        }
    }

    Eigen::MatrixXcd tau_;
    Eigen::MatrixXd im_tau_, im_tau_inv_;
    double lambda_min_ = 1.0;
    double radius_ = 5.0;
    double tol_ = 1e-12;
};

}  // namespace todaspec
