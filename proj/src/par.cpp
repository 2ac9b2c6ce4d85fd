#include "mdlseg/par.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>

namespace mdlseg {

SeasonalACVF seasonal_acvf(const std::vector<double>& resid, int period, int max_lag) {
    const int n = static_cast<int>(resid.size());
    if (period < 1) throw Error("period must be >= 1");
    if (n == 0) throw EmptySeries("residual series is empty");
    if (n % period != 0) throw NotFullCycles("residual length is not a multiple of the period");
    if (max_lag < 0 || max_lag >= n) throw Error("max_lag must be in [0, N)");
    const int cycles = n / period;

    SeasonalACVF out;
    out.period = period;
    out.max_lag = max_lag;
    out.gamma.assign(static_cast<std::size_t>(period),
                     std::vector<double>(static_cast<std::size_t>(max_lag) + 1, 0.0));
    for (int nu = 1; nu <= period; ++nu) {
        for (int h = 0; h <= max_lag; ++h) {
            double acc = 0.0;
            for (int cyc = 0; cyc < cycles; ++cyc) {
                const int t = cyc * period + nu;
                const int s = t - h;
                if (s >= 1) acc += resid[static_cast<std::size_t>(t - 1)] * resid[static_cast<std::size_t>(s - 1)];
            }
            out.gamma[static_cast<std::size_t>(nu - 1)][static_cast<std::size_t>(h)] = acc / cycles;
        }
    }
    return out;
}

PARModel yule_walker_from_acvf(const SeasonalACVF& acvf, int order) {
    const int T = acvf.period;
    if (order < 0) throw Error("order must be >= 0");
    if (acvf.max_lag < order) throw Error("autocovariances must cover lags 0..order");

    PARModel par;
    par.order = order;
    par.period = T;
    par.phi.assign(static_cast<std::size_t>(T) * static_cast<std::size_t>(order), 0.0);
    par.sigma2.assign(static_cast<std::size_t>(T), 0.0);

    for (int nu = 1; nu <= T; ++nu) {
        double s2 = acvf.at(nu, 0);
        if (order > 0) {
            Eigen::MatrixXd a(order, order);
            Eigen::VectorXd b(order);
            for (int h = 1; h <= order; ++h) {
                b(h - 1) = acvf.at(nu, h);
                for (int k = 1; k <= order; ++k) {
                    // Cov(e_{t-k}, e_{t-h}): the later of the two times sets
                    // the season, the gap |k - h| the lag.
                    a(h - 1, k - 1) = k >= h ? acvf.at(wrap_season(nu - h, T), k - h)
                                             : acvf.at(wrap_season(nu - k, T), h - k);
                }
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
            lu.setThreshold(1e-12);
            if (lu.rank() < order)
                throw YuleWalkerSingular("moment equations singular for season " + std::to_string(nu));
            Eigen::VectorXd coef = lu.solve(b);
            for (int k = 1; k <= order; ++k) {
                par.phi_at(nu, k) = coef(k - 1);
                s2 -= coef(k - 1) * acvf.at(nu, k);
            }
        }
        if (s2 <= 0.0)
            throw NonPositiveVariance("implied innovation variance <= 0 for season " + std::to_string(nu));
        par.sigma2[static_cast<std::size_t>(nu - 1)] = s2;
    }
    return par;
}

PARModel yule_walker(const std::vector<double>& resid, int period, int order) {
    const int n = static_cast<int>(resid.size());
    if (period >= 1 && n % period == 0 && n / period <= order)
        throw Error("need more cycles than the autoregressive order");
    return yule_walker_from_acvf(seasonal_acvf(resid, period, order < 0 ? 0 : order), order);
}

StationaryMoments stationary_moments(const PARModel& par, int max_lag) {
    const int T = par.period;
    const int p = par.order;
    if (T < 1) throw Error("period must be >= 1");
    if (max_lag < 0) throw Error("max_lag must be >= 0");
    for (double s2 : par.sigma2)
        if (s2 <= 0.0) throw NonPositiveVariance("innovation variance must be > 0");

    StationaryMoments out;
    out.period = T;
    out.max_lag = max_lag;
    out.gamma.assign(static_cast<std::size_t>(T),
                     std::vector<double>(static_cast<std::size_t>(max_lag) + 1, 0.0));

    if (p == 0) {
        for (int nu = 1; nu <= T; ++nu)
            out.gamma[static_cast<std::size_t>(nu - 1)][0] = par.sigma2[static_cast<std::size_t>(nu - 1)];
        return out;
    }

    // Stack q+1 consecutive cycles so the process is first-order in the
    // stacked state; the stationary covariance is the fixed point of
    // S -> A S A' + Q.
    const int q = std::max(p, max_lag) / T + 1;
    const int dim = (q + 1) * T;

    Eigen::MatrixXd phi0 = Eigen::MatrixXd::Identity(T, T);
    std::vector<Eigen::MatrixXd> psi(static_cast<std::size_t>(q) + 1, Eigen::MatrixXd::Zero(T, T));
    for (int nu = 1; nu <= T; ++nu) {
        for (int k = 1; k <= p; ++k) {
            const int s = nu - k;
            if (s >= 1) {
                phi0(nu - 1, s - 1) -= par.phi_at(nu, k);
            } else {
                const int u = wrap_season(s, T);
                const int c = (u - s) / T;
                psi[static_cast<std::size_t>(c)](nu - 1, u - 1) += par.phi_at(nu, k);
            }
        }
    }
    Eigen::MatrixXd phi0_inv = phi0.partialPivLu().solve(Eigen::MatrixXd::Identity(T, T));

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    for (int c = 1; c <= q; ++c)
        a.block(0, (c - 1) * T, T, T) = phi0_inv * psi[static_cast<std::size_t>(c)];
    for (int blk = 1; blk <= q; ++blk)
        a.block(blk * T, (blk - 1) * T, T, T).setIdentity();

    Eigen::MatrixXd qmat = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd sig = Eigen::Map<const Eigen::VectorXd>(par.sigma2.data(), T);
    qmat.block(0, 0, T, T) = phi0_inv * sig.asDiagonal() * phi0_inv.transpose();

    Eigen::MatrixXd cov = qmat;
    bool converged = false;
    for (int it = 0; it < 1000; ++it) {
        Eigen::MatrixXd next = a * cov * a.transpose() + qmat;
        const double change = (next - cov).cwiseAbs().maxCoeff();
        const double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
        cov = next;
        if (!std::isfinite(change) || !std::isfinite(scale))
            throw NonCausalPAR("variance recursion diverged");
        if (change <= 1e-12 * scale) {
            converged = true;
            break;
        }
    }
    if (!converged) throw NonCausalPAR("variance recursion did not converge");

    for (int nu = 1; nu <= T; ++nu) {
        for (int h = 0; h <= max_lag; ++h) {
            const int s = nu - h;
            const int u = wrap_season(s, T);
            const int c = (u - s) / T;
            out.gamma[static_cast<std::size_t>(nu - 1)][static_cast<std::size_t>(h)] =
                cov(nu - 1, c * T + u - 1);
        }
    }
    return out;
}

std::vector<double> leading_covariance(const PARModel& par, int count) {
    if (count < 1) throw Error("count must be >= 1");
    StationaryMoments mom = stationary_moments(par, count - 1);
    std::vector<double> cov(static_cast<std::size_t>(count) * static_cast<std::size_t>(count));
    for (int i = 1; i <= count; ++i) {
        for (int j = 1; j <= count; ++j) {
            const int hi = std::max(i, j);
            const int lag = std::abs(i - j);
            cov[static_cast<std::size_t>(i - 1) * count + (j - 1)] =
                mom.at(season_of(hi, par.period), lag);
        }
    }
    return cov;
}

OneStepPredictions one_step_predictions(const PeriodicSeries& x, const MeanParams& mean,
                                        const Segmentation& seg, const PARModel& par) {
    const int n = x.length();
    const int T = x.period;
    const int p = par.order;
    if (par.period != T) throw Error("model and series periods differ");
    for (double s2 : par.sigma2)
        if (s2 <= 0.0) throw NonPositiveVariance("innovation variance must be > 0");

    std::vector<double> mu(static_cast<std::size_t>(n));
    std::vector<double> resid(static_cast<std::size_t>(n));
    for (int t = 1; t <= n; ++t) {
        mu[static_cast<std::size_t>(t - 1)] = mean_value(mean, seg, T, t);
        resid[static_cast<std::size_t>(t - 1)] = x.at_time(t) - mu[static_cast<std::size_t>(t - 1)];
    }

    OneStepPredictions out;
    out.one_step_pred.assign(static_cast<std::size_t>(n), 0.0);
    out.pred_var.assign(static_cast<std::size_t>(n), 0.0);

    const int edge = std::min(p, n);
    if (edge > 0) {
        std::vector<double> cov = leading_covariance(par, edge);
        Eigen::Map<Eigen::MatrixXd> gam(cov.data(), edge, edge);
        Eigen::LLT<Eigen::MatrixXd> llt(gam);
        if (llt.info() != Eigen::Success)
            throw NonCausalPAR("leading error covariance is not positive definite");
        Eigen::MatrixXd el = llt.matrixL();
        std::vector<double> eta(static_cast<std::size_t>(edge));
        for (int t = 1; t <= edge; ++t) {
            double pred = 0.0;
            for (int j = 1; j < t; ++j) pred += el(t - 1, j - 1) * eta[static_cast<std::size_t>(j - 1)];
            const double root = el(t - 1, t - 1);
            out.one_step_pred[static_cast<std::size_t>(t - 1)] = mu[static_cast<std::size_t>(t - 1)] + pred;
            out.pred_var[static_cast<std::size_t>(t - 1)] = root * root;
            eta[static_cast<std::size_t>(t - 1)] = (resid[static_cast<std::size_t>(t - 1)] - pred) / root;
        }
    }
    for (int t = p + 1; t <= n; ++t) {
        const int nu = season_of(t, T);
        double pred = 0.0;
        for (int k = 1; k <= p; ++k) pred += par.phi_at(nu, k) * resid[static_cast<std::size_t>(t - k - 1)];
        out.one_step_pred[static_cast<std::size_t>(t - 1)] = mu[static_cast<std::size_t>(t - 1)] + pred;
        out.pred_var[static_cast<std::size_t>(t - 1)] = par.sigma2[static_cast<std::size_t>(nu - 1)];
    }
    return out;
}

}  // namespace mdlseg
