#include "mdlseg/regression.hpp"

#include <cmath>
#include <limits>

#include "mdlseg/par.hpp"

namespace mdlseg {

namespace {

MeanParams unpack_beta(const Eigen::VectorXd& beta, int period, int m, bool include_trend) {
    MeanParams mean;
    mean.seasonal_means.assign(beta.data(), beta.data() + period);
    mean.trend = include_trend ? beta(period) : 0.0;
    const int base = period + (include_trend ? 1 : 0);
    mean.shifts.assign(beta.data() + base, beta.data() + base + m);
    return mean;
}

LinearFit solve_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                              const Eigen::MatrixXd& raw_design) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-12);
    if (qr.rank() < design.cols())
        throw RankDeficient("design matrix loses column rank (rank " + std::to_string(qr.rank()) +
                            " of " + std::to_string(design.cols()) + ")");
    LinearFit fit;
    fit.beta = qr.solve(y);
    fit.whitened_rss = (y - design * fit.beta).squaredNorm();
    Eigen::VectorXd fitted = raw_design * fit.beta;
    fit.fitted.assign(fitted.data(), fitted.data() + fitted.size());
    fit.residuals.resize(fit.fitted.size());
    return fit;
}

}  // namespace

Eigen::MatrixXd build_design_matrix(int n_obs, int period, const Segmentation& seg,
                                    bool include_trend) {
    validate_structure(seg, n_obs);
    const int m = seg.num_changepoints();
    const int cols = period + (include_trend ? 1 : 0) + m;
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n_obs, cols);
    for (int t = 1; t <= n_obs; ++t) {
        design(t - 1, season_of(t, period) - 1) = 1.0;
        if (include_trend) design(t - 1, period) = t;
    }
    const int base = period + (include_trend ? 1 : 0);
    for (int j = 0; j < m; ++j) {
        const int lo = seg.changepoints[static_cast<std::size_t>(j)];
        const int hi = j + 1 < m ? seg.changepoints[static_cast<std::size_t>(j) + 1] : n_obs + 1;
        for (int t = lo; t < hi; ++t) design(t - 1, base + j) = 1.0;
    }
    return design;
}

LinearFit ols_fit(const PeriodicSeries& x, const Segmentation& seg, bool include_trend) {
    Eigen::MatrixXd design = build_design_matrix(x.length(), x.period, seg, include_trend);
    Eigen::Map<const Eigen::VectorXd> y(x.values.data(), x.length());
    LinearFit fit = solve_least_squares(design, y, design);
    for (std::size_t i = 0; i < fit.residuals.size(); ++i)
        fit.residuals[i] = x.values[i] - fit.fitted[i];
    return fit;
}

LinearFit gls_fit(const PeriodicSeries& x, const Segmentation& seg, const PARModel& par,
                  bool include_trend, Eigen::MatrixXd* beta_cov) {
    const int n = x.length();
    const int T = x.period;
    const int p = par.order;
    for (double s2 : par.sigma2)
        if (s2 <= 0.0) throw NonPositiveVariance("innovation variance must be > 0");

    Eigen::MatrixXd design = build_design_matrix(n, T, seg, include_trend);
    Eigen::Map<const Eigen::VectorXd> y(x.values.data(), n);

    Eigen::MatrixXd wd(n, design.cols());
    Eigen::VectorXd wy(n);
    const int edge = std::min(p, n);
    if (edge > 0) {
        std::vector<double> cov = leading_covariance(par, edge);
        Eigen::Map<Eigen::MatrixXd> gam(cov.data(), edge, edge);
        Eigen::LLT<Eigen::MatrixXd> llt(gam);
        if (llt.info() != Eigen::Success)
            throw NonCausalPAR("leading error covariance is not positive definite");
        wd.topRows(edge) = llt.matrixL().solve(design.topRows(edge));
        wy.head(edge) = llt.matrixL().solve(y.head(edge));
    }
    for (int t = p + 1; t <= n; ++t) {
        const int nu = season_of(t, T);
        const double inv_sd = 1.0 / std::sqrt(par.sigma2[static_cast<std::size_t>(nu - 1)]);
        Eigen::RowVectorXd row = design.row(t - 1);
        double rhs = y(t - 1);
        for (int k = 1; k <= p; ++k) {
            row -= par.phi_at(nu, k) * design.row(t - k - 1);
            rhs -= par.phi_at(nu, k) * y(t - k - 1);
        }
        wd.row(t - 1) = row * inv_sd;
        wy(t - 1) = rhs * inv_sd;
    }

    LinearFit fit = solve_least_squares(wd, wy, design);
    for (int i = 0; i < n; ++i) fit.residuals[static_cast<std::size_t>(i)] = x.values[static_cast<std::size_t>(i)] - fit.fitted[static_cast<std::size_t>(i)];
    if (beta_cov) {
        Eigen::MatrixXd normal = wd.transpose() * wd;
        *beta_cov = normal.ldlt().solve(Eigen::MatrixXd::Identity(normal.rows(), normal.cols()));
    }
    return fit;
}

FittedModel cochrane_orcutt(const PeriodicSeries& x, const Segmentation& seg,
                            const FitOptions& opts, CochraneOrcuttTrace* trace,
                            Eigen::MatrixXd* beta_cov) {
    const int T = x.period;
    const int p = seg.par_order;
    const int m = seg.num_changepoints();

    FittedModel model;
    model.segmentation = seg;

    auto record = [&](const LinearFit& fit) {
        if (trace) {
            trace->whitened_rss.push_back(fit.whitened_rss);
            trace->betas.push_back(fit.beta);
        }
    };

    // Data the mean function reproduces exactly (up to rounding) carries no
    // information about the noise; the moment equations on such residuals
    // return meaningless near-zero variances, so flag it before they do.
    double x_scale = 1.0;
    for (double v : x.values) x_scale = std::max(x_scale, std::abs(v));
    auto interpolates = [&](const LinearFit& fit) {
        double worst = 0.0;
        for (double r : fit.residuals) worst = std::max(worst, std::abs(r));
        return worst <= 1e-12 * x_scale;
    };

    LinearFit fit = ols_fit(x, seg, opts.include_trend);
    record(fit);

    auto finish_degenerate = [&](const LinearFit& last) {
        model.mean = unpack_beta(last.beta, T, m, opts.include_trend);
        model.residuals = last.residuals;
        model.par.order = p;
        model.par.period = T;
        model.par.phi.assign(static_cast<std::size_t>(T) * static_cast<std::size_t>(p), 0.0);
        SeasonalACVF acvf = seasonal_acvf(last.residuals, T, 0);
        model.par.sigma2.resize(static_cast<std::size_t>(T));
        for (int nu = 1; nu <= T; ++nu)
            model.par.sigma2[static_cast<std::size_t>(nu - 1)] = acvf.at(nu, 0);
        model.one_step_pred = last.fitted;
        model.pred_var.resize(x.values.size());
        for (int t = 1; t <= x.length(); ++t)
            model.pred_var[static_cast<std::size_t>(t - 1)] =
                model.par.sigma2[static_cast<std::size_t>(season_of(t, T) - 1)];
        model.degenerate = true;
        model.mdl_nats = std::numeric_limits<double>::infinity();
        return model;
    };

    PARModel par;
    model.converged = false;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        model.iterations = it;
        if (interpolates(fit)) return finish_degenerate(fit);
        try {
            par = yule_walker(fit.residuals, T, p);
        } catch (const NonPositiveVariance&) {
            return finish_degenerate(fit);
        }
        LinearFit next = gls_fit(x, seg, par, opts.include_trend, beta_cov);
        record(next);
        const double change = (next.beta - fit.beta).cwiseAbs().maxCoeff();
        const double scale = std::max(1.0, fit.beta.cwiseAbs().maxCoeff());
        fit = std::move(next);
        if (change <= opts.beta_tol * scale) {
            model.converged = true;
            break;
        }
    }

    // Refresh the error model from the final residuals so the stored pieces
    // are mutually consistent.
    if (interpolates(fit)) return finish_degenerate(fit);
    try {
        par = yule_walker(fit.residuals, T, p);
    } catch (const NonPositiveVariance&) {
        return finish_degenerate(fit);
    }

    model.mean = unpack_beta(fit.beta, T, m, opts.include_trend);
    model.residuals = fit.residuals;
    model.par = par;
    OneStepPredictions pred = one_step_predictions(x, model.mean, seg, par);
    model.one_step_pred = std::move(pred.one_step_pred);
    model.pred_var = std::move(pred.pred_var);
    model.mdl_nats = std::numeric_limits<double>::quiet_NaN();
    return model;
}

}  // namespace mdlseg
