#include "heavyclip/clipping.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "heavyclip/csv.hpp"
#include "heavyclip/kahan.hpp"

namespace heavyclip {

void clip_into(std::span<const double> g, double lambda, std::span<double> out) {
    double n = norm(g);
    double c = (n > lambda) ? lambda / n : 1.0;
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = c * g[i];
}

Point clip(const Point& g, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("clip: lambda must be > 0");
    if (!all_finite(g)) throw std::invalid_argument("clip: non-finite gradient estimate");
    Point out(g.size());
    clip_into(g, lambda, out);
    return out;
}

ClipDecomposition decompose_clip_error(const Point& grad_true, const Point& clipped,
                                       const Point& conditional_mean, bool exact) {
    ClipDecomposition d;
    d.exact_conditional_mean = exact;
    d.theta = clipped - grad_true;
    d.theta_u = clipped - conditional_mean;
    d.theta_b = d.theta - d.theta_u;  // keeps theta == theta_u + theta_b exact
    return d;
}

namespace {

Lemma2Report make_report(const NoiseModel& model, double grad_norm, double lambda) {
    auto mom = model.certified_moment();
    Lemma2Report r;
    r.grad_norm = grad_norm;
    r.lambda = lambda;
    r.p = mom.p;
    r.sigma = std::pow(mom.sigma_p, 1.0 / mom.p);
    r.bias_bound = 4.0 * mom.sigma_p * std::pow(lambda, 1.0 - mom.p);
    r.bias_bound_intermediate = std::pow(2.0, mom.p) * mom.sigma_p * std::pow(lambda, 1.0 - mom.p);
    r.u_sq_bound = 16.0 * mom.sigma_p * std::pow(lambda, 2.0 - mom.p);
    r.u_norm_bound = 2.0 * lambda;
    return r;
}

}  // namespace

Lemma2Report verify_lemma2(const NoiseModel& model, double grad_norm, double lambda,
                           long n_mc, RngStream& rng) {
    if (!(lambda > 0.0)) throw std::invalid_argument("verify_lemma2: lambda must be > 0");
    if (!(grad_norm >= 0.0) || grad_norm > 0.5 * lambda)
        throw std::invalid_argument(
            "verify_lemma2: the bias/variance bounds require ||grad f|| <= lambda/2 "
            "(Lemma 2 precondition); got ||grad f|| = " +
            std::to_string(grad_norm) + ", lambda = " + std::to_string(lambda));

    Lemma2Report rep = make_report(model, grad_norm, lambda);

    const bool scalar_case =
        model.kind() == NoiseModel::Kind::two_point || model.dim() == 1;
    if (scalar_case) {
        ClippedMoment cm = clipped_moment_oracle_1d(model, grad_norm, lambda);
        rep.exact = true;
        rep.bias_norm = std::abs(cm.bias);
        rep.u_sq_moment = cm.u_second_moment;
        if (model.kind() == NoiseModel::Kind::two_point) {
            const double atoms[3] = {grad_norm, grad_norm + model.magnitude(),
                                     grad_norm - model.magnitude()};
            double mx = 0.0;
            for (double a : atoms) {
                double c = std::clamp(a, -lambda, lambda);
                mx = std::max(mx, std::abs(c - cm.mean_clipped));
            }
            rep.u_norm_max = mx;
        } else if (model.kind() == NoiseModel::Kind::gaussian && model.sigma() == 0.0) {
            rep.u_norm_max = 0.0;
        } else {
            // continuous with full-line reach: clip attains +/- lambda
            rep.u_norm_max = std::max(std::abs(lambda - cm.mean_clipped),
                                      std::abs(-lambda - cm.mean_clipped));
        }
        rep.pass = rep.bias_norm <= rep.bias_bound && rep.u_sq_moment <= rep.u_sq_bound &&
                   rep.u_norm_max <= rep.u_norm_bound + 1e-9;
        return rep;
    }

    // Monte-Carlo path: inner estimate of the conditional mean, outer pass for
    // the centered moments.
    if (n_mc < 100000)
        throw std::invalid_argument("verify_lemma2: Monte-Carlo path requires n_mc >= 1e5");
    const int d = model.dim();
    Point g(d, 0.0);
    g[0] = grad_norm;

    const long n_inner = 10000;
    RngStream inner_rng = rng.substream(1);
    Point xi(d), ghat(d), gt(d);
    std::vector<KahanSum> mean_acc(d);
    for (long i = 0; i < n_inner; ++i) {
        model.sample_into(inner_rng, xi);
        for (int k = 0; k < d; ++k) ghat[k] = g[k] + xi[k];
        clip_into(ghat, lambda, gt);
        for (int k = 0; k < d; ++k) mean_acc[k].add(gt[k]);
    }
    Point m(d);
    for (int k = 0; k < d; ++k) m[k] = mean_acc[k].value() / static_cast<double>(n_inner);

    RngStream outer_rng = rng.substream(2);
    KahanSum u2_acc, u4_acc;
    std::vector<KahanSum> msq_acc(d);
    double u_max = 0.0;
    for (long i = 0; i < n_mc; ++i) {
        model.sample_into(outer_rng, xi);
        for (int k = 0; k < d; ++k) ghat[k] = g[k] + xi[k];
        clip_into(ghat, lambda, gt);
        double u2 = 0.0;
        for (int k = 0; k < d; ++k) {
            double dlt = gt[k] - m[k];
            u2 += dlt * dlt;
            msq_acc[k].add(gt[k]);
        }
        u2_acc.add(u2);
        u4_acc.add(u2 * u2);
        u_max = std::max(u_max, std::sqrt(u2));
    }
    double u2_mean = u2_acc.value() / static_cast<double>(n_mc);
    double u2_var = std::max(0.0, u4_acc.value() / static_cast<double>(n_mc) - u2_mean * u2_mean);
    rep.u_sq_moment = u2_mean;
    rep.u_sq_se = std::sqrt(u2_var / static_cast<double>(n_mc));
    rep.u_norm_max = u_max;

    // bias from the outer mean estimate; E||m_hat - m||^2 = E||theta_u||^2 / n
    Point m2(d);
    for (int k = 0; k < d; ++k)
        m2[k] = msq_acc[k].value() / static_cast<double>(n_mc);
    Point bias_vec(d);
    for (int k = 0; k < d; ++k) bias_vec[k] = m2[k] - g[k];
    rep.bias_norm = norm(bias_vec);
    rep.bias_se = std::sqrt(u2_mean / static_cast<double>(n_mc));
    rep.exact = false;
    rep.pass = rep.bias_norm <= rep.bias_bound + 4.0 * rep.bias_se &&
               rep.u_sq_moment <= rep.u_sq_bound + 4.0 * rep.u_sq_se &&
               rep.u_norm_max <= rep.u_norm_bound + 1e-9;
    return rep;
}

std::vector<Lemma2Report> lemma2_sweep(const NoiseModel& model,
                                       const std::vector<double>& lambdas, long n_mc,
                                       RngStream& rng) {
    std::vector<Lemma2Report> out;
    out.reserve(lambdas.size());
    for (double lam : lambdas) out.push_back(verify_lemma2(model, 0.5 * lam, lam, n_mc, rng));
    return out;
}

std::string lemma2_sweep_csv(const std::vector<Lemma2Report>& rows) {
    std::ostringstream os;
    os << csv_version_header() << "\n";
    os << "lambda,bias_norm,bias_bound,u_sq_moment,u_sq_bound,pass\n";
    for (const auto& r : rows) {
        os << csv_num(r.lambda) << ',' << csv_num(r.bias_norm) << ',' << csv_num(r.bias_bound)
           << ',' << csv_num(r.u_sq_moment) << ',' << csv_num(r.u_sq_bound) << ','
           << (r.pass ? 1 : 0) << "\n";
    }
    return os.str();
}

}  // namespace heavyclip
