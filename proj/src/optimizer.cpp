#include "crosstag/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace crosstag {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

struct Correction {
    std::vector<double> s;  // x_{k+1} - x_k
    std::vector<double> y;  // g_k - g_{k+1}  (ascent convention)
    double rho;             // 1 / (y . s)
};

// Two-loop recursion returning an ascent direction H*g. The initial metric
// is h0 (identity when empty), rescaled by gamma = s.y / y.H0y once
// curvature pairs exist.
std::vector<double> two_loop(const std::deque<Correction>& history, const std::vector<double>& g,
                             const std::vector<double>& h0) {
    std::vector<double> q = g;
    std::vector<double> a(history.size());
    for (std::size_t i = history.size(); i-- > 0;) {
        a[i] = history[i].rho * dot(history[i].s, q);
        for (std::size_t j = 0; j < q.size(); ++j) q[j] -= a[i] * history[i].y[j];
    }
    if (!h0.empty()) {
        for (std::size_t j = 0; j < q.size(); ++j) q[j] *= h0[j];
    }
    if (!history.empty()) {
        const Correction& last = history.back();
        double yhy = 0.0;
        if (h0.empty()) {
            yhy = dot(last.y, last.y);
        } else {
            for (std::size_t j = 0; j < last.y.size(); ++j) yhy += last.y[j] * h0[j] * last.y[j];
        }
        double gamma = dot(last.s, last.y) / yhy;
        for (auto& v : q) v *= gamma;
    }
    for (std::size_t i = 0; i < history.size(); ++i) {
        double b = history[i].rho * dot(history[i].y, q);
        for (std::size_t j = 0; j < q.size(); ++j) q[j] += (a[i] - b) * history[i].s[j];
    }
    return q;
}

struct Evaluation {
    double value;
    double slope;  // grad . direction
};

}  // namespace

MaximizeResult maximize(const ObjectiveFn& objective, std::vector<double> x0,
                        const OptimizerConfig& config, const IterationCallback& on_iteration,
                        const std::vector<double>& h0_diag) {
    const std::size_t m = x0.size();
    if (config.memory < 1) throw DataError("optimizer memory must be at least 1");
    if (config.max_iterations < 1) throw DataError("max iterations must be at least 1");
    if (!(config.gradient_tolerance > 0.0)) throw DataError("gradient tolerance must be positive");
    if (!(config.wolfe_c1 > 0.0 && config.wolfe_c1 < config.wolfe_c2 && config.wolfe_c2 < 1.0)) {
        throw DataError("Wolfe constants must satisfy 0 < c1 < c2 < 1");
    }
    if (config.max_line_search < 1) throw DataError("line-search budget must be at least 1");
    if (!h0_diag.empty()) {
        if (h0_diag.size() != m) throw DataError("initial metric size does not match the point");
        for (double h : h0_diag) {
            if (!(h > 0.0) || !std::isfinite(h)) throw DataError("initial metric must be positive");
        }
    }
    MaximizeResult result;
    result.point = std::move(x0);

    std::vector<double> grad(m, 0.0);
    std::vector<double> x_new(m), grad_new(m);
    std::deque<Correction> history;

    auto evaluate = [&](const std::vector<double>& x, std::vector<double>& g) {
        double f = objective(x, g);
        if (std::isnan(f)) throw NumericError("objective returned NaN");
        for (double v : g) {
            if (std::isnan(v)) throw NumericError("gradient returned NaN");
        }
        return f;
    };

    double f = evaluate(result.point, grad);
    double gnorm = norm(grad);
    auto record = [&](int iter, double value, double gn, double dd, double step) {
        IterationRecord rec{iter, value, gn, dd, step};
        result.trace.push_back(rec);
        if (on_iteration) on_iteration(rec);
    };
    record(0, f, gnorm, 0.0, 0.0);

    auto converged = [&](const std::vector<double>& x, double gn) {
        return gn <= config.gradient_tolerance * std::max(1.0, norm(x));
    };

    int iter = 0;
    result.converged = converged(result.point, gnorm);
    while (!result.converged && iter < config.max_iterations) {
        std::vector<double> direction = two_loop(history, grad, h0_diag);
        double slope0 = dot(grad, direction);
        if (!(slope0 > 0.0)) {
            // Curvature information went stale; fall back to steepest ascent.
            history.clear();
            direction = grad;
            slope0 = gnorm * gnorm;
            if (slope0 == 0.0) break;
        }

        // Strong Wolfe line search on phi(a) = f(x + a*d) (maximization:
        // sufficient increase and flattened slope).
        double alpha = history.empty() ? std::min(1.0, 1.0 / std::max(gnorm, 1e-12)) : 1.0;
        int evals = 0;
        auto phi = [&](double a) {
            for (std::size_t j = 0; j < m; ++j) x_new[j] = result.point[j] + a * direction[j];
            ++evals;
            double value = evaluate(x_new, grad_new);
            return Evaluation{value, dot(grad_new, direction)};
        };
        const double c1 = config.wolfe_c1;
        const double c2 = config.wolfe_c2;

        double accepted = -1.0;
        Evaluation at{};
        double lo = 0.0, hi = 0.0;
        double f_lo = f;
        bool bracketed = false;

        double alpha_prev = 0.0;
        double f_prev = f;
        while (evals < config.max_line_search) {
            Evaluation e = phi(alpha);
            if (e.value < f + c1 * alpha * slope0 || (evals > 1 && e.value <= f_prev)) {
                lo = alpha_prev;
                f_lo = f_prev;
                hi = alpha;
                bracketed = true;
                break;
            }
            if (std::abs(e.slope) <= c2 * slope0) {
                accepted = alpha;
                at = e;
                break;
            }
            if (e.slope <= 0.0) {
                lo = alpha;
                f_lo = e.value;
                hi = alpha_prev;
                bracketed = true;
                break;
            }
            alpha_prev = alpha;
            f_prev = e.value;
            alpha *= 2.0;
            if (alpha > 1e12) break;
        }

        if (accepted < 0.0 && bracketed) {
            while (evals < config.max_line_search) {
                double trial = 0.5 * (lo + hi);
                Evaluation e = phi(trial);
                if (e.value < f + c1 * trial * slope0 || e.value <= f_lo) {
                    hi = trial;
                } else {
                    if (std::abs(e.slope) <= c2 * slope0) {
                        accepted = trial;
                        at = e;
                        break;
                    }
                    if (e.slope * (hi - lo) <= 0.0) hi = lo;
                    lo = trial;
                    f_lo = e.value;
                }
                if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) {
                    // Interval collapsed; take the sufficient-increase point.
                    if (f_lo > f) {
                        Evaluation e_lo = phi(lo);
                        accepted = lo;
                        at = e_lo;
                    }
                    break;
                }
            }
        }

        if (accepted < 0.0) {
            throw NumericError("line search failed after " + std::to_string(evals) +
                               " evaluations");
        }

        // x_new/grad_new hold the state of the accepted evaluation.
        for (std::size_t j = 0; j < m; ++j) x_new[j] = result.point[j] + accepted * direction[j];

        Correction corr;
        corr.s.resize(m);
        corr.y.resize(m);
        for (std::size_t j = 0; j < m; ++j) {
            corr.s[j] = x_new[j] - result.point[j];
            corr.y[j] = grad[j] - grad_new[j];
        }
        double sy = dot(corr.s, corr.y);
        if (sy > 1e-12 * norm(corr.s) * norm(corr.y)) {
            corr.rho = 1.0 / sy;
            history.push_back(std::move(corr));
            if (static_cast<int>(history.size()) > config.memory) history.pop_front();
        }

        result.point.swap(x_new);
        grad.swap(grad_new);
        f = at.value;
        gnorm = norm(grad);
        ++iter;
        record(iter, f, gnorm, slope0, accepted);
        result.converged = converged(result.point, gnorm);
    }

    result.objective = f;
    result.iterations = iter;
    return result;
}

CrfTrainResult train_crf(const RegularizedObjective& objective, const TaggedCorpus& corpus,
                         const EmbeddingTable& emb, const OptimizerConfig& config, int threads,
                         const IterationCallback& on_iteration) {
    if (corpus.empty()) throw DataError("training corpus is empty");
    FeatureModel scratch(objective.space());
    ObjectiveFn fn = [&](const std::vector<double>& x, std::vector<double>& grad) {
        scratch.weights = x;
        return objective.value_and_gradient(scratch, corpus, emb, grad, threads);
    };

    // The penalty Hessian is diag(1/sigma_j^2) exactly; folding it into the
    // initial metric (with a unit allowance for likelihood curvature) keeps
    // tight-prior objectives well conditioned.
    std::vector<double> h0(objective.variances().size());
    for (std::size_t j = 0; j < h0.size(); ++j) {
        const double v = objective.variances()[j];
        h0[j] = v / (v + 1.0);
    }

    MaximizeResult res = maximize(fn, objective.initial_point(), config, on_iteration, h0);

    CrfTrainResult out{FeatureModel(objective.space()), std::move(res.trace), res.converged};
    out.model.weights = std::move(res.point);
    out.model.check_finite();
    return out;
}

}  // namespace crosstag
