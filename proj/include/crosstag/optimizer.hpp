#ifndef CROSSTAG_OPTIMIZER_HPP
#define CROSSTAG_OPTIMIZER_HPP

#include <functional>
#include <vector>

#include "crosstag/priors.hpp"

namespace crosstag {

struct OptimizerConfig {
    int memory = 10;                   // L-BFGS history size
    int max_iterations = 200;
    double gradient_tolerance = 1e-5;  // ||g|| <= tol * max(1, ||x||)
    double wolfe_c1 = 1e-4;            // sufficient increase
    double wolfe_c2 = 0.9;             // curvature
    int max_line_search = 50;          // objective evaluations per search
};

struct IterationRecord {
    int iteration;
    double objective;
    double gradient_norm;
    // Ascent directional derivative grad . d of the step taken from this
    // iterate; 0 for the initial record.
    double directional_derivative;
    double step;
};

struct MaximizeResult {
    std::vector<double> point;
    double objective = 0.0;
    std::vector<IterationRecord> trace;
    bool converged = false;
    int iterations = 0;
};

// Evaluates the objective at x and fills grad (already sized like x).
using ObjectiveFn = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;
using IterationCallback = std::function<void(const IterationRecord&)>;

// Limited-memory quasi-Newton ascent (two-loop recursion) with a strong
// Wolfe line search. The trace of objective values is non-decreasing.
// Throws NumericError if the objective returns NaN or the line search
// exhausts its evaluation budget.
//
// `h0_diag`, when non-empty, is a fixed positive diagonal used as the
// initial inverse-Hessian metric in the two-loop recursion (rescaled each
// iteration by the usual s.y/y.H0y factor); empty means the identity. It
// helps when part of the curvature is known analytically, e.g. a Gaussian
// penalty with per-feature variances.
MaximizeResult maximize(const ObjectiveFn& objective, std::vector<double> x0,
                        const OptimizerConfig& config, const IterationCallback& on_iteration = {},
                        const std::vector<double>& h0_diag = {});

struct CrfTrainResult {
    FeatureModel model;
    std::vector<IterationRecord> trace;
    bool converged = false;
};

// Batch training of one regularized objective. L2 starts from zero
// weights, the prior-centered objectives from the prior means.
CrfTrainResult train_crf(const RegularizedObjective& objective, const TaggedCorpus& corpus,
                         const EmbeddingTable& emb, const OptimizerConfig& config,
                         int threads = 1, const IterationCallback& on_iteration = {});

}  // namespace crosstag

#endif
