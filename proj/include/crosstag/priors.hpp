#ifndef CROSSTAG_PRIORS_HPP
#define CROSSTAG_PRIORS_HPP

#include <string>
#include <vector>

#include "crosstag/crf.hpp"
#include "crosstag/model.hpp"

namespace crosstag {

// Per-feature Gaussian estimated from k source-language models. Features
// observed in no source carry mean 0 and the average observed variance.
struct GaussianPrior {
    static constexpr double kVarianceFloor = 1e-6;

    FeatureSpace space;
    std::vector<double> means;
    std::vector<double> variances;      // floored population variances
    std::vector<std::uint8_t> observed;  // feature seen in >= 1 source file
    double default_variance = kVarianceFloor;  // sigma^2_av
    int source_count = 0;

    explicit GaussianPrior(FeatureSpace s);

    // With a single source the observed variance is identically zero; the
    // widths resolve to the shared regularization parameter C instead.
    bool needs_resolution() const { return source_count == 1; }
    GaussianPrior resolved(double C) const;
};

// Mean and floored population variance of each feature's weight across the
// sources; absent features count as weight 0.
GaussianPrior estimate_prior(const std::vector<ModelFile>& sources);

// Header (feature space, k, sigma^2_av, floor), then one
// "key<TAB>mean<TAB>variance" line per observed feature. Single-source
// priors store the sentinel -1 in the variance column.
void write_prior(const GaussianPrior& prior, const std::string& path);
GaussianPrior read_prior(const std::string& path);
GaussianPrior read_prior(const std::string& path, const FeatureSpace& expected);

// The three training objectives. All are log-likelihood minus a quadratic
// penalty sum_j (w_j - mu_j)^2 / (2 sigma_j^2); the kinds differ in where
// the centers and widths come from:
//   L2       mu = 0,          sigma^2 = C
//   L2Prior  mu = prior mean, sigma^2 = C
//   EmpGauss mu = prior mean, sigma^2 = prior variance (C for k = 1)
class RegularizedObjective {
public:
    enum class Kind { L2, L2Prior, EmpGauss };

    static RegularizedObjective l2(const FeatureSpace& space, double C);
    static RegularizedObjective l2_prior(const GaussianPrior& prior, double C);
    static RegularizedObjective emp_gauss(const GaussianPrior& prior, double C);

    Kind kind() const { return kind_; }
    double strength() const { return strength_; }
    const FeatureSpace& space() const { return space_; }
    const std::vector<double>& means() const { return means_; }
    const std::vector<double>& variances() const { return variances_; }

    double penalty(const std::vector<double>& weights) const;
    void subtract_penalty_gradient(const std::vector<double>& weights,
                                   std::vector<double>& grad) const;

    double value(const FeatureModel& model, const TaggedCorpus& corpus,
                 const EmbeddingTable& emb, int threads = 1) const;
    std::vector<double> gradient(const FeatureModel& model, const TaggedCorpus& corpus,
                                 const EmbeddingTable& emb, int threads = 1) const;
    double value_and_gradient(const FeatureModel& model, const TaggedCorpus& corpus,
                              const EmbeddingTable& emb, std::vector<double>& grad,
                              int threads = 1) const;

    // Optimizer starting point: 0 for L2, the prior means otherwise.
    std::vector<double> initial_point() const;

private:
    RegularizedObjective(Kind kind, FeatureSpace space, double strength,
                         std::vector<double> means, std::vector<double> variances);

    Kind kind_;
    FeatureSpace space_;
    double strength_;
    std::vector<double> means_;
    std::vector<double> variances_;
};

const char* objective_kind_name(RegularizedObjective::Kind kind);

}  // namespace crosstag

#endif
