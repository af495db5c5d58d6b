#ifndef CROSSTAG_CRF_HPP
#define CROSSTAG_CRF_HPP

#include <vector>

#include "crosstag/model.hpp"

namespace crosstag {

// Log-potentials and forward/backward messages for one sentence. All
// quantities live in log space.
class Lattice {
public:
    Lattice(const Sentence& sentence, const FeatureModel& model, const EmbeddingTable& emb);

    int length() const { return n_; }
    int num_tags() const { return num_tags_; }
    double log_partition() const { return log_z_; }

    double node_score(int t, int tag) const { return node_[t * num_tags_ + tag]; }
    double transition_score(int prev, int cur) const { return trans_[prev * num_tags_ + cur]; }
    double alpha(int t, int tag) const { return alpha_[t * num_tags_ + tag]; }
    double beta(int t, int tag) const { return beta_[t * num_tags_ + tag]; }

    // logZ recomputed from the backward messages; equals log_partition()
    // up to floating-point noise.
    double log_partition_backward() const;

    // Total log-score of a tag path (unnormalized).
    double path_score(const std::vector<int>& tags) const;

    // Posterior P(y_t = tag | x).
    double node_marginal(int t, int tag) const;
    // Posterior P(y_t = prev, y_{t+1} = cur | x) for t in [0, n-1).
    double edge_marginal(int t, int prev, int cur) const;

private:
    int n_;
    int num_tags_;
    std::vector<double> node_;   // n x T
    std::vector<double> trans_;  // T x T, [prev][cur]
    std::vector<double> alpha_;  // n x T
    std::vector<double> beta_;   // n x T
    double log_z_;
};

Lattice build_lattice(const Sentence& sentence, const FeatureModel& model,
                      const EmbeddingTable& emb);

// Sum over sentences of gold path score minus logZ; 0 on an empty corpus,
// never positive.
double log_likelihood(const FeatureModel& model, const TaggedCorpus& corpus,
                      const EmbeddingTable& emb, int threads = 1);

// Observed minus expected feature counts.
std::vector<double> gradient_log_likelihood(const FeatureModel& model, const TaggedCorpus& corpus,
                                            const EmbeddingTable& emb, int threads = 1);

// Both quantities from one inference pass; returns the log-likelihood and
// fills `grad` (resized to the feature-space size).
double log_likelihood_and_gradient(const FeatureModel& model, const TaggedCorpus& corpus,
                                   const EmbeddingTable& emb, std::vector<double>& grad,
                                   int threads = 1);

// Highest-scoring tag sequence; among ties, the one with the lowest
// canonical tag index at the earliest differing position.
std::vector<int> viterbi(const Sentence& sentence, const FeatureModel& model,
                         const EmbeddingTable& emb);

}  // namespace crosstag

#endif
