#ifndef CROSSTAG_DIAGNOSTICS_HPP
#define CROSSTAG_DIAGNOSTICS_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "crosstag/corpus.hpp"

namespace crosstag {

// A trained tagger: sentence in, tag indices out.
using Tagger = std::function<std::vector<int>(const Sentence&)>;

// A training procedure: corpus + seed in, trained tagger out. Embeddings and
// other fixed inputs are captured inside the closure.
using Learner = std::function<Tagger(const TaggedCorpus&, std::uint64_t seed)>;

// Capacity probe: how well a learner can fit uniformly random labels.
// `fit` is training-set token accuracy on the random labels, averaged over
// trials; `excess` over the 1/|tagset| chance level is the complexity proxy.
struct RademacherReport {
    std::string learner;
    long long tokens = 0;  // training tokens per trial
    int trials = 0;
    double fit = 0.0;
    double chance = 0.0;
    double excess = 0.0;
    double std_error = 0.0;  // of the mean fit, across trials
};

// Stability probe: train k models on random subsamples of l sentences and
// measure, over validation tokens, the mean share of models disagreeing
// with the majority prediction. Lies in [0, 1 - 1/k].
struct VarianceReport {
    std::string learner;
    int subsample_size = 0;       // l, in sentences
    int subsamples = 0;           // k
    long long validation_tokens = 0;  // m'
    double integrated_variance = 0.0;
};

RademacherReport rademacher_estimate(const Learner& learner, std::string learner_id,
                                     const std::vector<Sentence>& sentences, const Tagset& tagset,
                                     int trials, std::uint64_t seed);

VarianceReport integrated_variance(const Learner& learner, std::string learner_id,
                                   const TaggedCorpus& train,
                                   const std::vector<Sentence>& validation, int subsample_size,
                                   int subsamples, std::uint64_t seed);

// Agreement computation behind integrated_variance, exposed for direct
// checks: predictions[i] is model i's tags over one shared token stream.
double integrated_variance_from_predictions(const std::vector<std::vector<int>>& predictions);

// Flat key<TAB>value text, one metric per line.
std::string format_report(const RademacherReport& report);
std::string format_report(const VarianceReport& report);

}  // namespace crosstag

#endif
