#include "crosstag/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace crosstag {

namespace {

// Uniform tag per token, driven by the engine directly so the sequence is
// pinned by the seed alone.
TaggedCorpus random_labels(const std::vector<Sentence>& sentences, const Tagset& tagset,
                           std::mt19937_64& rng) {
    TaggedCorpus out(tagset);
    const std::uint64_t num_tags = static_cast<std::uint64_t>(tagset.size());
    for (const Sentence& sentence : sentences) {
        TaggedSentence labeled{sentence, {}};
        labeled.tags.reserve(sentence.tokens.size());
        for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
            labeled.tags.push_back(static_cast<int>(rng() % num_tags));
        }
        out.add(std::move(labeled));
    }
    return out;
}

}  // namespace

RademacherReport rademacher_estimate(const Learner& learner, std::string learner_id,
                                     const std::vector<Sentence>& sentences, const Tagset& tagset,
                                     int trials, std::uint64_t seed) {
    if (trials < 3) throw DataError("rademacher estimate needs at least 3 trials");
    if (sentences.empty()) throw DataError("rademacher estimate needs a non-empty corpus");

    std::vector<double> fits;
    fits.reserve(static_cast<std::size_t>(trials));
    for (int trial = 0; trial < trials; ++trial) {
        const std::uint64_t trial_seed = mix_seed(seed, static_cast<std::uint64_t>(trial));
        std::mt19937_64 label_rng(mix_seed(trial_seed, 0));
        TaggedCorpus randomized = random_labels(sentences, tagset, label_rng);

        Tagger tagger = learner(randomized, mix_seed(trial_seed, 1));
        long long correct = 0, total = 0;
        for (const TaggedSentence& instance : randomized.sentences()) {
            std::vector<int> predicted = tagger(instance.sentence);
            for (std::size_t t = 0; t < instance.tags.size(); ++t) {
                correct += predicted[t] == instance.tags[t];
            }
            total += static_cast<long long>(instance.tags.size());
        }
        fits.push_back(static_cast<double>(correct) / static_cast<double>(total));
    }

    RademacherReport report;
    report.learner = std::move(learner_id);
    report.trials = trials;
    for (const Sentence& s : sentences) report.tokens += static_cast<long long>(s.tokens.size());
    report.fit = std::accumulate(fits.begin(), fits.end(), 0.0) / static_cast<double>(trials);
    report.chance = 1.0 / static_cast<double>(tagset.size());
    report.excess = report.fit - report.chance;
    double sq = 0.0;
    for (double f : fits) sq += (f - report.fit) * (f - report.fit);
    report.std_error = std::sqrt(sq / static_cast<double>(trials - 1)) /
                       std::sqrt(static_cast<double>(trials));
    return report;
}

double integrated_variance_from_predictions(const std::vector<std::vector<int>>& predictions) {
    if (predictions.size() < 2) throw DataError("integrated variance needs at least 2 models");
    const std::size_t k = predictions.size();
    const std::size_t tokens = predictions[0].size();
    for (const auto& p : predictions) {
        if (p.size() != tokens) throw DataError("prediction streams differ in length");
    }
    if (tokens == 0) throw DataError("integrated variance needs a non-empty validation set");

    double disagreement = 0.0;
    for (std::size_t t = 0; t < tokens; ++t) {
        // Majority tag across the k models; ties go to the lowest tag index.
        int best_tag = -1, best_count = 0;
        for (std::size_t i = 0; i < k; ++i) {
            int tag = predictions[i][t];
            int count = 0;
            for (std::size_t j = 0; j < k; ++j) count += predictions[j][t] == tag;
            if (count > best_count || (count == best_count && tag < best_tag)) {
                best_tag = tag;
                best_count = count;
            }
        }
        disagreement += 1.0 - static_cast<double>(best_count) / static_cast<double>(k);
    }
    return disagreement / static_cast<double>(tokens);
}

VarianceReport integrated_variance(const Learner& learner, std::string learner_id,
                                   const TaggedCorpus& train,
                                   const std::vector<Sentence>& validation, int subsample_size,
                                   int subsamples, std::uint64_t seed) {
    if (subsample_size < 1) throw DataError("subsample size must be positive");
    if (static_cast<std::size_t>(subsample_size) >= train.size()) {
        throw DataError("subsample size must be smaller than the training corpus");
    }
    if (subsamples < 2) throw DataError("integrated variance needs at least 2 subsamples");
    if (validation.empty()) throw DataError("integrated variance needs a validation set");

    std::vector<std::vector<int>> predictions(static_cast<std::size_t>(subsamples));
    for (int i = 0; i < subsamples; ++i) {
        const std::uint64_t sub_seed = mix_seed(seed, static_cast<std::uint64_t>(i));
        std::mt19937_64 pick_rng(mix_seed(sub_seed, 0));

        // Partial Fisher-Yates: l distinct sentence indices, then corpus
        // order within the subsample.
        std::vector<std::size_t> pool(train.size());
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (int j = 0; j < subsample_size; ++j) {
            std::size_t pick = static_cast<std::size_t>(j) +
                               static_cast<std::size_t>(pick_rng() % (pool.size() - static_cast<std::size_t>(j)));
            std::swap(pool[static_cast<std::size_t>(j)], pool[pick]);
        }
        pool.resize(static_cast<std::size_t>(subsample_size));
        std::sort(pool.begin(), pool.end());

        TaggedCorpus subsample(train.tagset());
        for (std::size_t idx : pool) subsample.add(train.sentences()[idx]);

        Tagger tagger = learner(subsample, mix_seed(sub_seed, 1));
        std::vector<int>& flat = predictions[static_cast<std::size_t>(i)];
        for (const Sentence& sentence : validation) {
            std::vector<int> tags = tagger(sentence);
            flat.insert(flat.end(), tags.begin(), tags.end());
        }
    }

    VarianceReport report;
    report.learner = std::move(learner_id);
    report.subsample_size = subsample_size;
    report.subsamples = subsamples;
    for (const Sentence& s : validation) {
        report.validation_tokens += static_cast<long long>(s.tokens.size());
    }
    report.integrated_variance = integrated_variance_from_predictions(predictions);
    return report;
}

std::string format_report(const RademacherReport& report) {
    std::ostringstream out;
    out << "report\trademacher\n";
    out << "learner\t" << report.learner << '\n';
    out << "tokens\t" << report.tokens << '\n';
    out << "trials\t" << report.trials << '\n';
    out << "fit\t" << fmt_double(report.fit) << '\n';
    out << "chance\t" << fmt_double(report.chance) << '\n';
    out << "excess\t" << fmt_double(report.excess) << '\n';
    out << "stderr\t" << fmt_double(report.std_error) << '\n';
    return out.str();
}

std::string format_report(const VarianceReport& report) {
    std::ostringstream out;
    out << "report\tvariance\n";
    out << "learner\t" << report.learner << '\n';
    out << "subsample_size\t" << report.subsample_size << '\n';
    out << "subsamples\t" << report.subsamples << '\n';
    out << "validation_tokens\t" << report.validation_tokens << '\n';
    out << "integrated_variance\t" << fmt_double(report.integrated_variance) << '\n';
    return out.str();
}

}  // namespace crosstag
