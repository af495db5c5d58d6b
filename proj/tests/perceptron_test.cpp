#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "crosstag/crf.hpp"
#include "crosstag/perceptron.hpp"
#include "doctest.h"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace crosstag;
using namespace crosstag::testing;

namespace {

struct ToySetup {
    Tagset tagset;
    TaggedCorpus corpus;
    EmbeddingTable emb;
    FeatureSpace space;
};

ToySetup separable_toy() {
    Tagset ts({"D", "N", "V"});
    TaggedCorpus corpus(ts);
    corpus.add({{{"the", "dog", "barks"}}, {0, 1, 2}});
    corpus.add({{{"the", "cat", "sleeps"}}, {0, 1, 2}});
    EmbeddingTable emb(2);
    emb.insert("the", {1.0, 0.0});
    emb.insert("dog", {0.0, 1.0});
    emb.insert("cat", {0.2, 0.8});
    emb.insert("barks", {-0.9, 0.1});
    emb.insert("sleeps", {-0.8, 0.2});
    return ToySetup{ts, std::move(corpus), std::move(emb), FeatureSpace(ts, 2)};
}

GaussianPrior uniform_sigma_prior(const FeatureSpace& space, double sigma,
                                  std::vector<double> means, int sources = 3) {
    GaussianPrior prior(space);
    prior.source_count = sources;
    prior.means = std::move(means);
    std::fill(prior.variances.begin(), prior.variances.end(), sigma * sigma);
    std::fill(prior.observed.begin(), prior.observed.end(), 1);
    prior.default_variance = std::max(sigma * sigma, GaussianPrior::kVarianceFloor);
    return prior;
}

}  // namespace

TEST_CASE("a separable corpus is fit with zero mistakes in the last epoch") {
    ToySetup toy = separable_toy();
    PerceptronConfig cfg;
    cfg.epochs = 3;
    cfg.decay = 0.0;
    PerceptronStats stats;
    FeatureModel model = train_baseline(toy.corpus, toy.emb, cfg, nullptr, &stats);

    REQUIRE(stats.epoch_mistakes.size() == 3);
    CHECK(stats.epoch_mistakes.back() == 0);
    for (const auto& inst : toy.corpus.sentences()) {
        CHECK(viterbi(inst.sentence, model, toy.emb) == inst.tags);
    }
}

TEST_CASE("a single no-decay pass from zero is the textbook update") {
    ToySetup toy = separable_toy();
    TaggedCorpus one(toy.tagset);
    one.add(toy.corpus.sentences()[0]);

    PerceptronConfig cfg;
    cfg.epochs = 1;
    cfg.decay = 0.0;
    PerceptronStats stats;
    FeatureModel model = train_baseline(one, toy.emb, cfg, nullptr, &stats);
    CHECK(stats.total_updates == 1);

    // With zero weights the decode is all-ties, broken to tag 0 everywhere.
    const TaggedSentence& gold = one.sentences()[0];
    std::vector<int> y0(gold.tags.size(), 0);
    FeatureVector phi_gold =
        global_features(toy.space, gold.sentence, gold.tags, toy.emb);
    FeatureVector phi_pred = global_features(toy.space, gold.sentence, y0, toy.emb);

    std::vector<double> expected(static_cast<std::size_t>(toy.space.size()), 0.0);
    for (const auto& [j, v] : phi_gold.items) expected[static_cast<std::size_t>(j)] += v;
    for (const auto& [j, v] : phi_pred.items) expected[static_cast<std::size_t>(j)] -= v;

    // One step, one snapshot: the average IS the updated vector, exactly.
    CHECK(model.weights == expected);
}

TEST_CASE("a correct decode leaves only decay") {
    ToySetup toy = separable_toy();
    // First train to separation, then run one more epoch from that point.
    PerceptronConfig cfg;
    cfg.epochs = 3;
    cfg.decay = 0.0;
    FeatureModel fitted = train_baseline(toy.corpus, toy.emb, cfg);

    PerceptronConfig once;
    once.epochs = 1;
    once.decay = 0.125;  // exactly representable
    PerceptronStats stats;
    FeatureModel model = train_baseline(toy.corpus, toy.emb, once, &fitted, &stats);
    CHECK(stats.total_updates == 0);

    // Snapshots are w0*(1-d)^1 and w0*(1-d)^2; the average follows.
    const double d = 1.0 - 0.125;
    const double factor = (d + d * d) / 2.0;
    for (std::size_t j = 0; j < model.weights.size(); ++j) {
        CHECK(model.weights[j] ==
              doctest::Approx(fitted.weights[j] * factor).epsilon(1e-12));
    }
}

TEST_CASE("averaging matches a naive snapshot implementation") {
    ToySetup toy = separable_toy();
    std::mt19937_64 rng(131);
    // A harder corpus: random labels force repeated updates.
    TaggedCorpus corpus(toy.tagset);
    const std::vector<std::string> vocab = {"the", "dog", "cat", "barks", "sleeps"};
    for (int s = 0; s < 6; ++s) {
        TaggedSentence inst;
        const int len = 1 + static_cast<int>(rng() % 4);
        for (int t = 0; t < len; ++t) {
            inst.sentence.tokens.push_back(vocab[rng() % vocab.size()]);
            inst.tags.push_back(static_cast<int>(rng() % 3));
        }
        corpus.add(inst);
    }

    PerceptronConfig cfg;
    cfg.epochs = 2;
    cfg.decay = 0.1;
    FeatureModel fast = train_baseline(corpus, toy.emb, cfg);

    // Naive reference: dense weights, explicit snapshot accumulation.
    const std::size_t m = static_cast<std::size_t>(toy.space.size());
    std::vector<double> w(m, 0.0);
    std::vector<double> acc(m, 0.0);
    long long steps = 0;
    FeatureModel scratch{toy.space, std::vector<double>(m, 0.0)};
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const auto& inst : corpus.sentences()) {
            scratch.weights = w;
            std::vector<int> pred = viterbi(inst.sentence, scratch, toy.emb);
            if (pred != inst.tags) {
                FeatureVector phi_gold =
                    global_features(toy.space, inst.sentence, inst.tags, toy.emb);
                FeatureVector phi_pred =
                    global_features(toy.space, inst.sentence, pred, toy.emb);
                for (const auto& [j, v] : phi_gold.items) w[static_cast<std::size_t>(j)] += v;
                for (const auto& [j, v] : phi_pred.items) w[static_cast<std::size_t>(j)] -= v;
            }
            for (auto& v : w) v *= 1.0 - cfg.decay;
            for (std::size_t j = 0; j < m; ++j) acc[j] += w[j];
            ++steps;
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        CHECK(fast.weights[j] ==
              doctest::Approx(acc[j] / static_cast<double>(steps)).epsilon(1e-12));
    }
}

TEST_CASE("updates never touch features outside the instance's active set") {
    ToySetup toy = separable_toy();
    TaggedCorpus one(toy.tagset);
    one.add(toy.corpus.sentences()[0]);

    PerceptronConfig cfg;
    cfg.epochs = 4;
    cfg.decay = 0.0;
    FeatureModel model = train_baseline(one, toy.emb, cfg);

    std::vector<int> active =
        active_features(toy.space, one.sentences()[0].sentence, toy.emb);
    CHECK(std::is_sorted(active.begin(), active.end()));
    for (std::size_t j = 0; j < model.weights.size(); ++j) {
        if (!std::binary_search(active.begin(), active.end(), static_cast<int>(j))) {
            CHECK(model.weights[j] == 0.0);
        }
    }
}

TEST_CASE("active features enumerate the whole lattice footprint") {
    ToySetup toy = separable_toy();
    Sentence s{{"the", "dog"}};
    std::vector<int> active = active_features(toy.space, s, toy.emb);

    // Emissions for every (token, tag) pair under each tag, embeddings
    // included because both words are in vocabulary; plus all transitions.
    for (int tag = 0; tag < 3; ++tag) {
        for (int d = 0; d < 2; ++d) {
            CHECK(std::binary_search(active.begin(), active.end(),
                                     toy.space.embedding(tag, d)));
        }
        for (int prev = 0; prev < 3; ++prev) {
            CHECK(std::binary_search(active.begin(), active.end(),
                                     toy.space.transition(tag, prev)));
        }
    }
    // No token is capitalized, hyphenated, or numeric: ortho features are
    // not in the footprint.
    for (int tag = 0; tag < 3; ++tag) {
        for (int flag = 0; flag < kOrthoFlagCount; ++flag) {
            CHECK_FALSE(std::binary_search(active.begin(), active.end(),
                                           toy.space.ortho(tag, flag)));
        }
    }

    // Single-token sentences contribute no transitions.
    Sentence single{{"dog"}};
    std::vector<int> short_active = active_features(toy.space, single, toy.emb);
    for (int tag = 0; tag < 3; ++tag) {
        for (int prev = 0; prev < 3; ++prev) {
            CHECK_FALSE(std::binary_search(short_active.begin(), short_active.end(),
                                           toy.space.transition(tag, prev)));
        }
    }
}

TEST_CASE("corruption draws have the declared moments") {
    ToySetup toy = separable_toy();
    const std::size_t m = static_cast<std::size_t>(toy.space.size());

    SUBCASE("sigma zero gives exactly one") {
        GaussianPrior prior = uniform_sigma_prior(toy.space, 0.0,
                                                  std::vector<double>(m, 0.0));
        std::mt19937_64 rng(1);
        std::vector<int> active = {0, 5, 9};
        CorruptionVector g = sample_corruption(prior, active, rng);
        REQUIRE(g.indices == active);
        for (double v : g.values) CHECK(v == 1.0);
    }

    SUBCASE("sigma one matches Normal(1, 1) at 10k draws") {
        GaussianPrior prior = uniform_sigma_prior(toy.space, 1.0,
                                                  std::vector<double>(m, 0.0));
        std::mt19937_64 rng(137);
        const int draws = 10000;
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < draws; ++i) {
            CorruptionVector g = sample_corruption(prior, {3}, rng);
            sum += g.values[0];
            sumsq += g.values[0] * g.values[0];
        }
        const double mean = sum / draws;
        const double var = sumsq / draws - mean * mean;
        CHECK(std::abs(mean - 1.0) <= 0.03);
        CHECK(std::abs(std::sqrt(var) - 1.0) <= 0.03);
    }

    SUBCASE("distinct features draw uncorrelated noise") {
        GaussianPrior prior = uniform_sigma_prior(toy.space, 0.5,
                                                  std::vector<double>(m, 0.0));
        std::mt19937_64 rng(139);
        const int draws = 10000;
        double sa = 0.0, sb = 0.0, sab = 0.0, saa = 0.0, sbb = 0.0;
        for (int i = 0; i < draws; ++i) {
            CorruptionVector g = sample_corruption(prior, {2, 7}, rng);
            const double a = g.values[0], b = g.values[1];
            sa += a;
            sb += b;
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
        const double cov = sab / draws - (sa / draws) * (sb / draws);
        const double va = saa / draws - (sa / draws) * (sa / draws);
        const double vb = sbb / draws - (sb / draws) * (sb / draws);
        CHECK(std::abs(cov / std::sqrt(va * vb)) <= 0.05);
    }

    SUBCASE("caller order does not change the draw") {
        GaussianPrior prior = uniform_sigma_prior(toy.space, 0.7,
                                                  std::vector<double>(m, 0.0));
        std::mt19937_64 rng_a(141), rng_b(141);
        CorruptionVector a = sample_corruption(prior, {9, 2, 5, 2}, rng_a);
        CorruptionVector b = sample_corruption(prior, {2, 5, 9}, rng_b);
        CHECK(a.indices == b.indices);
        CHECK(a.values == b.values);
    }
}

TEST_CASE("corrupted features keep their expectation") {
    // E[Phi ⊙ g] = Phi coordinate-wise, since E[g_j] = 1.
    ToySetup toy = separable_toy();
    const std::size_t m = static_cast<std::size_t>(toy.space.size());
    GaussianPrior prior = uniform_sigma_prior(toy.space, 0.4,
                                              std::vector<double>(m, 0.0));
    const TaggedSentence& inst = toy.corpus.sentences()[0];
    FeatureVector phi =
        global_features(toy.space, inst.sentence, inst.tags, toy.emb);
    std::vector<int> support;
    for (const auto& [j, v] : phi.items) support.push_back(j);

    std::mt19937_64 rng(149);
    const int draws = 4000;
    std::vector<double> sum(phi.items.size(), 0.0), sumsq(phi.items.size(), 0.0);
    for (int i = 0; i < draws; ++i) {
        CorruptionVector g = sample_corruption(prior, support, rng);
        for (std::size_t k = 0; k < phi.items.size(); ++k) {
            const double v = phi.items[k].second * g.values[k];
            sum[k] += v;
            sumsq[k] += v * v;
        }
    }
    for (std::size_t k = 0; k < phi.items.size(); ++k) {
        const double mean = sum[k] / draws;
        const double var = std::max(sumsq[k] / draws - mean * mean, 0.0);
        const double stderr_k = std::sqrt(var / draws);
        CHECK(std::abs(mean - phi.items[k].second) <=
              std::max(3.0 * stderr_k, 1e-9));
    }
}

TEST_CASE("zero-sigma noise training is bitwise identical to the baseline") {
    ToySetup toy = separable_toy();
    std::mt19937_64 rng(151);
    const std::size_t m = static_cast<std::size_t>(toy.space.size());
    std::vector<double> means = random_weights(rng, m, 0.3);

    GaussianPrior prior = uniform_sigma_prior(toy.space, 0.0, means);
    PerceptronConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 99;

    PerceptronStats noise_stats;
    FeatureModel noisy = train_noise(toy.corpus, toy.emb, prior, cfg, &noise_stats);

    PerceptronConfig base_cfg = cfg;
    base_cfg.decay = 0.0;
    FeatureModel start{toy.space, means};
    PerceptronStats base_stats;
    FeatureModel base =
        train_baseline(toy.corpus, toy.emb, base_cfg, &start, &base_stats);

    CHECK(noisy.weights == base.weights);
    CHECK(noise_stats.total_updates == base_stats.total_updates);
    CHECK(noise_stats.epoch_mistakes == base_stats.epoch_mistakes);
}

TEST_CASE("single-source priors behave as all-zero sigma in noise training") {
    ToySetup toy = separable_toy();
    std::mt19937_64 rng(157);
    const std::size_t m = static_cast<std::size_t>(toy.space.size());
    std::vector<double> means = random_weights(rng, m, 0.3);

    GaussianPrior single = uniform_sigma_prior(toy.space, 0.0, means, 1);
    // Mimic the estimator's single-source output: floored variances that
    // must not be interpreted as real widths.
    std::fill(single.variances.begin(), single.variances.end(),
              GaussianPrior::kVarianceFloor);
    REQUIRE(single.needs_resolution());

    GaussianPrior zero = uniform_sigma_prior(toy.space, 0.0, means, 3);
    PerceptronConfig cfg;
    cfg.epochs = 2;
    FeatureModel a = train_noise(toy.corpus, toy.emb, single, cfg);
    FeatureModel b = train_noise(toy.corpus, toy.emb, zero, cfg);
    CHECK(a.weights == b.weights);
}

TEST_CASE("noise training is reproducible and seed-sensitive") {
    WorldConfig wc;
    wc.seed = 5;
    World world(wc);
    TaggedCorpus corpus = world.sample(0, 12, 3);
    const FeatureSpace space(world.tagset(), world.embeddings().dims());
    const std::size_t m = static_cast<std::size_t>(space.size());
    std::mt19937_64 rng(163);
    GaussianPrior prior =
        uniform_sigma_prior(space, 0.5, random_weights(rng, m, 0.2), 4);

    PerceptronConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 7;
    FeatureModel a = train_noise(corpus, world.embeddings(), prior, cfg);
    FeatureModel b = train_noise(corpus, world.embeddings(), prior, cfg);
    CHECK(a.weights == b.weights);

    cfg.seed = 8;
    FeatureModel c = train_noise(corpus, world.embeddings(), prior, cfg);
    bool any_difference = false;
    for (std::size_t j = 0; j < m; ++j) {
        any_difference = any_difference || a.weights[j] != c.weights[j];
    }
    CHECK(any_difference);
}

TEST_CASE("shuffled epochs visit a seeded permutation") {
    WorldConfig wc;
    wc.seed = 6;
    World world(wc);
    TaggedCorpus corpus = world.sample(1, 10, 4);

    PerceptronConfig cfg;
    cfg.epochs = 2;
    cfg.shuffle = true;
    cfg.seed = 21;
    FeatureModel a = train_baseline(corpus, world.embeddings(), cfg);
    FeatureModel b = train_baseline(corpus, world.embeddings(), cfg);
    CHECK(a.weights == b.weights);

    cfg.shuffle = false;
    FeatureModel c = train_baseline(corpus, world.embeddings(), cfg);
    bool any_difference = false;
    for (std::size_t j = 0; j < a.weights.size(); ++j) {
        any_difference = any_difference || a.weights[j] != c.weights[j];
    }
    CHECK(any_difference);
}

TEST_CASE("perceptron configuration is validated") {
    ToySetup toy = separable_toy();
    PerceptronConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(train_baseline(toy.corpus, toy.emb, cfg), DataError);
    cfg = PerceptronConfig{};
    cfg.decay = 1.0;
    CHECK_THROWS_AS(train_baseline(toy.corpus, toy.emb, cfg), DataError);
    cfg = PerceptronConfig{};
    cfg.decay = -0.1;
    CHECK_THROWS_AS(train_baseline(toy.corpus, toy.emb, cfg), DataError);

    TaggedCorpus empty(toy.tagset);
    CHECK_THROWS_AS(train_baseline(empty, toy.emb, PerceptronConfig{}), DataError);

    // Mismatched initial model space.
    FeatureSpace other(Tagset({"D", "N"}), 2);
    FeatureModel bad{other, std::vector<double>(static_cast<std::size_t>(other.size()), 0.0)};
    CHECK_THROWS_AS(train_baseline(toy.corpus, toy.emb, PerceptronConfig{}, &bad),
                    DataError);

    // Mismatched prior space for the noise learner.
    const std::size_t m = static_cast<std::size_t>(other.size());
    GaussianPrior prior = uniform_sigma_prior(other, 0.1, std::vector<double>(m, 0.0));
    CHECK_THROWS_AS(train_noise(toy.corpus, toy.emb, prior, PerceptronConfig{}),
                    DataError);
}
