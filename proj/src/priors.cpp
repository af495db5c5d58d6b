#include "crosstag/priors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace crosstag {

GaussianPrior::GaussianPrior(FeatureSpace s)
    : space(std::move(s)),
      means(static_cast<std::size_t>(space.size()), 0.0),
      variances(static_cast<std::size_t>(space.size()), kVarianceFloor),
      observed(static_cast<std::size_t>(space.size()), 0) {}

GaussianPrior GaussianPrior::resolved(double C) const {
    if (!needs_resolution()) return *this;
    if (C <= 0.0) throw DataError("single-source prior needs a positive regularization parameter");
    GaussianPrior out = *this;
    std::fill(out.variances.begin(), out.variances.end(), C);
    out.default_variance = C;
    return out;
}

GaussianPrior estimate_prior(const std::vector<ModelFile>& sources) {
    if (sources.empty()) throw DataError("prior estimation needs at least one source model");
    const FeatureSpace& space = sources.front().model.space;
    for (const auto& src : sources) {
        if (src.model.space != space) throw DataError("source models use different feature spaces");
    }

    const std::size_t m = static_cast<std::size_t>(space.size());
    const double k = static_cast<double>(sources.size());
    GaussianPrior prior(space);
    prior.source_count = static_cast<int>(sources.size());

    for (std::size_t j = 0; j < m; ++j) {
        double sum = 0.0;
        bool seen = false;
        for (const auto& src : sources) {
            sum += src.model.weights[j];
            seen = seen || src.present[j];
        }
        double mean = sum / k;
        double sq = 0.0;
        for (const auto& src : sources) {
            double d = src.model.weights[j] - mean;
            sq += d * d;
        }
        prior.means[j] = mean;
        prior.variances[j] = std::max(sq / k, GaussianPrior::kVarianceFloor);
        prior.observed[j] = seen ? 1 : 0;
    }

    double var_sum = 0.0;
    std::size_t var_count = 0;
    for (std::size_t j = 0; j < m; ++j) {
        if (prior.observed[j]) {
            var_sum += prior.variances[j];
            ++var_count;
        }
    }
    // The summands are all >= the floor, so the mean is too — but rounding in
    // the running sum can drop it an ulp below, which the file reader would
    // then reject. Clamp the drift away.
    prior.default_variance =
        var_count ? std::max(var_sum / static_cast<double>(var_count),
                             GaussianPrior::kVarianceFloor)
                  : GaussianPrior::kVarianceFloor;

    for (std::size_t j = 0; j < m; ++j) {
        if (!prior.observed[j]) {
            prior.means[j] = 0.0;
            prior.variances[j] = prior.default_variance;
        }
    }
    return prior;
}

namespace {

constexpr const char* kPriorMagic = "crosstag-prior 1";
constexpr double kSentinel = -1.0;

}  // namespace

void write_prior(const GaussianPrior& prior, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    const bool single = prior.needs_resolution();
    out << kPriorMagic << '\n';
    out << "tags\t";
    for (int t = 0; t < prior.space.num_tags(); ++t) {
        if (t) out << ' ';
        out << prior.space.tagset().name(t);
    }
    out << '\n';
    out << "ortho\t";
    for (int f = 0; f < kOrthoFlagCount; ++f) {
        if (f) out << ' ';
        out << kOrthoFlagNames[f];
    }
    out << '\n';
    out << "embdim\t" << prior.space.embedding_dims() << '\n';
    out << "sources\t" << prior.source_count << '\n';
    out << "sigma2_av\t" << fmt_double(single ? kSentinel : prior.default_variance) << '\n';
    out << "floor\t" << fmt_double(GaussianPrior::kVarianceFloor) << '\n';
    for (int j = 0; j < prior.space.size(); ++j) {
        if (!prior.observed[j]) continue;
        out << prior.space.key(j) << '\t' << fmt_double(prior.means[j]) << '\t'
            << fmt_double(single ? kSentinel : prior.variances[j]) << '\n';
    }
}

GaussianPrior read_prior(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::size_t lineno = 0;
    auto next = [&](std::string& line) {
        if (!std::getline(in, line)) return false;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++lineno;
        return true;
    };
    auto where = [&]() { return path + ":" + std::to_string(lineno); };
    auto expect = [&](const std::string& name) {
        std::string line;
        if (!next(line)) throw DataError(path + ": truncated header, expected '" + name + "'");
        auto fields = split(line, '\t');
        if (fields.size() != 2 || fields[0] != name) {
            throw DataError(where() + ": expected '" + name + "<TAB>...' line");
        }
        return std::string(fields[1]);
    };

    std::string line;
    if (!next(line) || line != kPriorMagic) throw DataError(path + ": not a crosstag prior file");

    const std::string tag_line = expect("tags");
    std::vector<std::string> names;
    for (auto n : split_ws(tag_line)) names.emplace_back(n);
    Tagset tagset(names);
    const std::string ortho_line = expect("ortho");
    auto flags = split_ws(ortho_line);
    if (flags.size() != kOrthoFlagCount) throw DataError(where() + ": unexpected ortho flag list");
    for (int f = 0; f < kOrthoFlagCount; ++f) {
        if (flags[f] != kOrthoFlagNames[f]) {
            throw DataError(where() + ": unexpected ortho flag '" + std::string(flags[f]) + "'");
        }
    }
    long embdim = parse_long(expect("embdim"), where());
    long sources = parse_long(expect("sources"), where());
    double sigma2_av = parse_double(expect("sigma2_av"), where());
    double floor = parse_double(expect("floor"), where());
    if (floor != GaussianPrior::kVarianceFloor) {
        throw DataError(where() + ": unsupported variance floor");
    }
    if (sources < 1) throw DataError(where() + ": source count must be positive");

    GaussianPrior prior(FeatureSpace(std::move(tagset), static_cast<int>(embdim)));
    prior.source_count = static_cast<int>(sources);
    const bool single = prior.needs_resolution();
    if (!single) {
        if (sigma2_av < GaussianPrior::kVarianceFloor) {
            throw DataError(where() + ": sigma2_av below the variance floor");
        }
        prior.default_variance = sigma2_av;
        std::fill(prior.variances.begin(), prior.variances.end(), sigma2_av);
    }

    while (next(line)) {
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 3) throw DataError(where() + ": expected 'key<TAB>mean<TAB>variance'");
        int j = prior.space.index_of_key(fields[0], where());
        if (prior.observed[j]) throw DataError(where() + ": duplicate feature key");
        prior.observed[j] = 1;
        prior.means[j] = parse_double(fields[1], where());
        double variance = parse_double(fields[2], where());
        if (single) {
            if (variance != kSentinel) {
                throw DataError(where() + ": single-source prior must use the variance sentinel");
            }
        } else {
            if (variance < GaussianPrior::kVarianceFloor) {
                throw DataError(where() + ": variance below the floor");
            }
            prior.variances[j] = variance;
        }
    }
    return prior;
}

GaussianPrior read_prior(const std::string& path, const FeatureSpace& expected) {
    GaussianPrior prior = read_prior(path);
    if (prior.space != expected) {
        throw DataError(path + ": feature space does not match (tagset or embedding dimension differ)");
    }
    return prior;
}

RegularizedObjective::RegularizedObjective(Kind kind, FeatureSpace space, double strength,
                                           std::vector<double> means, std::vector<double> variances)
    : kind_(kind),
      space_(std::move(space)),
      strength_(strength),
      means_(std::move(means)),
      variances_(std::move(variances)) {
    if (strength_ <= 0.0) throw DataError("regularization strength must be positive");
}

RegularizedObjective RegularizedObjective::l2(const FeatureSpace& space, double C) {
    std::size_t m = static_cast<std::size_t>(space.size());
    return RegularizedObjective(Kind::L2, space, C, std::vector<double>(m, 0.0),
                                std::vector<double>(m, C));
}

RegularizedObjective RegularizedObjective::l2_prior(const GaussianPrior& prior, double C) {
    std::size_t m = static_cast<std::size_t>(prior.space.size());
    return RegularizedObjective(Kind::L2Prior, prior.space, C, prior.means,
                                std::vector<double>(m, C));
}

RegularizedObjective RegularizedObjective::emp_gauss(const GaussianPrior& prior, double C) {
    const GaussianPrior resolved = prior.resolved(C);
    return RegularizedObjective(Kind::EmpGauss, resolved.space, C, resolved.means,
                                resolved.variances);
}

double RegularizedObjective::penalty(const std::vector<double>& weights) const {
    double sum = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        double d = weights[j] - means_[j];
        sum += d * d / (2.0 * variances_[j]);
    }
    return sum;
}

void RegularizedObjective::subtract_penalty_gradient(const std::vector<double>& weights,
                                                     std::vector<double>& grad) const {
    for (std::size_t j = 0; j < weights.size(); ++j) {
        grad[j] -= (weights[j] - means_[j]) / variances_[j];
    }
}

double RegularizedObjective::value(const FeatureModel& model, const TaggedCorpus& corpus,
                                   const EmbeddingTable& emb, int threads) const {
    return log_likelihood(model, corpus, emb, threads) - penalty(model.weights);
}

std::vector<double> RegularizedObjective::gradient(const FeatureModel& model,
                                                   const TaggedCorpus& corpus,
                                                   const EmbeddingTable& emb, int threads) const {
    std::vector<double> grad = gradient_log_likelihood(model, corpus, emb, threads);
    subtract_penalty_gradient(model.weights, grad);
    return grad;
}

double RegularizedObjective::value_and_gradient(const FeatureModel& model,
                                                const TaggedCorpus& corpus,
                                                const EmbeddingTable& emb,
                                                std::vector<double>& grad, int threads) const {
    double ll = log_likelihood_and_gradient(model, corpus, emb, grad, threads);
    subtract_penalty_gradient(model.weights, grad);
    return ll - penalty(model.weights);
}

std::vector<double> RegularizedObjective::initial_point() const {
    if (kind_ == Kind::L2) return std::vector<double>(means_.size(), 0.0);
    return means_;
}

const char* objective_kind_name(RegularizedObjective::Kind kind) {
    switch (kind) {
        case RegularizedObjective::Kind::L2: return "l2";
        case RegularizedObjective::Kind::L2Prior: return "l2-prior";
        case RegularizedObjective::Kind::EmpGauss: return "emp-gauss";
    }
    return "unknown";
}

}  // namespace crosstag
