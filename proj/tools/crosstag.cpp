#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crosstag/crf.hpp"
#include "crosstag/learners.hpp"

namespace {

using namespace crosstag;

struct Options {
    std::string input;
    std::string output;
    std::string model;
    std::string train;
    std::string validation;
    std::string prior;
    std::string embeddings;
    std::string lang;
    std::string trace;
    std::string kind;
    std::string learner = "crf-l2";
    std::vector<std::string> inputs;
    std::vector<std::string> preds;
    std::vector<std::string> golds;
    double strength = 1.0;
    double decay = 1e-6;
    double tolerance = 1e-5;
    int dims = 40;
    int epochs = 5;
    int max_iterations = 200;
    int memory = 10;
    int trials = 10;
    int subsample_size = 1;
    int subsamples = 4;
    int threads = 1;
    std::uint64_t seed = 42;
    bool shuffle = false;
};

EmbeddingTable load_table(const Options& opt) {
    if (opt.embeddings.empty()) return EmbeddingTable(0);
    return load_embeddings(opt.embeddings, opt.lang);
}

LearnerOptions learner_options(const Options& opt, const GaussianPrior* prior) {
    LearnerOptions options;
    options.kind = parse_learner(opt.learner);
    options.strength = opt.strength;
    options.optimizer.memory = opt.memory;
    options.optimizer.max_iterations = opt.max_iterations;
    options.optimizer.gradient_tolerance = opt.tolerance;
    options.perceptron.epochs = opt.epochs;
    options.perceptron.decay = opt.decay;
    options.perceptron.seed = opt.seed;
    options.perceptron.shuffle = opt.shuffle;
    options.prior = prior;
    options.threads = opt.threads;
    if (learner_needs_prior(options.kind) && !prior) {
        throw DataError(std::string(learner_name(options.kind)) + " requires --prior");
    }
    return options;
}

void cmd_embed(const Options& opt) {
    VerseCorpus corpus = read_verses(opt.input);
    EmbeddingTable table = build_embeddings(corpus, opt.dims, opt.seed);
    write_embeddings(table, opt.output);
    std::cout << "verses\t" << corpus.verse_count() << '\n'
              << "types\t" << corpus.type_count() << '\n'
              << "dims\t" << table.dims() << '\n';
}

void cmd_project(const Options& opt) {
    std::vector<ProjectionTable> tables;
    tables.reserve(opt.inputs.size());
    for (const std::string& path : opt.inputs) {
        tables.push_back(read_votes(path, Tagset::universal()));
    }
    TaggedCorpus merged = majority_vote(merge_votes(tables));
    write_corpus(merged, opt.output);
    std::cout << "sentences\t" << merged.size() << '\n'
              << "tokens\t" << merged.token_count() << '\n';
}

void cmd_estimate_priors(const Options& opt) {
    std::vector<ModelFile> sources;
    sources.reserve(opt.inputs.size());
    for (const std::string& path : opt.inputs) sources.push_back(read_model(path));
    GaussianPrior prior = estimate_prior(sources);
    write_prior(prior, opt.output);
    std::cout << "sources\t" << prior.source_count << '\n'
              << "features\t" << prior.space.size() << '\n'
              << "sigma2_av\t"
              << (prior.needs_resolution() ? std::string("single-source")
                                           : fmt_double(prior.default_variance))
              << '\n';
}

void cmd_train(const Options& opt) {
    TaggedCorpus corpus = read_corpus(opt.train, Tagset::universal());
    EmbeddingTable emb = load_table(opt);

    GaussianPrior prior{FeatureSpace(Tagset::universal(), emb.dims())};
    const bool needs_prior = learner_needs_prior(parse_learner(opt.learner));
    if (needs_prior) {
        if (opt.prior.empty()) throw DataError(opt.learner + " requires --prior");
        prior = read_prior(opt.prior);
    }
    LearnerOptions options = learner_options(opt, needs_prior ? &prior : nullptr);

    std::vector<IterationRecord> trace;
    PerceptronStats stats;
    FeatureModel model = train_learner(options, corpus, emb, &trace, &stats);
    write_model(model, opt.output);

    const std::string trace_path = opt.trace.empty() ? opt.output + ".trace" : opt.trace;
    std::ofstream out(trace_path);
    if (!out) throw DataError("cannot write '" + trace_path + "'");
    if (!trace.empty()) {
        for (const IterationRecord& rec : trace) {
            out << rec.iteration << '\t' << fmt_double(rec.objective) << '\t'
                << fmt_double(rec.gradient_norm) << '\n';
        }
        std::cout << "iterations\t" << trace.back().iteration << '\n'
                  << "objective\t" << fmt_double(trace.back().objective) << '\n';
    } else {
        for (std::size_t epoch = 0; epoch < stats.epoch_mistakes.size(); ++epoch) {
            out << epoch + 1 << '\t' << stats.epoch_mistakes[epoch] << '\n';
        }
        std::cout << "epochs\t" << stats.epoch_mistakes.size() << '\n'
                  << "updates\t" << stats.total_updates << '\n';
    }
}

void cmd_tag(const Options& opt) {
    ModelFile model = read_model(opt.model);
    EmbeddingTable emb = load_table(opt);
    if (emb.dims() != model.model.space.embedding_dims()) {
        throw DataError("model expects " + std::to_string(model.model.space.embedding_dims()) +
                        "-dimensional embeddings, got " + std::to_string(emb.dims()));
    }
    TaggedCorpus corpus = read_corpus(opt.input, model.model.space.tagset());
    TaggedCorpus tagged(corpus.tagset());
    for (const TaggedSentence& instance : corpus.sentences()) {
        tagged.add({instance.sentence, viterbi(instance.sentence, model.model, emb)});
    }
    write_corpus(tagged, opt.output);
}

void cmd_eval(const Options& opt) {
    if (opt.preds.size() != opt.golds.size()) {
        throw DataError("--pred and --gold must be given the same number of times");
    }
    std::vector<double> accuracies;
    accuracies.reserve(opt.preds.size());
    for (std::size_t i = 0; i < opt.preds.size(); ++i) {
        TaggedCorpus pred = read_corpus(opt.preds[i], Tagset::universal());
        TaggedCorpus gold = read_corpus(opt.golds[i], Tagset::universal());
        accuracies.push_back(token_accuracy(pred, gold));
        std::cout << opt.preds[i] << '\t' << fmt_double(accuracies.back()) << '\n';
    }
    std::cout << "macro\t" << fmt_double(macro_average(accuracies)) << '\n';
}

void cmd_diagnose(const Options& opt) {
    TaggedCorpus train = read_corpus(opt.train, Tagset::universal());
    EmbeddingTable emb = load_table(opt);

    GaussianPrior prior{FeatureSpace(Tagset::universal(), emb.dims())};
    const bool needs_prior = learner_needs_prior(parse_learner(opt.learner));
    if (needs_prior) {
        if (opt.prior.empty()) throw DataError(opt.learner + " requires --prior");
        prior = read_prior(opt.prior);
    }
    LearnerOptions options = learner_options(opt, needs_prior ? &prior : nullptr);
    Learner learner = make_learner(options, emb);

    std::string text;
    if (opt.kind == "rademacher") {
        std::vector<Sentence> sentences;
        sentences.reserve(train.size());
        for (const TaggedSentence& instance : train.sentences()) {
            sentences.push_back(instance.sentence);
        }
        RademacherReport report = rademacher_estimate(learner, opt.learner, sentences,
                                                      train.tagset(), opt.trials, opt.seed);
        text = format_report(report);
    } else if (opt.kind == "variance") {
        if (opt.validation.empty()) throw DataError("variance diagnostics require --validation");
        TaggedCorpus val = read_corpus(opt.validation, Tagset::universal());
        std::vector<Sentence> sentences;
        sentences.reserve(val.size());
        for (const TaggedSentence& instance : val.sentences()) {
            sentences.push_back(instance.sentence);
        }
        VarianceReport report = integrated_variance(learner, opt.learner, train, sentences,
                                                    opt.subsample_size, opt.subsamples, opt.seed);
        text = format_report(report);
    } else {
        throw DataError("unknown diagnostic '" + opt.kind + "' (expected rademacher or variance)");
    }

    std::ofstream out(opt.output);
    if (!out) throw DataError("cannot write '" + opt.output + "'");
    out << text;
    std::cout << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-lingual POS tagging: embeddings, projection, priors, training, diagnostics"};
    app.require_subcommand(1);
    Options opt;

    auto add_learner_flags = [&](CLI::App* cmd, bool with_threads) {
        cmd->add_option("--learner", opt.learner,
                        "crf-l2, crf-l2prior, crf-empgauss, perc-l2 or perc-noise");
        cmd->add_option("--C", opt.strength, "regularization strength for the CRF objectives");
        cmd->add_option("--prior", opt.prior, "prior file (crf-l2prior, crf-empgauss, perc-noise)");
        cmd->add_option("--epochs", opt.epochs, "perceptron epochs");
        cmd->add_option("--decay", opt.decay, "perceptron per-update weight decay");
        cmd->add_flag("--shuffle", opt.shuffle, "shuffle instances each epoch (seeded)");
        cmd->add_option("--max-iterations", opt.max_iterations, "optimizer iteration cap");
        cmd->add_option("--tolerance", opt.tolerance, "optimizer gradient tolerance");
        cmd->add_option("--memory", opt.memory, "optimizer history size");
        cmd->add_option("--embeddings", opt.embeddings, "embedding file");
        cmd->add_option("--lang", opt.lang, "keep only this language's embedding rows");
        if (with_threads) cmd->add_option("--threads", opt.threads, "CRF inference threads");
        cmd->add_option("--seed", opt.seed, "random seed");
    };

    CLI::App* embed = app.add_subcommand("embed", "build word embeddings from a verse corpus");
    embed->add_option("--input", opt.input, "verse file: id<TAB>lang<TAB>text")->required();
    embed->add_option("--output", opt.output, "embedding file to write")->required();
    embed->add_option("--dims", opt.dims, "embedding dimensions");
    embed->add_option("--seed", opt.seed, "random seed");
    embed->callback([&] { cmd_embed(opt); });

    CLI::App* project = app.add_subcommand("project", "merge vote files into a majority-vote corpus");
    project->add_option("inputs", opt.inputs, "vote files")->required()->expected(-1);
    project->add_option("--output", opt.output, "corpus file to write")->required();
    project->callback([&] { cmd_project(opt); });

    CLI::App* priors = app.add_subcommand("estimate-priors",
                                          "estimate a Gaussian prior from source models");
    priors->add_option("inputs", opt.inputs, "source model files")->required()->expected(-1);
    priors->add_option("--output", opt.output, "prior file to write")->required();
    priors->callback([&] { cmd_estimate_priors(opt); });

    CLI::App* train = app.add_subcommand("train", "train a tagging model");
    train->add_option("--train", opt.train, "two-column training corpus")->required();
    train->add_option("--output", opt.output, "model file to write")->required();
    train->add_option("--trace", opt.trace, "trace file (default: <output>.trace)");
    add_learner_flags(train, true);
    train->callback([&] { cmd_train(opt); });

    CLI::App* tag = app.add_subcommand("tag", "tag a corpus with a trained model");
    tag->add_option("--model", opt.model, "model file")->required();
    tag->add_option("--input", opt.input, "two-column corpus (existing tags ignored)")->required();
    tag->add_option("--output", opt.output, "corpus file to write")->required();
    tag->add_option("--embeddings", opt.embeddings, "embedding file");
    tag->add_option("--lang", opt.lang, "keep only this language's embedding rows");
    tag->callback([&] { cmd_tag(opt); });

    CLI::App* eval = app.add_subcommand("eval", "token accuracy and macro-average");
    eval->add_option("--pred", opt.preds, "predicted corpus (repeatable)")->required();
    eval->add_option("--gold", opt.golds, "gold corpus (repeatable)")->required();
    eval->callback([&] { cmd_eval(opt); });

    CLI::App* diagnose = app.add_subcommand("diagnose", "overfitting diagnostics");
    diagnose->add_option("--kind", opt.kind, "rademacher or variance")->required();
    diagnose->add_option("--train", opt.train, "training corpus")->required();
    diagnose->add_option("--validation", opt.validation, "validation corpus (variance)");
    diagnose->add_option("--output", opt.output, "report file to write")->required();
    diagnose->add_option("--trials", opt.trials, "random-label trials (rademacher)");
    diagnose->add_option("--subsample-size", opt.subsample_size, "sentences per subsample");
    diagnose->add_option("--subsamples", opt.subsamples, "number of subsamples");
    add_learner_flags(diagnose, true);
    diagnose->callback([&] { cmd_diagnose(opt); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
