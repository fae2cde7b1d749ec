#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ueeg/losses.hpp"
#include "ueeg/train.hpp"

using namespace ueeg;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(ErrorCode c) {
    switch (c) {
        case ErrorCode::BadMagic:
        case ErrorCode::VersionUnsupported:
        case ErrorCode::IoError:
        case ErrorCode::DatasetError:
        case ErrorCode::GeometryMismatch:
        case ErrorCode::LabelOutOfRange:
        case ErrorCode::NonFiniteData:
        case ErrorCode::SignalTooShort:
        case ErrorCode::TooFewSamples:
        case ErrorCode::DegenerateData:
        case ErrorCode::LengthMismatch:
        case ErrorCode::SingleClassInput:
            return kExitData;
        case ErrorCode::NonFiniteLoss:
        case ErrorCode::NonFiniteInput:
        case ErrorCode::DomainError:
            return kExitNumerical;
        default:
            return kExitUsage;
    }
}

struct SynthArgs {
    std::string preset, out, name = "synth";
    std::size_t channels = 0, timesteps = 0, classes = 0, records = 0;
    std::uint64_t seed = 0;
    double difficulty = 0.5;
};

struct TrainArgs {
    std::string arch = "four_cnn", data, preset, optimizer, config, out = ".";
    std::size_t epochs = 0, batch = 0;
    double lr = -1, difficulty = 0.5;
    std::uint64_t seed = 0;
};

struct EvalArgs {
    std::string checkpoint, data, split = "test";
    std::uint64_t seed = 0;
};

struct EncodeArgs {
    std::string checkpoint, data, out;
    std::uint64_t seed = 0;
};

struct GradcheckArgs {
    std::string arch = "four_cnn", geometry = "3x16x2";
    std::size_t seeds = 3;
};

EEGDataset load_or_synth(const std::string& data, const std::string& preset,
                         std::uint64_t seed, double difficulty) {
    if (!data.empty()) return load_container(data);
    auto spec = preset_spec(preset, seed);
    spec.difficulty = difficulty;
    return synth_generate(spec);
}

int run_synth(const SynthArgs& a) {
    SynthSpec spec;
    if (!a.preset.empty()) {
        spec = preset_spec(a.preset, a.seed);
    } else {
        spec.channels = a.channels;
        spec.timesteps = a.timesteps;
        spec.num_classes = a.classes;
        spec.num_records = a.records;
        spec.seed = a.seed;
        spec.name = a.name;
    }
    spec.difficulty = a.difficulty;
    auto ds = synth_generate(spec);
    save_container(ds, a.out);
    std::cout << "wrote " << a.out << ": " << ds.name << " N=" << ds.size()
              << " C=" << ds.channels << " T=" << ds.timesteps
              << " K=" << ds.num_classes << "\n";
    return kExitOk;
}

int run_train(const TrainArgs& a) {
    EEGDataset ds = load_or_synth(a.data, a.preset, a.seed, a.difficulty);
    TrainConfig cfg;
    if (!a.config.empty()) {
        std::ifstream f(a.config);
        if (!f) throw Error(ErrorCode::IoError, "cannot read " + a.config);
        cfg = TrainConfig::from_json(nlohmann::json::parse(f));
    } else {
        cfg = TrainConfig::defaults_for(
            ModelConfig::make(arch_from_name(a.arch), ds.channels,
                              ds.timesteps, ds.num_classes, a.seed));
    }
    if (a.epochs) cfg.max_epochs = a.epochs;
    if (a.batch) cfg.batch_size = a.batch;
    if (a.lr >= 0) cfg.lr = a.lr;
    if (!a.optimizer.empty()) cfg.optimizer = a.optimizer;

    auto split = make_split(ds, cfg.seed);
    if (split.stratification_warning)
        std::cerr << "warning: train split misses at least one class\n";
    auto res = train(cfg, ds, split);

    fs::create_directories(a.out);
    std::string ckpt = (fs::path(a.out) / "model.ueeg").string();
    save_checkpoint(res.model, ckpt);
    nlohmann::json hist;
    hist["train_loss"] = res.history.train_loss;
    hist["train_acc"] = res.history.train_acc;
    hist["val_score"] = res.history.val_score;
    hist["epoch_seconds"] = res.history.epoch_seconds;
    hist["best_epoch"] = res.history.best_epoch;
    std::ofstream((fs::path(a.out) / "history.json").string())
        << hist.dump(2) << "\n";
    std::ofstream((fs::path(a.out) / "config.json").string())
        << cfg.to_json().dump(2) << "\n";

    std::cout << "best epoch " << res.history.best_epoch << " (val score "
              << res.history.val_score[res.history.best_epoch]
              << "), checkpoint " << ckpt << "\n";
    std::vector<MetricsReport> reports;
    if (res.has_heads) {
        reports.push_back(
            evaluate_head(res.model, res.knn, ds, split, split.test));
        reports.push_back(
            evaluate_head(res.model, res.rf, ds, split, split.test));
    } else {
        reports.push_back(
            evaluate(res.model, ds, split, split.test,
                     report_model_name(res.model.config.arch)));
    }
    std::cout << report_csv(reports);
    return kExitOk;
}

const std::vector<std::size_t>& pick_split(const SplitPlan& sp,
                                           const std::string& name) {
    if (name == "train") return sp.train;
    if (name == "val") return sp.val;
    if (name == "test") return sp.test;
    throw Error(ErrorCode::InvalidSpec, "split must be train/val/test");
}

int run_eval(const EvalArgs& a) {
    auto model = load_checkpoint(a.checkpoint);
    auto ds = load_container(a.data);
    auto split = make_split(ds, a.seed);
    auto& idx = pick_split(split, a.split);
    if (model.config.arch == Arch::Autoencoder) {
        // heads are fitted fresh on the train embeddings of this dataset
        std::vector<std::uint32_t> labels;
        EEGDataset norm = minmax_normalize(ds);
        model.mode = Mode::Eval;
        auto ctx = model.context();
        std::vector<float> emb;
        std::size_t dim = 0;
        for (auto i : split.train) {
            Tensor<float> x({1, ds.channels, ds.timesteps});
            std::copy(norm.record(i),
                      norm.record(i) + ds.channels * ds.timesteps,
                      x.mutable_ptr());
            auto e = model.encode(ctx, x);
            dim = e.shape()[1];
            emb.insert(emb.end(), e.data().begin(), e.data().end());
            labels.push_back(ds.labels[i]);
        }
        Knn knn(5);
        knn.fit(emb, dim, labels);
        RandomForest rf(100, model.config.seed);
        rf.fit(emb, dim, labels);
        std::cout << report_csv(
            {evaluate_head(model, knn, ds, split, idx),
             evaluate_head(model, rf, ds, split, idx)});
    } else {
        std::cout << report_csv(
            {evaluate(model, ds, split, idx,
                      report_model_name(model.config.arch))});
    }
    return kExitOk;
}

int run_encode(const EncodeArgs& a) {
    auto model = load_checkpoint(a.checkpoint);
    auto ds = load_container(a.data);
    auto split = make_split(ds, a.seed);
    EEGDataset norm = model.config.arch == Arch::Autoencoder
                          ? minmax_normalize(ds)
                          : standardize(ds, split.train);
    model.mode = Mode::Eval;
    auto ctx = model.context();
    EEGDataset out;
    out.name = ds.name + "-embeddings";
    out.num_classes = ds.num_classes;
    out.channels = 1;
    out.labels = ds.labels;
    for (std::size_t i = 0; i < norm.size(); ++i) {
        Tensor<float> x({1, ds.channels, ds.timesteps});
        std::copy(norm.record(i), norm.record(i) + ds.channels * ds.timesteps,
                  x.mutable_ptr());
        auto e = model.encode(ctx, x);
        out.timesteps = e.shape()[1];
        out.records.insert(out.records.end(), e.data().begin(),
                           e.data().end());
    }
    save_container(out, a.out);
    std::cout << "wrote " << a.out << ": " << out.size()
              << " embeddings of width " << out.timesteps << "\n";
    return kExitOk;
}

int run_gradcheck(const GradcheckArgs& a) {
    std::size_t C = 0, T = 0, K = 0;
    if (std::sscanf(a.geometry.c_str(), "%zux%zux%zu", &C, &T, &K) != 3)
        throw Error(ErrorCode::InvalidSpec,
                    "--geometry expects CxTxK, e.g. 3x16x2");
    Arch arch = arch_from_name(a.arch);
    double worst = 0;
    for (std::size_t seed = 0; seed < a.seeds; ++seed) {
        RngStream rng(seed, "gradcheck");
        auto m = build_model<double>(ModelConfig::make(arch, C, T, K, seed));
        Tensor<double> target;
        if (arch == Arch::Autoencoder) {
            target = Tensor<double>({2, C * T});
            for (auto& v : target.mutable_data()) v = rng.uniform(0.2, 0.8);
        } else {
            target = Tensor<double>::zeros({2, K});
            target.mutable_data()[0] = 1.0;
            target.mutable_data()[K + (K > 1 ? 1 : 0)] = 1.0;
        }
        auto f = [&](const Tensor<double>& x, Tape<double>& tape) {
            Context<double> ctx{&tape, Mode::Eval, nullptr};
            auto out = m.forward(ctx, x);
            auto flat = nn::flatten(out, &tape);
            if (arch == Arch::Autoencoder)
                return binary_cross_entropy(ops::sigmoid(flat, &tape), target,
                                            &tape);
            return categorical_cross_entropy(flat, target, &tape);
        };
        Tensor<double> x({2, C, T});
        for (auto& v : x.mutable_data()) v = rng.uniform(-1, 1);
        auto rep = ops::grad_check(f, x);
        worst = std::max(worst, rep.max_rel_err);
        std::cout << "seed " << seed << ": max rel err " << rep.max_rel_err
                  << "\n";
    }
    if (!(worst < 1e-3)) {
        std::cerr << "gradient check failed: " << worst << " >= 1e-3\n";
        return kExitNumerical;
    }
    std::cout << "gradient check passed (worst " << worst << ")\n";
    return kExitOk;
}

int run_bench(const std::string& suite_path) {
    std::ifstream f(suite_path);
    if (!f) throw Error(ErrorCode::IoError, "cannot read " + suite_path);
    auto j = nlohmann::json::parse(f);
    BenchSpec spec;
    spec.presets = j.at("presets").get<std::vector<std::string>>();
    spec.models = j.at("models").get<std::vector<std::string>>();
    spec.max_epochs = j.value("max_epochs", std::size_t{10});
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.difficulty = j.value("difficulty", 0.5);
    auto out = bench(spec);
    std::cout << out.table;
    return out.errors.empty() ? kExitOk : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EEG encoding experiment harness"};
    app.require_subcommand(1);

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    synth->add_option("--preset", sa.preset, "named geometry preset");
    synth->add_option("--channels", sa.channels);
    synth->add_option("--timesteps", sa.timesteps);
    synth->add_option("--classes", sa.classes);
    synth->add_option("--records", sa.records);
    synth->add_option("--name", sa.name);
    synth->add_option("--seed", sa.seed);
    synth->add_option("--difficulty", sa.difficulty);
    synth->add_option("--out", sa.out)->required();

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "train a model");
    tr->add_option("--arch", ta.arch,
                   "four_cnn | gru_encoder | autoencoder");
    tr->add_option("--data", ta.data, "dataset container path");
    tr->add_option("--preset", ta.preset, "synthetic preset instead of --data");
    tr->add_option("--difficulty", ta.difficulty);
    tr->add_option("--config", ta.config, "JSON config (overrides --arch)");
    tr->add_option("--epochs", ta.epochs);
    tr->add_option("--batch", ta.batch);
    tr->add_option("--lr", ta.lr);
    tr->add_option("--optimizer", ta.optimizer, "adam | adadelta");
    tr->add_option("--seed", ta.seed);
    tr->add_option("--out", ta.out, "output directory");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    ev->add_option("--checkpoint", ea.checkpoint)->required();
    ev->add_option("--data", ea.data)->required();
    ev->add_option("--split", ea.split, "train | val | test");
    ev->add_option("--seed", ea.seed, "split seed");

    EncodeArgs na;
    auto* en = app.add_subcommand("encode", "write embeddings container");
    en->add_option("--checkpoint", na.checkpoint)->required();
    en->add_option("--data", na.data)->required();
    en->add_option("--out", na.out)->required();
    en->add_option("--seed", na.seed, "split seed for normalization");

    GradcheckArgs ga;
    auto* gc = app.add_subcommand("gradcheck", "finite-difference audit");
    gc->add_option("--arch", ga.arch);
    gc->add_option("--geometry", ga.geometry, "CxTxK");
    gc->add_option("--seeds", ga.seeds);

    std::string suite;
    auto* be = app.add_subcommand("bench", "run a (preset x model) grid");
    be->add_option("--suite", suite, "suite JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (synth->parsed()) {
            if (sa.preset.empty() &&
                !(sa.channels && sa.timesteps && sa.classes && sa.records)) {
                std::cerr << "synth needs --preset or full explicit geometry\n";
                return kExitUsage;
            }
            return run_synth(sa);
        }
        if (tr->parsed()) {
            if (ta.data.empty() == ta.preset.empty()) {
                std::cerr << "train needs exactly one of --data / --preset\n";
                return kExitUsage;
            }
            return run_train(ta);
        }
        if (ev->parsed()) return run_eval(ea);
        if (en->parsed()) return run_encode(na);
        if (gc->parsed()) return run_gradcheck(ga);
        if (be->parsed()) return run_bench(suite);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
