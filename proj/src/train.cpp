#include "ueeg/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ueeg/losses.hpp"
#include "ueeg/optim.hpp"

namespace ueeg {

TrainConfig TrainConfig::defaults_for(const ModelConfig& m) {
    TrainConfig c;
    c.model = m;
    c.seed = m.seed;
    switch (m.arch) {
        case Arch::FourCnn:
            c.optimizer = "adam";
            c.lr = 0.001;
            c.batch_size = 128;
            break;
        case Arch::GruEncoder:
            c.optimizer = "adam";
            c.lr = 0.001;
            c.batch_size = 64;
            break;
        case Arch::Autoencoder:
            c.optimizer = "adadelta";
            c.lr = 0.001;
            c.batch_size = 128;
            break;
    }
    return c;
}

nlohmann::json TrainConfig::to_json() const {
    nlohmann::json j;
    j["model"] = model.to_json();
    j["optimizer"] = optimizer;
    j["lr"] = lr;
    j["batch_size"] = batch_size;
    j["max_epochs"] = max_epochs;
    j["seed"] = seed;
    return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.model = ModelConfig::from_json(j.at("model"));
    c.optimizer = j.at("optimizer").get<std::string>();
    c.lr = j.at("lr").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

namespace {

Tensor<float> make_batch(const EEGDataset& ds,
                         const std::vector<std::size_t>& idx, std::size_t from,
                         std::size_t to) {
    std::size_t ct = ds.channels * ds.timesteps;
    Tensor<float> x({to - from, ds.channels, ds.timesteps});
    float* p = x.mutable_ptr();
    for (std::size_t i = from; i < to; ++i)
        std::copy(ds.record(idx[i]), ds.record(idx[i]) + ct,
                  p + (i - from) * ct);
    return x;
}

Tensor<float> make_onehot(const EEGDataset& ds,
                          const std::vector<std::size_t>& idx,
                          std::size_t from, std::size_t to, std::size_t K) {
    Tensor<float> y = Tensor<float>::zeros({to - from, K});
    for (std::size_t i = from; i < to; ++i)
        y.mutable_data()[(i - from) * K + ds.labels[idx[i]]] = 1.0f;
    return y;
}

// batch boundaries over n samples; a trailing singleton is folded into the
// previous batch so train-mode batchnorm always sees at least two samples
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(
    std::size_t n, std::size_t batch) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t s = 0; s < n; s += batch)
        out.push_back({s, std::min(s + batch, n)});
    if (out.size() > 1 && out.back().second - out.back().first == 1) {
        out[out.size() - 2].second = n;
        out.pop_back();
    }
    return out;
}

struct Stepper {
    std::optional<Adam<float>> adam;
    std::optional<AdaDelta<float>> adadelta;

    Stepper(const std::string& name, double lr) {
        if (name == "adam")
            adam.emplace(static_cast<float>(lr));
        else if (name == "adadelta")
            adadelta.emplace(static_cast<float>(lr));
        else
            throw Error(ErrorCode::InvalidSpec,
                        "unknown optimizer '" + name + "'");
    }
    void step(const std::vector<Tensor<float>*>& ps,
              const std::vector<const Tensor<float>*>& gs) {
        if (adam) adam->step(ps, gs);
        else adadelta->step(ps, gs);
    }
};

double classifier_split_accuracy(Model<float>& model, const EEGDataset& ds,
                                 const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    model.mode = Mode::Eval;
    auto ctx = model.context();
    std::size_t K = model.config.num_classes;
    std::size_t hit = 0;
    for (auto [from, to] : batch_ranges(idx.size(), 256)) {
        auto probs = model.classify(ctx, make_batch(ds, idx, from, to));
        for (std::size_t b = 0; b < to - from; ++b) {
            std::size_t am = 0;
            for (std::size_t k = 1; k < K; ++k)
                if (probs.data()[b * K + k] > probs.data()[b * K + am]) am = k;
            if (am == ds.labels[idx[from + b]]) ++hit;
        }
    }
    return double(hit) / double(idx.size());
}

double reconstruction_loss(Model<float>& model, const EEGDataset& ds,
                           const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    model.mode = Mode::Eval;
    auto ctx = model.context();
    double total = 0;
    for (auto [from, to] : batch_ranges(idx.size(), 256)) {
        auto x = make_batch(ds, idx, from, to);
        total += double(binary_cross_entropy(model.forward(ctx, x), x).item()) *
                 double(to - from);
    }
    return total / double(idx.size());
}

std::vector<std::vector<float>> snapshot(Model<float>& m) {
    std::vector<std::vector<float>> out;
    for (auto& [n, p] : m.parameters()) out.push_back(p->data());
    for (auto& [n, p] : m.state_tensors()) out.push_back(p->data());
    return out;
}

void restore(Model<float>& m, const std::vector<std::vector<float>>& snap) {
    std::size_t i = 0;
    for (auto& [n, p] : m.parameters()) p->mutable_data() = snap[i++];
    for (auto& [n, p] : m.state_tensors()) p->mutable_data() = snap[i++];
}

std::vector<float> embed_split(Model<float>& model, const EEGDataset& ds,
                               const std::vector<std::size_t>& idx,
                               std::size_t& dim) {
    model.mode = Mode::Eval;
    auto ctx = model.context();
    std::vector<float> out;
    dim = 0;
    for (auto [from, to] : batch_ranges(idx.size(), 256)) {
        auto e = model.encode(ctx, make_batch(ds, idx, from, to));
        dim = e.shape()[1];
        out.insert(out.end(), e.data().begin(), e.data().end());
    }
    return out;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const EEGDataset& raw,
                  const SplitPlan& split) {
    if (split.train.empty())
        throw Error(ErrorCode::TooFewSamples, "empty train split");
    raw.validate();
    if (raw.channels != cfg.model.channels ||
        raw.timesteps != cfg.model.timesteps ||
        raw.num_classes != cfg.model.num_classes)
        throw Error(ErrorCode::GeometryMismatch,
                    "dataset (" + std::to_string(raw.channels) + "," +
                        std::to_string(raw.timesteps) + "," +
                        std::to_string(raw.num_classes) +
                        ") does not match the model config");
    if (cfg.batch_size < 1 || cfg.max_epochs < 1)
        throw Error(ErrorCode::InvalidSpec,
                    "batch size and max epochs must be >= 1");

    bool is_ae = cfg.model.arch == Arch::Autoencoder;
    EEGDataset ds = is_ae ? minmax_normalize(raw) : standardize(raw, split.train);

    TrainResult result{build_model<float>(cfg.model), {}, false, Knn{5},
                       RandomForest{100, cfg.seed}};
    Model<float>& model = result.model;
    std::size_t K = cfg.model.num_classes;

    std::vector<Tensor<float>*> params;
    for (auto& [n, p] : model.parameters()) params.push_back(p);
    Stepper opt(cfg.optimizer, cfg.lr);

    double best_score = -1e300;
    std::vector<std::vector<float>> best_snap;
    std::vector<std::size_t> order = split.train;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        RngStream shuffle_rng(cfg.seed ^ epoch, "epoch_shuffle");
        shuffle_rng.shuffle(order);
        RngStream drop_rng(cfg.seed ^ epoch, "dropout");

        double loss_sum = 0;
        std::size_t hit = 0;
        auto ranges = batch_ranges(order.size(), cfg.batch_size);
        for (std::size_t bi = 0; bi < ranges.size(); ++bi) {
            auto [from, to] = ranges[bi];
            model.mode = Mode::Train;
            Tape<float> tape;
            Context<float> ctx{&tape, Mode::Train, &drop_rng};
            auto x = make_batch(ds, order, from, to);
            Tensor<float> loss;
            if (is_ae) {
                loss = binary_cross_entropy(model.forward(ctx, x), x, &tape);
            } else {
                auto logits = model.forward(ctx, x);
                auto y = make_onehot(ds, order, from, to, K);
                loss = categorical_cross_entropy(logits, y, &tape);
                for (std::size_t b = 0; b < to - from; ++b) {
                    std::size_t am = 0;
                    for (std::size_t k = 1; k < K; ++k)
                        if (logits.data()[b * K + k] >
                            logits.data()[b * K + am])
                            am = k;
                    if (am == ds.labels[order[from + b]]) ++hit;
                }
            }
            if (!std::isfinite(loss.item()))
                throw Error(ErrorCode::NonFiniteLoss,
                            "loss diverged at epoch " + std::to_string(epoch) +
                                ", batch " + std::to_string(bi));
            loss_sum += double(loss.item()) * double(to - from);
            tape.backward(loss);
            std::vector<const Tensor<float>*> grads;
            for (auto* p : params) grads.push_back(tape.grad(*p));
            opt.step(params, grads);
        }
        double train_loss = loss_sum / double(order.size());
        double train_acc =
            is_ae ? 0.0 : double(hit) / double(order.size());

        double val_score;
        if (split.val.empty()) {
            // no validation data: select on the training objective. The loss
            // term breaks accuracy ties toward converged epochs, whose
            // batchnorm running statistics have settled.
            val_score = is_ae ? -train_loss : train_acc - train_loss;
        } else {
            val_score = is_ae ? -reconstruction_loss(model, ds, split.val)
                              : classifier_split_accuracy(model, ds, split.val);
        }
        result.history.train_loss.push_back(train_loss);
        result.history.train_acc.push_back(train_acc);
        result.history.val_score.push_back(val_score);
        result.history.epoch_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count());
        if (val_score > best_score) {  // strict: earliest epoch wins ties
            best_score = val_score;
            best_snap = snapshot(model);
            result.history.best_epoch = epoch;
        }
    }
    restore(model, best_snap);
    model.mode = Mode::Eval;

    if (is_ae) {
        std::size_t dim = 0;
        auto emb = embed_split(model, ds, split.train, dim);
        std::vector<std::uint32_t> labels;
        for (auto i : split.train) labels.push_back(ds.labels[i]);
        result.knn.fit(emb, dim, labels);
        result.rf.fit(emb, dim, labels);
        result.has_heads = true;
    }
    return result;
}

std::string report_model_name(Arch arch) {
    switch (arch) {
        case Arch::FourCnn: return "FourCNN";
        case Arch::GruEncoder: return "GRUNetwork";
        case Arch::Autoencoder: return "Autoencoder";
    }
    return "?";
}

namespace {

EEGDataset normalized_for(Model<float>& model, const EEGDataset& raw,
                          const SplitPlan& split) {
    return model.config.arch == Arch::Autoencoder
               ? minmax_normalize(raw)
               : standardize(raw, split.train);
}

std::vector<std::uint32_t> truth_of(const EEGDataset& ds,
                                    const std::vector<std::size_t>& idx) {
    std::vector<std::uint32_t> t;
    for (auto i : idx) t.push_back(ds.labels[i]);
    return t;
}

}  // namespace

MetricsReport evaluate(Model<float>& model, const EEGDataset& raw,
                       const SplitPlan& split,
                       const std::vector<std::size_t>& indices,
                       const std::string& model_name) {
    auto ds = normalized_for(model, raw, split);
    if (model.config.arch == Arch::Autoencoder)
        throw Error(ErrorCode::InvalidSpec,
                    "autoencoder evaluation goes through its heads");
    model.mode = Mode::Eval;
    auto ctx = model.context();
    std::size_t K = model.config.num_classes;
    std::vector<std::uint32_t> pred;
    std::vector<double> pos_scores;
    for (auto [from, to] : batch_ranges(indices.size(), 256)) {
        auto probs = model.classify(ctx, make_batch(ds, indices, from, to));
        for (std::size_t b = 0; b < to - from; ++b) {
            std::size_t am = 0;
            for (std::size_t k = 1; k < K; ++k)
                if (probs.data()[b * K + k] > probs.data()[b * K + am]) am = k;
            pred.push_back(static_cast<std::uint32_t>(am));
            if (K == 2) pos_scores.push_back(double(probs.data()[b * K + 1]));
        }
    }
    return make_report(raw.name, model_name, pred, truth_of(ds, indices), K,
                       pos_scores);
}

namespace {

template <typename Head>
MetricsReport evaluate_head_impl(Model<float>& model, const Head& head,
                                 const EEGDataset& raw, const SplitPlan& split,
                                 const std::vector<std::size_t>& indices,
                                 const std::string& name) {
    auto ds = normalized_for(model, raw, split);
    std::size_t dim = 0;
    auto emb = embed_split(model, ds, indices, dim);
    auto pred = head.predict(emb, dim);
    return make_report(raw.name, name, pred, truth_of(ds, indices),
                       model.config.num_classes);
}

}  // namespace

MetricsReport evaluate_head(Model<float>& model, const Knn& knn,
                            const EEGDataset& ds, const SplitPlan& split,
                            const std::vector<std::size_t>& indices) {
    return evaluate_head_impl(model, knn, ds, split, indices, "AutoencoderKNN");
}

MetricsReport evaluate_head(Model<float>& model, const RandomForest& rf,
                            const EEGDataset& ds, const SplitPlan& split,
                            const std::vector<std::size_t>& indices) {
    return evaluate_head_impl(model, rf, ds, split, indices, "AutoencoderRF");
}

BenchResult bench(const BenchSpec& spec) {
    BenchResult out;
    for (const auto& preset : spec.presets) {
        for (const auto& arch_s : spec.models) {
            std::string cell = preset + "/" + arch_s;
            try {
                Arch arch = arch_from_name(arch_s);
                auto sspec = preset_spec(preset, spec.seed);
                sspec.difficulty = spec.difficulty;
                auto ds = synth_generate(sspec);
                auto split = make_split(ds, spec.seed);
                auto mc = ModelConfig::make(arch, ds.channels, ds.timesteps,
                                            ds.num_classes, spec.seed);
                auto tc = TrainConfig::defaults_for(mc);
                tc.max_epochs = spec.max_epochs;
                auto res = train(tc, ds, split);
                if (res.has_heads) {
                    out.reports.push_back(evaluate_head(res.model, res.knn, ds,
                                                        split, split.test));
                    out.reports.push_back(evaluate_head(res.model, res.rf, ds,
                                                        split, split.test));
                } else {
                    out.reports.push_back(evaluate(res.model, ds, split,
                                                   split.test,
                                                   report_model_name(arch)));
                }
            } catch (const std::exception& e) {
                out.errors.push_back(cell + ": " + e.what());
            }
        }
    }
    out.table = report_table(out.reports);
    if (!out.errors.empty()) {
        out.table += "failed cells:\n";
        for (const auto& e : out.errors) out.table += "  " + e + "\n";
    }
    return out;
}

}  // namespace ueeg
