#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ueeg/classical.hpp"
#include "ueeg/dataset.hpp"
#include "ueeg/metrics.hpp"
#include "ueeg/model.hpp"

namespace ueeg {

struct TrainConfig {
    ModelConfig model;
    std::string optimizer = "adam";  // "adam" or "adadelta"
    double lr = 0.001;
    std::size_t batch_size = 128;
    std::size_t max_epochs = 100;
    std::uint64_t seed = 0;

    // published per-architecture bindings: four_cnn (Adam 0.001, batch 128),
    // gru_encoder (Adam 0.001, batch 64), autoencoder (AdaDelta 0.001, 128)
    static TrainConfig defaults_for(const ModelConfig& m);

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> train_acc;
    // classifier: validation accuracy; autoencoder: negative validation
    // reconstruction loss (higher is better either way)
    std::vector<double> val_score;
    std::vector<double> epoch_seconds;  // informational, not compared
    std::size_t best_epoch = 0;
};

struct TrainResult {
    Model<float> model;  // parameters restored to the best epoch
    TrainHistory history;
    bool has_heads = false;  // autoencoder: KNN/RF fitted on embeddings
    Knn knn{5};
    RandomForest rf{100, 0};
};

// full training run on the given split; the dataset is normalized internally
// (z-score from train statistics for classifiers, per-record min-max for the
// autoencoder)
TrainResult train(const TrainConfig& cfg, const EEGDataset& ds,
                  const SplitPlan& split);

// eval-mode metrics over the chosen indices; model_name keys the published
// reference column. AUC is reported for binary classifier architectures.
MetricsReport evaluate(Model<float>& model, const EEGDataset& ds,
                       const SplitPlan& split,
                       const std::vector<std::size_t>& indices,
                       const std::string& model_name);
// autoencoder path: embeddings through the given head
MetricsReport evaluate_head(Model<float>& model, const Knn& knn,
                            const EEGDataset& ds, const SplitPlan& split,
                            const std::vector<std::size_t>& indices);
MetricsReport evaluate_head(Model<float>& model, const RandomForest& rf,
                            const EEGDataset& ds, const SplitPlan& split,
                            const std::vector<std::size_t>& indices);

struct BenchSpec {
    std::vector<std::string> presets;   // synthetic preset names
    std::vector<std::string> models;    // four_cnn, gru_encoder, autoencoder
    std::size_t max_epochs = 10;
    std::uint64_t seed = 0;
    double difficulty = 0.5;
};

struct BenchResult {
    std::vector<MetricsReport> reports;
    std::vector<std::string> errors;  // "<preset>/<model>: <message>"
    std::string table;
};

// runs every (preset, model) cell, isolating per-cell failures
BenchResult bench(const BenchSpec& spec);

// canonical model-row names used in reports and the reference column
std::string report_model_name(Arch arch);

}  // namespace ueeg
