#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ueeg/error.hpp"

namespace ueeg {

double accuracy(const std::vector<std::uint32_t>& pred,
                const std::vector<std::uint32_t>& truth);

// unweighted mean of per-class F1; a class with no true and no predicted
// positives contributes 0
double macro_f1(const std::vector<std::uint32_t>& pred,
                const std::vector<std::uint32_t>& truth, std::size_t K);

// K x K counts, row = true class, column = predicted class
std::vector<std::size_t> confusion_matrix(const std::vector<std::uint32_t>& pred,
                                          const std::vector<std::uint32_t>& truth,
                                          std::size_t K);

// probability that a random positive outscores a random negative, ties 1/2
double auc_mann_whitney(const std::vector<double>& scores,
                        const std::vector<std::uint32_t>& labels);
// trapezoidal area under the ROC curve
double auc_trapezoid(const std::vector<double>& scores,
                     const std::vector<std::uint32_t>& labels);
// computes both formulations and insists they agree within 1e-12
double auc_roc(const std::vector<double>& scores,
               const std::vector<std::uint32_t>& labels);

struct MetricsReport {
    std::string dataset;
    std::string model;
    double accuracy = 0;
    double f1 = 0;  // macro averaged
    bool has_auc = false;
    double auc = 0;
    std::size_t num_classes = 0;
    std::vector<std::size_t> confusion;  // K*K, row-major by true class
};

MetricsReport make_report(const std::string& dataset, const std::string& model,
                          const std::vector<std::uint32_t>& pred,
                          const std::vector<std::uint32_t>& truth,
                          std::size_t K,
                          const std::vector<double>& positive_scores = {});

// header "dataset,model,acc,f1,auc"; auc cell empty for multi-class reports
std::string report_csv(const std::vector<MetricsReport>& reports);
// grid with models as rows and Acc/F1 column pairs per dataset; published
// reference accuracies shown in brackets where (model, dataset) names match
std::string report_table(const std::vector<MetricsReport>& reports);

// display-only reference accuracy from the published results grid, or -1
double published_accuracy(const std::string& model, const std::string& dataset);

}  // namespace ueeg
