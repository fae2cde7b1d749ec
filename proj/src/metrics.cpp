#include "ueeg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace ueeg {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a == 0 || a != b)
        throw Error(ErrorCode::LengthMismatch,
                    "prediction length " + std::to_string(a) +
                        " vs truth length " + std::to_string(b));
}

}  // namespace

double accuracy(const std::vector<std::uint32_t>& pred,
                const std::vector<std::uint32_t>& truth) {
    check_lengths(pred.size(), truth.size());
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++hit;
    return double(hit) / double(pred.size());
}

std::vector<std::size_t> confusion_matrix(const std::vector<std::uint32_t>& pred,
                                          const std::vector<std::uint32_t>& truth,
                                          std::size_t K) {
    check_lengths(pred.size(), truth.size());
    std::vector<std::size_t> m(K * K, 0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] >= K || truth[i] >= K)
            throw Error(ErrorCode::LabelOutOfRange,
                        "label outside [0," + std::to_string(K) + ") at " +
                            std::to_string(i));
        m[truth[i] * K + pred[i]]++;
    }
    return m;
}

double macro_f1(const std::vector<std::uint32_t>& pred,
                const std::vector<std::uint32_t>& truth, std::size_t K) {
    auto m = confusion_matrix(pred, truth, K);
    double total = 0;
    for (std::size_t c = 0; c < K; ++c) {
        std::size_t tp = m[c * K + c], fp = 0, fn = 0;
        for (std::size_t o = 0; o < K; ++o) {
            if (o == c) continue;
            fp += m[o * K + c];
            fn += m[c * K + o];
        }
        double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
        double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
        total += p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    return total / double(K);
}

namespace {

void check_binary(const std::vector<double>& scores,
                  const std::vector<std::uint32_t>& labels) {
    check_lengths(scores.size(), labels.size());
    bool pos = false, neg = false;
    for (auto l : labels) {
        if (l == 1) pos = true;
        else if (l == 0) neg = true;
        else
            throw Error(ErrorCode::LabelOutOfRange,
                        "auc labels must be 0/1");
    }
    if (!pos || !neg)
        throw Error(ErrorCode::SingleClassInput,
                    "auc needs both classes present");
}

}  // namespace

double auc_mann_whitney(const std::vector<double>& scores,
                        const std::vector<std::uint32_t>& labels) {
    check_binary(scores, labels);
    std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });
    // average ranks over tied groups (1-based ranks)
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg = 0.5 * double(i + j) + 1.0;
        for (std::size_t s = i; s <= j; ++s) rank[order[s]] = avg;
        i = j + 1;
    }
    double rank_sum = 0;
    std::size_t n_pos = 0;
    for (std::size_t s = 0; s < n; ++s)
        if (labels[s] == 1) {
            rank_sum += rank[s];
            ++n_pos;
        }
    std::size_t n_neg = n - n_pos;
    double u = rank_sum - 0.5 * double(n_pos) * double(n_pos + 1);
    return u / (double(n_pos) * double(n_neg));
}

double auc_trapezoid(const std::vector<double>& scores,
                     const std::vector<std::uint32_t>& labels) {
    check_binary(scores, labels);
    std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });
    double n_pos = 0, n_neg = 0;
    for (auto l : labels) (l == 1 ? n_pos : n_neg) += 1.0;
    double area = 0, tp = 0, fp = 0, prev_tp = 0, prev_fp = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        // sweep an entire tied-score group at once
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        for (std::size_t s = i; s <= j; ++s)
            (labels[order[s]] == 1 ? tp : fp) += 1.0;
        area += 0.5 * (fp - prev_fp) * (tp + prev_tp);
        prev_tp = tp;
        prev_fp = fp;
        i = j + 1;
    }
    return area / (n_pos * n_neg);
}

double auc_roc(const std::vector<double>& scores,
               const std::vector<std::uint32_t>& labels) {
    double mw = auc_mann_whitney(scores, labels);
    double tz = auc_trapezoid(scores, labels);
    if (std::abs(mw - tz) > 1e-12)
        throw Error(ErrorCode::DomainError,
                    "auc formulations disagree: " + std::to_string(mw) +
                        " vs " + std::to_string(tz));
    return mw;
}

MetricsReport make_report(const std::string& dataset, const std::string& model,
                          const std::vector<std::uint32_t>& pred,
                          const std::vector<std::uint32_t>& truth,
                          std::size_t K,
                          const std::vector<double>& positive_scores) {
    MetricsReport r;
    r.dataset = dataset;
    r.model = model;
    r.num_classes = K;
    r.accuracy = accuracy(pred, truth);
    r.f1 = macro_f1(pred, truth, K);
    r.confusion = confusion_matrix(pred, truth, K);
    bool pos = false, neg = false;
    for (auto t : truth) (t == 1 ? pos : neg) = true;
    // AUC is undefined unless both classes actually appear
    if (K == 2 && !positive_scores.empty() && pos && neg) {
        r.has_auc = true;
        r.auc = auc_roc(positive_scores, truth);
    }
    return r;
}

double published_accuracy(const std::string& model, const std::string& dataset) {
    // consolidated results grid from the source publication, display only
    static const std::map<std::pair<std::string, std::string>, double> ref = {
        {{"AutoencoderKNN", "ERN"}, 0.665},
        {{"AutoencoderKNN", "SMR"}, 0.260},
        {{"AutoencoderKNN", "BMNIST"}, 0.276},
        {{"AutoencoderKNN", "BMNIST_2"}, 0.846},
        {{"AutoencoderKNN", "SEED"}, 0.393},
        {{"AutoencoderKNN", "ThoughtViz"}, 0.419},
        {{"AutoencoderRF", "ERN"}, 0.630},
        {{"AutoencoderRF", "SMR"}, 0.243},
        {{"AutoencoderRF", "BMNIST"}, 0.275},
        {{"AutoencoderRF", "BMNIST_2"}, 0.857},
        {{"AutoencoderRF", "SEED"}, 0.365},
        {{"AutoencoderRF", "ThoughtViz"}, 0.651},
        {{"FourCNN", "ERN"}, 0.711},
        {{"FourCNN", "SMR"}, 0.385},
        {{"FourCNN", "BMNIST"}, 0.352},
        {{"FourCNN", "BMNIST_2"}, 0.994},
        {{"FourCNN", "SEED"}, 0.648},
        {{"FourCNN", "ThoughtViz"}, 0.740},
        {{"GRUNetwork", "ERN"}, 0.714},
        {{"GRUNetwork", "SMR"}, 0.333},
        {{"GRUNetwork", "BMNIST"}, 0.338},
        {{"GRUNetwork", "BMNIST_2"}, 0.993},
        {{"GRUNetwork", "SEED"}, 0.744},
        {{"GRUNetwork", "ThoughtViz"}, 0.774},
    };
    auto it = ref.find({model, dataset});
    return it == ref.end() ? -1.0 : it->second;
}

std::string report_csv(const std::vector<MetricsReport>& reports) {
    std::ostringstream os;
    os << "dataset,model,acc,f1,auc\n";
    os << std::fixed << std::setprecision(4);
    for (const auto& r : reports) {
        os << r.dataset << "," << r.model << "," << r.accuracy << "," << r.f1
           << ",";
        if (r.has_auc) os << r.auc;
        os << "\n";
    }
    return os.str();
}

std::string report_table(const std::vector<MetricsReport>& reports) {
    // stable orders: datasets in first-seen order, models in canonical order
    std::vector<std::string> datasets;
    for (const auto& r : reports)
        if (std::find(datasets.begin(), datasets.end(), r.dataset) ==
            datasets.end())
            datasets.push_back(r.dataset);
    const std::vector<std::string> canon = {"AutoencoderKNN", "AutoencoderRF",
                                            "FourCNN", "GRUNetwork"};
    std::vector<std::string> models;
    for (const auto& m : canon)
        for (const auto& r : reports)
            if (r.model == m &&
                std::find(models.begin(), models.end(), m) == models.end())
                models.push_back(m);
    for (const auto& r : reports)
        if (std::find(models.begin(), models.end(), r.model) == models.end())
            models.push_back(r.model);

    auto find = [&](const std::string& m,
                    const std::string& d) -> const MetricsReport* {
        for (const auto& r : reports)
            if (r.model == m && r.dataset == d) return &r;
        return nullptr;
    };

    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    std::size_t name_w = 16;
    for (const auto& m : models) name_w = std::max(name_w, m.size() + 1);
    os << std::left << std::setw(int(name_w)) << "model";
    for (const auto& d : datasets)
        os << "| " << std::setw(24) << (d + " Acc/F1 [ref]");
    os << "\n" << std::string(name_w + datasets.size() * 26, '-') << "\n";
    for (const auto& m : models) {
        os << std::left << std::setw(int(name_w)) << m;
        for (const auto& d : datasets) {
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(3);
            if (const MetricsReport* r = find(m, d)) {
                cell << r->accuracy << "/" << r->f1;
                double ref = published_accuracy(m, d);
                if (ref >= 0) cell << " [" << ref << "]";
            } else {
                cell << "ERROR";
            }
            os << "| " << std::setw(24) << cell.str();
        }
        os << "\n";
    }
    os << "(macro-averaged F1; bracketed values are published reference "
          "accuracies, display only)\n";
    return os.str();
}

}  // namespace ueeg
