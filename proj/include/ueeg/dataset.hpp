#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ueeg/error.hpp"

namespace ueeg {

// In-memory dataset: N records of shape (C,T), one unsigned label each.
// Immutable by convention after construction/load.
struct EEGDataset {
    std::string name;
    std::size_t num_classes = 0;
    std::size_t channels = 0;
    std::size_t timesteps = 0;
    std::vector<float> records;         // N*C*T row-major
    std::vector<std::uint32_t> labels;  // N
    bool has_declared_splits = false;
    std::vector<std::uint32_t> decl_train, decl_val, decl_test;

    std::size_t size() const { return labels.size(); }
    const float* record(std::size_t i) const {
        return records.data() + i * channels * timesteps;
    }
    // checks every invariant; throws on violation
    void validate() const;
};

struct SplitPlan {
    std::vector<std::size_t> train, val, test;
    std::uint64_t seed = 0;
    // true when the train portion misses at least one class
    bool stratification_warning = false;
};

// binary container ("EEGC" v1), canonical JSON manifest + f32/u32 payload
void save_container(const EEGDataset& ds, const std::string& path);
EEGDataset load_container(const std::string& path);

// plain CSV: 3-line commented header, then rows of C*T floats + integer label
void save_csv(const EEGDataset& ds, const std::string& path);
EEGDataset import_csv(const std::string& path);

// stride = window - overlap; trailing remainder dropped; segments returned
// as flattened (C,window) blocks
std::vector<std::size_t> window_starts(std::size_t length, std::size_t window,
                                       std::size_t overlap);
std::vector<std::vector<float>> sliding_window(const float* signal,
                                               std::size_t channels,
                                               std::size_t length,
                                               std::size_t window,
                                               std::size_t overlap);
// applies the window to every record, replicating labels
EEGDataset window_dataset(const EEGDataset& ds, std::size_t window,
                          std::size_t overlap);

// declared splits verbatim; otherwise seeded shuffle with
// test = floor(N/4), val = floor((N - test)/4), remainder train
SplitPlan make_split(const EEGDataset& ds, std::uint64_t seed);

// per-channel z-score with statistics from the train indices only
EEGDataset standardize(const EEGDataset& ds,
                       const std::vector<std::size_t>& train_indices);
// per-record min-max to [0,1] (autoencoder reconstruction targets)
EEGDataset minmax_normalize(const EEGDataset& ds);

struct SynthSpec {
    std::size_t channels = 0;
    std::size_t timesteps = 0;
    std::size_t num_classes = 0;
    std::size_t num_records = 0;
    std::uint64_t seed = 0;
    double difficulty = 0.5;  // scales Gaussian noise; 0 = clean
    std::string name = "synth";
};

// class k is a sinusoid of k+1 cycles per window with a random per-record
// phase, plus Gaussian noise of std 3*difficulty
EEGDataset synth_generate(const SynthSpec& spec);

// geometry presets named after the published datasets, at reduced N
SynthSpec preset_spec(const std::string& name, std::uint64_t seed = 0);
std::vector<std::string> preset_names();

}  // namespace ueeg
