#include "ueeg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "ueeg/rng.hpp"

namespace ueeg {

void EEGDataset::validate() const {
    if (channels == 0 || timesteps == 0)
        throw Error(ErrorCode::DatasetError, "dataset has empty geometry");
    if (records.size() != labels.size() * channels * timesteps)
        throw Error(ErrorCode::ShapeMismatch,
                    "record payload holds " + std::to_string(records.size()) +
                        " values, expected " +
                        std::to_string(labels.size() * channels * timesteps));
    for (std::size_t i = 0; i < records.size(); ++i)
        if (!std::isfinite(records[i]))
            throw Error(ErrorCode::NonFiniteData,
                        "non-finite sample at flat index " + std::to_string(i));
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= num_classes)
            throw Error(ErrorCode::LabelOutOfRange,
                        "label " + std::to_string(labels[i]) + " at record " +
                            std::to_string(i) + " with " +
                            std::to_string(num_classes) + " classes");
    if (has_declared_splits) {
        std::vector<char> seen(size(), 0);
        for (const auto* part : {&decl_train, &decl_val, &decl_test})
            for (auto idx : *part) {
                if (idx >= size())
                    throw Error(ErrorCode::DatasetError,
                                "declared split index " + std::to_string(idx) +
                                    " out of range");
                if (seen[idx]++)
                    throw Error(ErrorCode::DatasetError,
                                "declared split reuses index " +
                                    std::to_string(idx));
            }
    }
}

// ---------------------------------------------------------------------------
// binary container
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'E', 'E', 'G', 'C'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, std::size_t& offset,
                      const char* what) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is)
        throw Error(ErrorCode::ShapeMismatch,
                    std::string("container truncated reading ") + what +
                        " at byte " + std::to_string(offset));
    offset += 4;
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
           (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

void put_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}

}  // namespace

void save_container(const EEGDataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error(ErrorCode::IoError, "cannot open '" + path + "' for write");
    os.write(kMagic, 4);
    os.put(1);
    os.put(0);
    os.put(0);
    os.put(0);
    nlohmann::json manifest;  // std::map keys -> canonical sorted order
    manifest["name"] = ds.name;
    manifest["num_classes"] = ds.num_classes;
    manifest["channels"] = ds.channels;
    manifest["timesteps"] = ds.timesteps;
    manifest["num_records"] = ds.size();
    manifest["has_declared_splits"] = ds.has_declared_splits;
    if (ds.has_declared_splits)
        manifest["split_indices"] = {{"test", ds.decl_test},
                                     {"train", ds.decl_train},
                                     {"val", ds.decl_val}};
    std::string m = manifest.dump();
    put_u32(os, static_cast<std::uint32_t>(m.size()));
    os.write(m.data(), static_cast<std::streamsize>(m.size()));
    for (float v : ds.records) put_f32(os, v);
    for (std::uint32_t v : ds.labels) put_u32(os, v);
    if (!os)
        throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

EEGDataset load_container(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    std::size_t offset = 0;
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw Error(ErrorCode::BadMagic,
                    "'" + path + "' is not a dataset container");
    offset += 4;
    char version = 0, reserved[3];
    is.get(version);
    is.read(reserved, 3);
    if (!is)
        throw Error(ErrorCode::ShapeMismatch,
                    "container truncated in header at byte " +
                        std::to_string(offset));
    if (version != 1)
        throw Error(ErrorCode::VersionUnsupported,
                    "container format version " + std::to_string(int(version)));
    offset += 4;
    std::uint32_t mlen = get_u32(is, offset, "manifest length");
    std::string mtext(mlen, '\0');
    is.read(mtext.data(), mlen);
    if (!is)
        throw Error(ErrorCode::ShapeMismatch,
                    "container truncated in manifest: expected " +
                        std::to_string(mlen) + " bytes at byte " +
                        std::to_string(offset));
    offset += mlen;
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(mtext);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::DatasetError,
                    std::string("manifest is not valid JSON: ") + e.what());
    }
    EEGDataset ds;
    try {
        ds.name = manifest.at("name").get<std::string>();
        ds.num_classes = manifest.at("num_classes").get<std::size_t>();
        ds.channels = manifest.at("channels").get<std::size_t>();
        ds.timesteps = manifest.at("timesteps").get<std::size_t>();
        ds.has_declared_splits =
            manifest.at("has_declared_splits").get<bool>();
        std::size_t n = manifest.at("num_records").get<std::size_t>();
        if (ds.has_declared_splits) {
            const auto& si = manifest.at("split_indices");
            ds.decl_train = si.at("train").get<std::vector<std::uint32_t>>();
            ds.decl_val = si.at("val").get<std::vector<std::uint32_t>>();
            ds.decl_test = si.at("test").get<std::vector<std::uint32_t>>();
        }
        ds.labels.resize(n);
        ds.records.resize(n * ds.channels * ds.timesteps);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::DatasetError,
                    std::string("manifest missing field: ") + e.what());
    }
    std::size_t want = ds.records.size() * 4 + ds.labels.size() * 4;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        std::uint32_t bits = get_u32(is, offset, "record payload");
        std::memcpy(&ds.records[i], &bits, 4);
    }
    for (std::size_t i = 0; i < ds.labels.size(); ++i)
        ds.labels[i] = get_u32(is, offset, "label payload");
    (void)want;
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// CSV path
// ---------------------------------------------------------------------------

void save_csv(const EEGDataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream os(path);
    if (!os)
        throw Error(ErrorCode::IoError, "cannot open '" + path + "' for write");
    os << "# name=" << ds.name << "\n";
    os << "# channels=" << ds.channels << " timesteps=" << ds.timesteps
       << " classes=" << ds.num_classes << "\n";
    os << "# row: " << ds.channels * ds.timesteps
       << " floats (channel-major), then integer label\n";
    os.precision(9);
    std::size_t ct = ds.channels * ds.timesteps;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ct; ++j) os << ds.records[i * ct + j] << ",";
        os << ds.labels[i] << "\n";
    }
}

EEGDataset import_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    EEGDataset ds;
    std::string line;
    for (int h = 0; h < 3; ++h) {
        if (!std::getline(is, line) || line.empty() || line[0] != '#')
            throw Error(ErrorCode::DatasetError,
                        "expected 3 commented header lines in '" + path + "'");
        std::istringstream ls(line.substr(1));
        std::string tok;
        while (ls >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
            if (key == "name") ds.name = val;
            else if (key == "channels") ds.channels = std::stoul(val);
            else if (key == "timesteps") ds.timesteps = std::stoul(val);
            else if (key == "classes") ds.num_classes = std::stoul(val);
        }
    }
    if (ds.channels == 0 || ds.timesteps == 0 || ds.num_classes == 0)
        throw Error(ErrorCode::DatasetError,
                    "csv header must declare channels, timesteps and classes");
    std::size_t ct = ds.channels * ds.timesteps;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<float> vals;
        vals.reserve(ct + 1);
        while (std::getline(ls, cell, ',')) {
            try {
                vals.push_back(std::stof(cell));
            } catch (const std::exception&) {
                throw Error(ErrorCode::DatasetError,
                            "row " + std::to_string(row) +
                                ": cannot parse '" + cell + "'");
            }
        }
        if (vals.size() != ct + 1)
            throw Error(ErrorCode::ShapeMismatch,
                        "row " + std::to_string(row) + " has " +
                            std::to_string(vals.size()) + " cells, expected " +
                            std::to_string(ct + 1));
        ds.records.insert(ds.records.end(), vals.begin(), vals.begin() + ct);
        float lab = vals.back();
        if (lab < 0 || lab != std::floor(lab))
            throw Error(ErrorCode::LabelOutOfRange,
                        "row " + std::to_string(row) +
                            ": label cell is not a non-negative integer");
        ds.labels.push_back(static_cast<std::uint32_t>(lab));
        ++row;
    }
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// windowing
// ---------------------------------------------------------------------------

std::vector<std::size_t> window_starts(std::size_t length, std::size_t window,
                                       std::size_t overlap) {
    if (window == 0 || overlap >= window)
        throw Error(ErrorCode::InvalidSpec,
                    "need 0 <= overlap < window and window > 0");
    if (length < window)
        throw Error(ErrorCode::SignalTooShort,
                    "signal length " + std::to_string(length) +
                        " shorter than window " + std::to_string(window));
    std::size_t stride = window - overlap;
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + window <= length; s += stride)
        starts.push_back(s);
    return starts;
}

std::vector<std::vector<float>> sliding_window(const float* signal,
                                               std::size_t channels,
                                               std::size_t length,
                                               std::size_t window,
                                               std::size_t overlap) {
    auto starts = window_starts(length, window, overlap);
    std::vector<std::vector<float>> out;
    out.reserve(starts.size());
    for (auto s : starts) {
        std::vector<float> seg(channels * window);
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t t = 0; t < window; ++t)
                seg[c * window + t] = signal[c * length + s + t];
        out.push_back(std::move(seg));
    }
    return out;
}

EEGDataset window_dataset(const EEGDataset& ds, std::size_t window,
                          std::size_t overlap) {
    EEGDataset out;
    out.name = ds.name;
    out.num_classes = ds.num_classes;
    out.channels = ds.channels;
    out.timesteps = window;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto segs =
            sliding_window(ds.record(i), ds.channels, ds.timesteps, window,
                           overlap);
        for (auto& seg : segs) {
            out.records.insert(out.records.end(), seg.begin(), seg.end());
            out.labels.push_back(ds.labels[i]);
        }
    }
    out.validate();
    return out;
}

// ---------------------------------------------------------------------------
// splitting and normalization
// ---------------------------------------------------------------------------

SplitPlan make_split(const EEGDataset& ds, std::uint64_t seed) {
    std::size_t n = ds.size();
    if (n < 4)
        throw Error(ErrorCode::TooFewSamples,
                    "need at least 4 records to split, have " +
                        std::to_string(n));
    SplitPlan plan;
    plan.seed = seed;
    if (ds.has_declared_splits) {
        auto widen = [](const std::vector<std::uint32_t>& v) {
            return std::vector<std::size_t>(v.begin(), v.end());
        };
        plan.train = widen(ds.decl_train);
        plan.val = widen(ds.decl_val);
        plan.test = widen(ds.decl_test);
    } else {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        RngStream rng(seed, "split");
        rng.shuffle(order);
        std::size_t n_test = n / 4;
        std::size_t n_val = (n - n_test) / 4;
        plan.test.assign(order.begin(), order.begin() + n_test);
        plan.val.assign(order.begin() + n_test,
                        order.begin() + n_test + n_val);
        plan.train.assign(order.begin() + n_test + n_val, order.end());
    }
    std::vector<char> covered(ds.num_classes, 0);
    for (auto i : plan.train) covered[ds.labels[i]] = 1;
    plan.stratification_warning =
        std::find(covered.begin(), covered.end(), 0) != covered.end();
    return plan;
}

EEGDataset standardize(const EEGDataset& ds,
                       const std::vector<std::size_t>& train_indices) {
    if (train_indices.empty())
        throw Error(ErrorCode::TooFewSamples,
                    "standardize needs a non-empty train split");
    std::size_t C = ds.channels, T = ds.timesteps;
    std::vector<double> mean(C, 0.0), var(C, 0.0);
    double n = static_cast<double>(train_indices.size() * T);
    for (auto i : train_indices) {
        const float* rec = ds.record(i);
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t t = 0; t < T; ++t) mean[c] += rec[c * T + t];
    }
    for (auto& m : mean) m /= n;
    for (auto i : train_indices) {
        const float* rec = ds.record(i);
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t t = 0; t < T; ++t) {
                double d = rec[c * T + t] - mean[c];
                var[c] += d * d;
            }
    }
    EEGDataset out = ds;
    for (std::size_t c = 0; c < C; ++c) {
        double sd = std::sqrt(var[c] / n);
        if (sd < 1e-8) sd = 1e-8;  // constant channels map to zeros
        for (std::size_t i = 0; i < ds.size(); ++i)
            for (std::size_t t = 0; t < T; ++t) {
                std::size_t idx = (i * C + c) * T + t;
                out.records[idx] =
                    static_cast<float>((ds.records[idx] - mean[c]) / sd);
            }
    }
    return out;
}

EEGDataset minmax_normalize(const EEGDataset& ds) {
    EEGDataset out = ds;
    std::size_t ct = ds.channels * ds.timesteps;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const float* rec = ds.record(i);
        float lo = rec[0], hi = rec[0];
        for (std::size_t j = 1; j < ct; ++j) {
            lo = std::min(lo, rec[j]);
            hi = std::max(hi, rec[j]);
        }
        float span = hi - lo;
        for (std::size_t j = 0; j < ct; ++j)
            out.records[i * ct + j] = span > 0 ? (rec[j] - lo) / span : 0.0f;
    }
    return out;
}

// ---------------------------------------------------------------------------
// synthetic generation
// ---------------------------------------------------------------------------

EEGDataset synth_generate(const SynthSpec& spec) {
    if (spec.channels == 0 || spec.timesteps == 0 || spec.num_records == 0 ||
        spec.num_classes < 2)
        throw Error(ErrorCode::InvalidSpec,
                    "synth spec needs positive geometry and K >= 2");
    if (spec.difficulty < 0)
        throw Error(ErrorCode::InvalidSpec, "difficulty must be >= 0");
    EEGDataset ds;
    ds.name = spec.name;
    ds.num_classes = spec.num_classes;
    ds.channels = spec.channels;
    ds.timesteps = spec.timesteps;
    ds.labels.resize(spec.num_records);
    ds.records.resize(spec.num_records * spec.channels * spec.timesteps);
    RngStream lab_rng(spec.seed, "synth/labels");
    RngStream phase_rng(spec.seed, "synth/phase");
    RngStream noise_rng(spec.seed, "synth/noise");
    const double two_pi = 2.0 * std::numbers::pi;
    double noise_std = 3.0 * spec.difficulty;
    for (std::size_t i = 0; i < spec.num_records; ++i) {
        std::uint32_t k =
            static_cast<std::uint32_t>(lab_rng.next_below(spec.num_classes));
        ds.labels[i] = k;
        double freq = static_cast<double>(k + 1);
        double phase = phase_rng.uniform(0.0, two_pi);
        float* rec = ds.records.data() + i * spec.channels * spec.timesteps;
        for (std::size_t c = 0; c < spec.channels; ++c) {
            double coff = 0.37 * static_cast<double>(c);
            for (std::size_t t = 0; t < spec.timesteps; ++t) {
                double v = std::sin(two_pi * freq * t /
                                        static_cast<double>(spec.timesteps) +
                                    phase + coff);
                if (noise_std > 0) v += noise_std * noise_rng.normal();
                rec[c * spec.timesteps + t] = static_cast<float>(v);
            }
        }
    }
    ds.validate();
    return ds;
}

SynthSpec preset_spec(const std::string& name, std::uint64_t seed) {
    SynthSpec s;
    s.seed = seed;
    s.name = name;
    if (name == "ThoughtViz") {
        s.channels = 14; s.timesteps = 32; s.num_classes = 10;
        s.num_records = 400;
    } else if (name == "SEED") {
        s.channels = 62; s.timesteps = 32; s.num_classes = 3;
        s.num_records = 240;
    } else if (name == "ERN") {
        s.channels = 56; s.timesteps = 200; s.num_classes = 2;
        s.num_records = 160;
    } else if (name == "SMR") {
        s.channels = 22; s.timesteps = 500; s.num_classes = 4;
        s.num_records = 120;
    } else if (name == "BMNIST") {
        s.channels = 4; s.timesteps = 408; s.num_classes = 11;
        s.num_records = 220;
    } else if (name == "ThoughtViz-small") {
        s.channels = 14; s.timesteps = 32; s.num_classes = 10;
        s.num_records = 2000;
    } else {
        throw Error(ErrorCode::InvalidSpec, "unknown preset '" + name + "'");
    }
    return s;
}

std::vector<std::string> preset_names() {
    return {"ThoughtViz", "SEED", "ERN", "SMR", "BMNIST", "ThoughtViz-small"};
}

}  // namespace ueeg
