#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ueeg/layers.hpp"
#include "ueeg/losses.hpp"

namespace ueeg {

enum class Arch { FourCnn, GruEncoder, Autoencoder };

inline std::string arch_name(Arch a) {
    switch (a) {
        case Arch::FourCnn: return "four_cnn";
        case Arch::GruEncoder: return "gru_encoder";
        case Arch::Autoencoder: return "autoencoder";
    }
    return "?";
}

inline Arch arch_from_name(const std::string& s) {
    if (s == "four_cnn") return Arch::FourCnn;
    if (s == "gru_encoder") return Arch::GruEncoder;
    if (s == "autoencoder") return Arch::Autoencoder;
    throw Error(ErrorCode::InvalidSpec, "unknown architecture '" + s + "'");
}

struct ConvSpec {
    std::size_t filters;
    std::size_t kh;
    std::size_t kw;
};

// Declarative model description. Defaults reproduce the published layer list
// for 14-channel input; the (C,1) spatial kernel follows the channel count.
struct ModelConfig {
    Arch arch = Arch::FourCnn;
    std::size_t channels = 14;
    std::size_t timesteps = 32;
    std::size_t num_classes = 10;
    std::vector<ConvSpec> conv_spec;  // four entries; [1].kh tracks channels
    std::size_t gru_hidden = 30;
    std::size_t embedding_dim = 128;
    std::size_t classifier_hidden = 256;
    double dropout = 0.5;
    bool gru_shared_weights = true;
    std::uint64_t seed = 0;

    static ModelConfig make(Arch arch, std::size_t channels,
                            std::size_t timesteps, std::size_t num_classes,
                            std::uint64_t seed = 0) {
        ModelConfig c;
        c.arch = arch;
        c.channels = channels;
        c.timesteps = timesteps;
        c.num_classes = num_classes;
        c.seed = seed;
        c.conv_spec = {{32, 1, 4}, {32, channels, 1}, {50, 4, 25}, {100, 50, 2}};
        return c;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["arch"] = arch_name(arch);
        j["channels"] = channels;
        j["timesteps"] = timesteps;
        j["num_classes"] = num_classes;
        nlohmann::json cs = nlohmann::json::array();
        for (const auto& c : conv_spec)
            cs.push_back({c.filters, c.kh, c.kw});
        j["conv_spec"] = cs;
        j["gru_hidden"] = gru_hidden;
        j["embedding_dim"] = embedding_dim;
        j["classifier_hidden"] = classifier_hidden;
        j["dropout"] = dropout;
        j["gru_shared_weights"] = gru_shared_weights;
        j["seed"] = seed;
        return j;
    }

    static ModelConfig from_json(const nlohmann::json& j) {
        ModelConfig c;
        c.arch = arch_from_name(j.at("arch").get<std::string>());
        c.channels = j.at("channels").get<std::size_t>();
        c.timesteps = j.at("timesteps").get<std::size_t>();
        c.num_classes = j.at("num_classes").get<std::size_t>();
        c.conv_spec.clear();
        for (const auto& e : j.at("conv_spec"))
            c.conv_spec.push_back({e[0].get<std::size_t>(),
                                   e[1].get<std::size_t>(),
                                   e[2].get<std::size_t>()});
        c.gru_hidden = j.at("gru_hidden").get<std::size_t>();
        c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
        c.classifier_hidden = j.at("classifier_hidden").get<std::size_t>();
        c.dropout = j.at("dropout").get<double>();
        c.gru_shared_weights = j.at("gru_shared_weights").get<bool>();
        c.seed = j.at("seed").get<std::uint64_t>();
        return c;
    }
};

// Static shape plan for the shared convolutional front end.
//
// Layout convention: the (C,T) record is viewed as a one-channel image
// (B,1,C,T). Conv-1 and conv-2 realize the two 1D stages as kernels (1,k)
// and (C,1); after conv-2 the electrode axis has collapsed and the 32
// feature maps are restacked along the height axis for conv-3. Conv-4 reads
// conv-3's output with the 50 feature maps as image height (kernel height
// spans them exactly) and conv-3's spatial height as input channels.
// Padding is "valid" per axis unless the output would collapse below 1,
// in which case that axis switches to "same".
struct ConvPlan {
    // widths (time axis) after each stage
    std::size_t w1, w2, w3, w3p, w4, w4p;
    std::size_t h3;            // conv-3 output height (over the 32 maps)
    std::size_t flat;          // flattened feature count after conv-4
    nn::Pad pad1_w, pad3_w, pad4_w;
    bool pool3, pool4;

    static ConvPlan plan(const ModelConfig& cfg) {
        if (cfg.channels < 1 || cfg.timesteps < 4)
            throw Error(ErrorCode::InputTooSmall,
                        "need channels >= 1 and timesteps >= 4");
        const auto& cs = cfg.conv_spec;
        if (cs.size() != 4)
            throw Error(ErrorCode::InvalidSpec, "expected four conv stages");
        ConvPlan p{};
        std::size_t t = cfg.timesteps;
        p.pad1_w = t >= cs[0].kw ? nn::Pad::Valid : nn::Pad::Same;
        p.w1 = p.pad1_w == nn::Pad::Valid ? t - cs[0].kw + 1 : t;
        p.w2 = p.w1;  // conv-2 kernel is (C,1)
        if (cs[1].kh != cfg.channels)
            throw Error(ErrorCode::InvalidSpec,
                        "conv-2 kernel height must equal the channel count");
        if (cs[0].filters < cs[2].kh)
            throw Error(ErrorCode::InputTooSmall,
                        "conv-3 kernel taller than the restacked maps");
        p.h3 = cs[0].filters - cs[2].kh + 1;
        p.pad3_w = p.w2 >= cs[2].kw ? nn::Pad::Valid : nn::Pad::Same;
        p.w3 = p.pad3_w == nn::Pad::Valid ? p.w2 - cs[2].kw + 1 : p.w2;
        p.pool3 = p.w3 >= 2;
        p.w3p = p.pool3 ? (p.w3 - 2) / 2 + 1 : p.w3;
        p.pad4_w = p.w3p >= cs[3].kw ? nn::Pad::Valid : nn::Pad::Same;
        p.w4 = p.pad4_w == nn::Pad::Valid ? p.w3p - cs[3].kw + 1 : p.w3p;
        if (cs[3].kh != cs[2].filters)
            throw Error(ErrorCode::InvalidSpec,
                        "conv-4 kernel height must span conv-3's feature maps");
        p.pool4 = p.w4 >= 2;
        p.w4p = p.pool4 ? (p.w4 - 2) / 2 + 1 : p.w4;
        p.flat = cs[3].filters * p.w4p;
        return p;
    }
};

// instantiated network; owns parameters and mode state
template <typename T>
class Model {
public:
    ModelConfig config;
    Mode mode = Mode::Eval;

    // shared front end
    nn::Conv2d<T> conv1, conv2;
    nn::BatchNorm<T> bn1, bn2;
    // four_cnn / autoencoder tail
    nn::Conv2d<T> conv3, conv4;
    nn::BatchNorm<T> bn3, bn4;
    // gru encoder tail
    nn::DepthwiseConv2d<T> dw;
    nn::BatchNorm<T> bn_dw;
    std::vector<nn::Gru<T>> grus;  // one if shared, one per map otherwise
    nn::Dense<T> fc_embed;         // -> embedding_dim (gru, autoencoder)
    // classifier head (four_cnn, gru)
    nn::Dense<T> fc_hidden, fc_out;
    // autoencoder decoder
    nn::Dense<T> dec1, dec2;

    ConvPlan plan{};
    std::size_t gru_maps = 0;
    std::size_t gru_in_dim = 0;
    std::size_t gru_seq_len = 0;

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (auto& [name, p] : parameters()) n += p->numel();
        return n;
    }

    NamedParams<T> parameters() {
        NamedParams<T> out;
        auto append = [&](NamedParams<T> more) {
            for (auto& e : more) out.push_back(e);
        };
        append(conv1.params("conv1"));
        append(bn1.params("bn1"));
        append(conv2.params("conv2"));
        append(bn2.params("bn2"));
        switch (config.arch) {
            case Arch::FourCnn:
                append(conv3.params("conv3"));
                append(bn3.params("bn3"));
                append(conv4.params("conv4"));
                append(bn4.params("bn4"));
                append(fc_hidden.params("fc_hidden"));
                append(fc_out.params("fc_out"));
                break;
            case Arch::GruEncoder:
                append(dw.params("dw"));
                append(bn_dw.params("bn_dw"));
                for (std::size_t i = 0; i < grus.size(); ++i)
                    append(grus[i].params("gru" + std::to_string(i)));
                append(fc_embed.params("fc_embed"));
                append(fc_hidden.params("fc_hidden"));
                append(fc_out.params("fc_out"));
                break;
            case Arch::Autoencoder:
                append(conv3.params("conv3"));
                append(bn3.params("bn3"));
                append(conv4.params("conv4"));
                append(bn4.params("bn4"));
                append(fc_embed.params("fc_embed"));
                append(dec1.params("dec1"));
                append(dec2.params("dec2"));
                break;
        }
        return out;
    }

    // non-trainable buffers (batch-norm running stats), serialized alongside
    NamedParams<T> state_tensors() {
        NamedParams<T> out;
        auto append = [&](NamedParams<T> more) {
            for (auto& e : more) out.push_back(e);
        };
        append(bn1.state("bn1"));
        append(bn2.state("bn2"));
        if (config.arch == Arch::GruEncoder) {
            append(bn_dw.state("bn_dw"));
        } else {
            append(bn3.state("bn3"));
            append(bn4.state("bn4"));
        }
        return out;
    }

    // forward through the shared conv1/conv2 front end; returns (B,1,f2,W2)
    Tensor<T> front(Context<T>& ctx, const Tensor<T>& x) {
        std::size_t B = x.shape()[0];
        if (x.rank() != 3 || x.shape()[1] != config.channels ||
            x.shape()[2] != config.timesteps)
            throw Error(ErrorCode::ShapeMismatch,
                        "input " + shape_str(x.shape()) + " does not match (B," +
                            std::to_string(config.channels) + "," +
                            std::to_string(config.timesteps) + ")");
        auto v = ops::reshape(
            x, {B, std::size_t(1), config.channels, config.timesteps}, ctx.tape);
        auto y1 = ops::relu(bn1.forward(ctx, conv1.forward(ctx, v)), ctx.tape);
        auto y2 = ops::relu(bn2.forward(ctx, conv2.forward(ctx, y1)), ctx.tape);
        // (B, f2, 1, W2) -> feature maps restacked along height
        return ops::reshape(y2, {B, std::size_t(1), config.conv_spec[1].filters,
                                 plan.w2}, ctx.tape);
    }

    // conv-3/conv-4 stack used by four_cnn and the autoencoder; returns (B, flat)
    Tensor<T> conv_tail(Context<T>& ctx, const Tensor<T>& stacked) {
        auto y3 = ops::relu(bn3.forward(ctx, conv3.forward(ctx, stacked)),
                            ctx.tape);
        if (plan.pool3) y3 = nn::maxpool2d(y3, 1, 2, 0, 0, ctx.tape);
        // conv-3 height becomes channels; its 50 maps become image height
        auto v4 = ops::permute(y3, {0, 2, 1, 3}, ctx.tape);
        auto y4 = ops::relu(bn4.forward(ctx, conv4.forward(ctx, v4)), ctx.tape);
        if (plan.pool4) y4 = nn::maxpool2d(y4, 1, 2, 0, 0, ctx.tape);
        return nn::flatten(y4, ctx.tape);
    }

    // (B, gru_maps * hidden): concatenated final hidden states
    Tensor<T> gru_tail(Context<T>& ctx, const Tensor<T>& stacked) {
        std::size_t B = stacked.shape()[0];
        auto maps = ops::relu(bn_dw.forward(ctx, dw.forward(ctx, stacked)),
                              ctx.tape);  // (B, maps, H', W')
        std::size_t H = gru_in_dim, W = gru_seq_len, M = gru_maps;
        auto seq = ops::permute(maps, {0, 1, 3, 2}, ctx.tape);  // (B,M,W,H)
        if (config.gru_shared_weights) {
            auto flatseq = ops::reshape(seq, {B * M, W, H}, ctx.tape);
            auto [outs, h] = grus[0].forward(ctx, flatseq);
            (void)outs;
            return ops::reshape(h, {B, M * config.gru_hidden}, ctx.tape);
        }
        std::vector<Tensor<T>> finals;
        finals.reserve(M);
        for (std::size_t m = 0; m < M; ++m) {
            auto one = ops::reshape(
                ops::slice(seq, {0, m, 0, 0}, {B, 1, W, H}, ctx.tape),
                {B, W, H}, ctx.tape);
            auto [outs, h] = grus[m].forward(ctx, one);
            (void)outs;
            finals.push_back(h);
        }
        return ops::concat(finals, 1, ctx.tape);
    }

    // logits for classifier architectures; reconstruction for the autoencoder
    Tensor<T> forward(Context<T>& ctx, const Tensor<T>& x) {
        auto stacked = front(ctx, x);
        switch (config.arch) {
            case Arch::FourCnn: {
                auto flat = conv_tail(ctx, stacked);
                auto h = ops::relu(fc_hidden.forward(ctx, flat), ctx.tape);
                h = nn::dropout(ctx, h, config.dropout);
                return fc_out.forward(ctx, h);
            }
            case Arch::GruEncoder: {
                auto enc = fc_embed.forward(ctx, gru_tail(ctx, stacked));
                auto h = ops::relu(fc_hidden.forward(ctx, enc), ctx.tape);
                h = nn::dropout(ctx, h, config.dropout);
                return fc_out.forward(ctx, h);
            }
            case Arch::Autoencoder: {
                auto emb = fc_embed.forward(ctx, conv_tail(ctx, stacked));
                auto d = ops::relu(dec1.forward(ctx, emb), ctx.tape);
                auto rec = ops::relu(dec2.forward(ctx, d), ctx.tape);
                return ops::reshape(
                    rec, {x.shape()[0], config.channels, config.timesteps},
                    ctx.tape);
            }
        }
        throw Error(ErrorCode::InvalidSpec, "unreachable");
    }

    // fixed-length feature vector fed to downstream classifiers
    Tensor<T> encode(Context<T>& ctx, const Tensor<T>& x) {
        auto stacked = front(ctx, x);
        switch (config.arch) {
            case Arch::FourCnn:
                return ops::relu(fc_hidden.forward(ctx, conv_tail(ctx, stacked)),
                                 ctx.tape);
            case Arch::GruEncoder:
                return fc_embed.forward(ctx, gru_tail(ctx, stacked));
            case Arch::Autoencoder:
                return fc_embed.forward(ctx, conv_tail(ctx, stacked));
        }
        throw Error(ErrorCode::InvalidSpec, "unreachable");
    }

    // class probabilities, rows summing to 1
    Tensor<T> classify(Context<T>& ctx, const Tensor<T>& x) {
        if (config.arch == Arch::Autoencoder)
            throw Error(ErrorCode::InvalidSpec,
                        "autoencoder classification goes through KNN/RF heads");
        return ops::softmax(forward(ctx, x), 1, ctx.tape);
    }

    Context<T> context(Tape<T>* tape = nullptr, RngStream* rng = nullptr) {
        return Context<T>{tape, mode, rng};
    }
};

namespace detail {

template <typename T>
void build_common(Model<T>& m, const ModelConfig& cfg) {
    m.config = cfg;
    m.plan = ConvPlan::plan(cfg);
    const auto& cs = cfg.conv_spec;
    RngStream r1(cfg.seed, "init/conv1"), r2(cfg.seed, "init/conv2");
    m.conv1 = nn::Conv2d<T>(1, cs[0].filters, cs[0].kh, cs[0].kw, r1,
                            nn::Pad::Valid, m.plan.pad1_w);
    m.bn1 = nn::BatchNorm<T>(cs[0].filters);
    m.conv2 = nn::Conv2d<T>(cs[0].filters, cs[1].filters, cs[1].kh, cs[1].kw, r2);
    m.bn2 = nn::BatchNorm<T>(cs[1].filters);
}

template <typename T>
void build_conv_tail(Model<T>& m, const ModelConfig& cfg) {
    const auto& cs = cfg.conv_spec;
    RngStream r3(cfg.seed, "init/conv3"), r4(cfg.seed, "init/conv4");
    m.conv3 = nn::Conv2d<T>(1, cs[2].filters, cs[2].kh, cs[2].kw, r3,
                            nn::Pad::Valid, m.plan.pad3_w);
    m.bn3 = nn::BatchNorm<T>(cs[2].filters);
    m.conv4 = nn::Conv2d<T>(m.plan.h3, cs[3].filters, cs[3].kh, cs[3].kw, r4,
                            nn::Pad::Valid, m.plan.pad4_w);
    m.bn4 = nn::BatchNorm<T>(cs[3].filters);
}

template <typename T>
void build_head(Model<T>& m, const ModelConfig& cfg, std::size_t in_dim) {
    RngStream rh(cfg.seed, "init/fc_hidden"), ro(cfg.seed, "init/fc_out");
    m.fc_hidden = nn::Dense<T>(in_dim, cfg.classifier_hidden, rh);
    m.fc_out = nn::Dense<T>(cfg.classifier_hidden, cfg.num_classes, ro);
}

}  // namespace detail

template <typename T>
Model<T> build_four_cnn(const ModelConfig& cfg) {
    Model<T> m;
    detail::build_common(m, cfg);
    detail::build_conv_tail(m, cfg);
    detail::build_head(m, cfg, m.plan.flat);
    return m;
}

template <typename T>
Model<T> build_gru_encoder(const ModelConfig& cfg) {
    Model<T> m;
    detail::build_common(m, cfg);
    const auto& cs = cfg.conv_spec;
    RngStream rd(cfg.seed, "init/dw");
    // depthwise stage reuses the conv-3 spec: multiplier 50, kernel (4,25)
    m.dw = nn::DepthwiseConv2d<T>(1, cs[2].filters, cs[2].kh, cs[2].kw, rd,
                                  nn::Pad::Valid, m.plan.pad3_w);
    m.bn_dw = nn::BatchNorm<T>(cs[2].filters);
    m.gru_maps = cs[2].filters;
    m.gru_in_dim = m.plan.h3;
    m.gru_seq_len = m.plan.w3;
    std::size_t n_grus = cfg.gru_shared_weights ? 1 : m.gru_maps;
    for (std::size_t i = 0; i < n_grus; ++i) {
        RngStream rg(cfg.seed, "init/gru" + std::to_string(i));
        m.grus.emplace_back(m.gru_in_dim, cfg.gru_hidden, rg);
    }
    RngStream re(cfg.seed, "init/fc_embed");
    m.fc_embed = nn::Dense<T>(m.gru_maps * cfg.gru_hidden, cfg.embedding_dim, re);
    detail::build_head(m, cfg, cfg.embedding_dim);
    return m;
}

template <typename T>
Model<T> build_autoencoder(const ModelConfig& cfg) {
    Model<T> m;
    detail::build_common(m, cfg);
    detail::build_conv_tail(m, cfg);
    RngStream re(cfg.seed, "init/fc_embed"), rd1(cfg.seed, "init/dec1"),
        rd2(cfg.seed, "init/dec2");
    m.fc_embed = nn::Dense<T>(m.plan.flat, cfg.embedding_dim, re);
    m.dec1 = nn::Dense<T>(cfg.embedding_dim, m.plan.flat, rd1);
    m.dec2 = nn::Dense<T>(m.plan.flat, cfg.channels * cfg.timesteps, rd2);
    return m;
}

template <typename T>
Model<T> build_model(const ModelConfig& cfg) {
    switch (cfg.arch) {
        case Arch::FourCnn: return build_four_cnn<T>(cfg);
        case Arch::GruEncoder: return build_gru_encoder<T>(cfg);
        case Arch::Autoencoder: return build_autoencoder<T>(cfg);
    }
    throw Error(ErrorCode::InvalidSpec, "unreachable");
}

// ---------------------------------------------------------------------------
// checkpoint container: "UEEG" magic, version byte, length-prefixed canonical
// JSON config, then (name_len, name, rank, u32 dims, f32 data) per tensor
// ---------------------------------------------------------------------------

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    std::array<unsigned char, 4> b{
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b.data()), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
    std::array<unsigned char, 4> b{};
    is.read(reinterpret_cast<char*>(b.data()), 4);
    if (!is)
        throw Error(ErrorCode::IoError, "unexpected end of checkpoint");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
           (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

inline void write_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, 4);
    write_u32(os, bits);
}

inline float read_f32(std::istream& is) {
    std::uint32_t bits = read_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace detail

inline constexpr char kCheckpointMagic[4] = {'U', 'E', 'E', 'G'};

inline void save_checkpoint(Model<float>& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error(ErrorCode::IoError, "cannot open '" + path + "' for write");
    os.write(kCheckpointMagic, 4);
    os.put(1);  // format version
    std::string cfg = model.config.to_json().dump();
    detail::write_u32(os, static_cast<std::uint32_t>(cfg.size()));
    os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    auto all = model.parameters();
    for (auto& e : model.state_tensors()) all.push_back(e);
    for (auto& [name, t] : all) {
        detail::write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::write_u32(os, static_cast<std::uint32_t>(t->rank()));
        for (auto d : t->shape())
            detail::write_u32(os, static_cast<std::uint32_t>(d));
        for (float v : t->data()) detail::write_f32(os, v);
    }
    if (!os)
        throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

inline Model<float> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw Error(ErrorCode::BadMagic, "'" + path + "' is not a checkpoint");
    int version = is.get();
    if (version != 1)
        throw Error(ErrorCode::VersionUnsupported,
                    "checkpoint version " + std::to_string(version));
    std::uint32_t cfg_len = detail::read_u32(is);
    std::string cfg(cfg_len, '\0');
    is.read(cfg.data(), cfg_len);
    if (!is) throw Error(ErrorCode::IoError, "truncated checkpoint config");
    Model<float> model =
        build_model<float>(ModelConfig::from_json(nlohmann::json::parse(cfg)));
    auto params = model.parameters();
    for (auto& e : model.state_tensors()) params.push_back(e);
    std::unordered_map<std::string, Tensor<float>*> by_name;
    for (auto& [name, t] : params) by_name[name] = t;
    while (true) {
        std::uint32_t name_len;
        try {
            name_len = detail::read_u32(is);
        } catch (const Error&) {
            break;  // clean EOF between records
        }
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        std::uint32_t rank = detail::read_u32(is);
        Shape shape(rank);
        std::size_t n = 1;
        for (auto& d : shape) {
            d = detail::read_u32(is);
            n *= d;
        }
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw Error(ErrorCode::GeometryMismatch,
                        "checkpoint tensor '" + name + "' not in model");
        if (it->second->shape() != shape)
            throw Error(ErrorCode::GeometryMismatch,
                        "checkpoint tensor '" + name + "' has shape " +
                            shape_str(shape) + ", model expects " +
                            shape_str(it->second->shape()));
        auto& dst = it->second->mutable_data();
        for (std::size_t i = 0; i < n; ++i) dst[i] = detail::read_f32(is);
    }
    return model;
}

}  // namespace ueeg
