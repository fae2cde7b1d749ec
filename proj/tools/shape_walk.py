#!/usr/bin/env python3
"""Independent shape walk over the three architectures.

Computes, from the layer list alone, the tensor geometry and parameter count
for each (architecture, dataset geometry) pair. Used once to produce the
golden counts frozen in tests/golden_counts.hpp; shares no code with the C++
implementation.
"""

import json

GEOMETRIES = {
    "ThoughtViz": (14, 32, 10),
    "SEED": (62, 32, 3),
    "ERN": (56, 200, 2),
    "SMR": (22, 500, 4),
    "BMNIST": (4, 408, 11),
}

F1, F2, F3, F4 = 32, 32, 50, 100
K3H, K3W = 4, 25
K4W = 2
GRU_HIDDEN = 30
EMBED = 128
HIDDEN = 256


def conv_w(width, k):
    """valid unless the output would collapse below 1, then same"""
    return width - k + 1 if width >= k else width


def pool_w(width):
    """(1,2) max pool, stride 2, skipped when the axis cannot host a window"""
    return (width - 2) // 2 + 1 if width >= 2 else width


def conv_params(filters, in_ch, kh, kw):
    return filters * in_ch * kh * kw + filters


def bn_params(features):
    return 2 * features


def dense_params(d_in, d_out):
    return d_in * d_out + d_out


def front(C, T):
    """conv1 (1,4) then conv2 (C,1); returns (params, width)"""
    w = conv_w(T, 4)
    p = conv_params(F1, 1, 1, 4) + bn_params(F1)
    p += conv_params(F2, F1, C, 1) + bn_params(F2)
    return p, w


def conv_tail(w2):
    """conv3 on the restacked (1,32,w2) view, then conv4 over the 50 maps.

    conv4 sees conv3's height (32-4+1 = 29) as channels and its 50 maps as
    image height, kernel (50,2). Returns (params, flattened feature count).
    """
    h3 = F1 - K3H + 1
    w3 = pool_w(conv_w(w2, K3W))
    p = conv_params(F3, 1, K3H, K3W) + bn_params(F3)
    p += conv_params(F4, h3, F3, K4W) + bn_params(F4)
    w4 = pool_w(conv_w(w3, K4W))
    return p, F4 * w4


def four_cnn(C, T, K):
    p, w2 = front(C, T)
    pt, flat = conv_tail(w2)
    p += pt
    p += dense_params(flat, HIDDEN) + dense_params(HIDDEN, K)
    return p, {"flat": flat}


def gru_encoder(C, T, K):
    p, w2 = front(C, T)
    # depthwise (multiplier 50, kernel (4,25)) on the restacked view
    h3 = F1 - K3H + 1
    wseq = conv_w(w2, K3W)
    p += 1 * F3 * K3H * K3W + F3 + bn_params(F3)
    # one shared GRU, input h3, hidden 30: 3 gates of (W, U, b)
    p += 3 * (h3 * GRU_HIDDEN + GRU_HIDDEN * GRU_HIDDEN + GRU_HIDDEN)
    p += dense_params(F3 * GRU_HIDDEN, EMBED)
    p += dense_params(EMBED, HIDDEN) + dense_params(HIDDEN, K)
    return p, {"seq_len": wseq, "seq_dim": h3}


def autoencoder(C, T, K):
    p, w2 = front(C, T)
    pt, flat = conv_tail(w2)
    p += pt
    p += dense_params(flat, EMBED)          # encoder bottleneck
    p += dense_params(EMBED, flat)          # decoder stage 1
    p += dense_params(flat, C * T)          # decoder stage 2
    return p, {"flat": flat}


def main():
    archs = {
        "four_cnn": four_cnn,
        "gru_encoder": gru_encoder,
        "autoencoder": autoencoder,
    }
    out = {}
    for name, (C, T, K) in GEOMETRIES.items():
        out[name] = {}
        for arch, fn in archs.items():
            count, extra = fn(C, T, K)
            out[name][arch] = {"params": count, **extra}
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
