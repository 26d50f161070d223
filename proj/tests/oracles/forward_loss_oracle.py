#!/usr/bin/env python3
# Copyright 2026 The ADEPT-Lab Authors
# SPDX-License-Identifier: Apache-2.0
"""Straight-line numpy re-implementation of the decoder forward pass and LM loss.

Reads a checkpoint written by the C++ library and prints the mean next-token
NLL of a fixed 16-token sequence. The value is frozen in test_oracles.cpp.

    python3 forward_loss_oracle.py fixtures/tiny_2l_d8.ckpt
"""

import json
import sys

import numpy as np

TOKENS = [3, 17, 42, 8, 63, 0, 25, 25, 11, 50, 7, 31, 2, 19, 44, 60]
UNITS = ["q_proj", "k_proj", "v_proj", "o_proj", "gate_proj", "up_proj", "down_proj",
         "input_layernorm", "post_attention_layernorm"]


def load(path):
    raw = open(path, "rb").read()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl])
    flat = np.frombuffer(raw[nl + 1:], dtype="<f4").astype(np.float64)
    params, off = {}, 0
    for t in header["tensors"]:
        n = int(np.prod(t["shape"]))
        params[t["name"]] = flat[off:off + n].reshape(t["shape"])
        off += n
    assert off == flat.size
    return header["config"], params


def rms_norm(x, w, eps=1e-6):
    return x / np.sqrt(np.mean(x * x, axis=-1, keepdims=True) + eps) * w


def rope(x, n_heads, theta=10000.0):
    T, d = x.shape
    dh = d // n_heads
    out = x.copy()
    for t in range(T):
        for h in range(n_heads):
            for i in range(dh // 2):
                ang = t * theta ** (-2.0 * i / dh)
                a, b = x[t, h * dh + 2 * i], x[t, h * dh + 2 * i + 1]
                out[t, h * dh + 2 * i] = a * np.cos(ang) - b * np.sin(ang)
                out[t, h * dh + 2 * i + 1] = a * np.sin(ang) + b * np.cos(ang)
    return out


def forward(cfg, p, ids):
    H = cfg["n_heads"]
    d = cfg["d_model"]
    dh = d // H
    T = len(ids)
    x = p["token_embedding"][ids]
    for l in range(cfg["n_layers"]):
        u = {n: p[f"layers.{l}.{n}"] for n in UNITS}
        h = rms_norm(x, u["input_layernorm"])
        q, k, v = rope(h @ u["q_proj"], H), rope(h @ u["k_proj"], H), h @ u["v_proj"]
        ctx = np.zeros((T, d))
        for hh in range(H):
            s = slice(hh * dh, (hh + 1) * dh)
            sc = q[:, s] @ k[:, s].T / np.sqrt(dh)
            sc = np.where(np.tril(np.ones((T, T))) > 0, sc, -np.inf)
            sc = np.exp(sc - sc.max(axis=1, keepdims=True))
            ctx[:, s] = (sc / sc.sum(axis=1, keepdims=True)) @ v[:, s]
        x = x + ctx @ u["o_proj"]
        h2 = rms_norm(x, u["post_attention_layernorm"])
        g = h2 @ u["gate_proj"]
        x = x + ((g / (1.0 + np.exp(-g))) * (h2 @ u["up_proj"])) @ u["down_proj"]
    head = p.get("lm_head", p["token_embedding"])
    return rms_norm(x, p["final_norm"]) @ head.T


def main():
    cfg, p = load(sys.argv[1])
    z = forward(cfg, p, TOKENS[:-1])
    m = z.max(axis=1, keepdims=True)
    logp = z - m - np.log(np.exp(z - m).sum(axis=1, keepdims=True))
    nll = -np.mean([logp[t, TOKENS[t + 1]] for t in range(len(TOKENS) - 1)])
    print(repr(float(nll)))


if __name__ == "__main__":
    main()
