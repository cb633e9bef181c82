#!/usr/bin/env python3
"""Writes the golden dataset/weight files and a numpy reference forward pass.

Standalone: shares no code with the C++ engine. Run from this directory:
    python3 make_fixtures.py
"""
import json
import struct

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def standard_layers(s):
    pools = [k for k in (1, 2, 4, 8) if (s // 8) % k == 0]

    def layer(name, kind, kernel=0, filters=0, stride=1, pool=(), act=None):
        d = {"name": name, "kind": kind, "kernel": kernel, "filters": filters, "stride": stride, "pool": list(pool)}
        if act:
            d["activation"] = act
        return d

    return [
        layer("stem", "conv2d", 4, 8, 4, act="relu"),
        layer("fusion", "fusion"),
        layer("res1", "resblock", 3, 16),
        layer("res2", "resblock", 3, 16),
        layer("res3", "resblock", 3, 16),
        layer("down", "maxpool", pool=[2]),
        layer("multipool", "multipool", pool=pools),
        layer("head1", "conv2d", 3, 32, act="relu"),
        layer("head2", "conv2d", 3, 16, act="relu"),
        layer("head3", "conv2d", 3, 1, act="linear"),
    ]


def manifest(s, variant="full", residual=True, mvfield=True, tempid=True):
    return {
        "format": "mbmp",
        "ctu_size": s,
        "variant": variant,
        "inputs": {"luma": True, "residual": residual, "mvfield": mvfield, "qp": True, "tempid": tempid},
        "normalization": {"luma": 255, "residual": 255, "mv": 8, "qp": 63, "tempid": 5},
        "layers": standard_layers(s),
    }


def param_shapes(man):
    shapes = {}
    c = 2
    for l in man["layers"]:
        k, f = l["kernel"], l["filters"]
        if l["kind"] == "conv2d":
            shapes[l["name"] + "/kernel"] = (k, k, c, f)
            shapes[l["name"] + "/bias"] = (1, 1, f)
            c = f
        elif l["kind"] == "fusion":
            c += 4
        elif l["kind"] == "resblock":
            n = l["name"]
            shapes[n + "/conv1/kernel"] = (k, k, c, f)
            shapes[n + "/conv1/bias"] = (1, 1, f)
            shapes[n + "/conv2/kernel"] = (k, k, f, f)
            shapes[n + "/conv2/bias"] = (1, 1, f)
            if c != f:
                shapes[n + "/proj/kernel"] = (1, 1, c, f)
                shapes[n + "/proj/bias"] = (1, 1, f)
            c = f
        elif l["kind"] == "multipool":
            c *= len(l["pool"])
    return shapes


def random_params(man, rng, zero=False):
    out = {}
    for name, shape in param_shapes(man).items():
        if zero:
            out[name] = np.zeros(shape, np.float32)
        elif len(shape) == 4:
            fan_in = shape[0] * shape[1] * shape[2]
            out[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), shape).astype(np.float32)
        else:
            out[name] = rng.uniform(-0.1, 0.1, shape).astype(np.float32)
    return out


def write_weights(path, man, params):
    text = json.dumps(man, sort_keys=True, separators=(",", ":")).encode()
    out = bytearray(b"MBMP")
    out += struct.pack("<HI", 1, len(text)) + text
    out += struct.pack("<QI", fnv1a64(text), len(params))
    for name in sorted(params):
        t = params[name]
        nb = name.encode()
        out += struct.pack("<H", len(nb)) + nb + struct.pack("<B", t.ndim)
        out += struct.pack("<%dI" % t.ndim, *t.shape)
        out += t.astype("<f4").tobytes()
    with open(path, "wb") as f:
        f.write(out)


def make_bundle(s, rng, qp, tid):
    luma = rng.integers(30, 226, (s, s)).astype(np.int64)
    # blocky residual so the search has structure
    blocks = rng.integers(-25, 26, (s // 8, s // 8))
    resid = np.kron(blocks, np.ones((8, 8), np.int64)) + rng.integers(-4, 5, (s, s))
    resid = np.clip(resid, luma - 255, luma)
    mv = np.kron(rng.integers(-4, 5, (s // 8, s // 8, 2)), np.ones((2, 2, 1), np.int64))
    return {"s": s, "luma": luma, "resid": resid, "mv": mv, "qp": qp, "tid": tid}


def write_dataset(path, s, bundles, labels):
    out = bytearray(b"QTDS") + struct.pack("<HHI", 1, s, len(bundles))
    for b, lab in zip(bundles, labels):
        out += b["luma"].astype("u1").tobytes()
        out += b["resid"].astype("<i2").tobytes()
        out += b["mv"].astype("i1").tobytes()
        out += struct.pack("<BB", b["qp"], b["tid"])
        out += lab.astype("u1").tobytes()
    with open(path, "wb") as f:
        f.write(out)


# ---- reference forward pass -------------------------------------------------

def conv_same(x, k, b, stride):
    h, w, _ = x.shape
    kh, kw, _, co = k.shape
    oh, ow = -(-h // stride), -(-w // stride)
    ph = max((oh - 1) * stride + kh - h, 0)
    pw = max((ow - 1) * stride + kw - w, 0)
    xp = np.pad(x, ((ph // 2, ph - ph // 2), (pw // 2, pw - pw // 2), (0, 0)))
    out = np.zeros((oh, ow, co))
    for i in range(kh):
        for j in range(kw):
            patch = xp[i:i + stride * oh:stride, j:j + stride * ow:stride, :]
            out += np.tensordot(patch, k[i, j].astype(np.float64), axes=([2], [0]))
    return out + b.reshape(-1)


def maxpool(x, k):
    h, w, c = x.shape
    return x.reshape(h // k, k, w // k, k, c).max(axis=(1, 3))


def upsample(x, f):
    return np.repeat(np.repeat(x, f, axis=0), f, axis=1)


def relu(x):
    return np.maximum(x, 0)


def forward(man, p, b):
    s = b["s"]
    inp = man["inputs"]
    px = np.zeros((s, s, 2))
    px[..., 0] = b["luma"] / 255.0 if inp["luma"] else 0
    px[..., 1] = b["resid"] / 255.0 if inp["residual"] else 0
    x = px
    for l in man["layers"]:
        n, kind = l["name"], l["kind"]
        if kind == "conv2d":
            x = conv_same(x, p[n + "/kernel"], p[n + "/bias"], l["stride"])
            if l["activation"] == "relu":
                x = relu(x)
        elif kind == "fusion":
            g = x.shape[0]
            mv = b["mv"] / 8.0 if inp["mvfield"] else np.zeros_like(b["mv"], dtype=np.float64)
            # motion grid is s/4, pixel branch here is s/4 too after the stride-4 stem
            step = mv.shape[0] // g if mv.shape[0] >= g else 1
            mv = mv[::step, ::step] if mv.shape[0] >= g else upsample(mv, g // mv.shape[0])
            qp = np.full((g, g, 1), b["qp"] / 63.0 if inp["qp"] else 0.0)
            tid = np.full((g, g, 1), b["tid"] / 5.0 if inp["tempid"] else 0.0)
            x = np.concatenate([x, mv, qp, tid], axis=2)
        elif kind == "resblock":
            h1 = relu(conv_same(x, p[n + "/conv1/kernel"], p[n + "/conv1/bias"], 1))
            h2 = conv_same(h1, p[n + "/conv2/kernel"], p[n + "/conv2/bias"], 1)
            sc = conv_same(x, p[n + "/proj/kernel"], p[n + "/proj/bias"], 1) if n + "/proj/kernel" in p else x
            x = relu(h2 + sc)
        elif kind == "maxpool":
            x = maxpool(x, l["pool"][0])
        elif kind == "multipool":
            x = np.concatenate([upsample(maxpool(x, k), k) for k in l["pool"]], axis=2)
    return x[..., 0]


def write_map(path, maps):
    with open(path, "w") as f:
        for m in maps:
            for row in m:
                f.write(",".join("%.9g" % v for v in row) + "\n")


def main():
    rng = np.random.default_rng(20240617)
    s = 32
    bundles = [make_bundle(s, rng, qp, tid) for qp, tid in ((22, 1), (27, 3), (32, 4), (37, 5))]
    labels = [rng.integers(0, 3, (s // 8, s // 8)) for _ in bundles]
    write_dataset("golden_s32.qtds", s, bundles, labels)
    b64 = [make_bundle(64, rng, 32, 2)]
    write_dataset("golden_s64.qtds", 64, b64, [rng.integers(0, 4, (8, 8))])

    full = manifest(s)
    params = random_params(full, rng)
    write_weights("golden_s32.mbmp", full, params)
    write_weights("golden_s32_zero.mbmp", full, random_params(full, rng, zero=True))
    variants = {
        "no_resi": manifest(s, "no_resi", residual=False),
        "no_mvfield": manifest(s, "no_mvfield", mvfield=False),
        "no_tempid": manifest(s, "no_tempid", tempid=False),
    }
    for v, man in variants.items():
        write_weights("golden_s32_%s.mbmp" % v, man, params)

    write_map("golden_s32_reference.csv", [forward(full, params, b) for b in bundles])
    write_map("golden_s32_no_resi_reference.csv", [forward(variants["no_resi"], params, b) for b in bundles])


if __name__ == "__main__":
    main()
