#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs one encode+decode per backend in a fresh process (backend selection
is import-time via TINYLIC_BACKEND), reports wall times, and checks that
both backends emit byte-identical bitstreams and reconstructions.

Usage:
    python benchmarks/bench_backends.py [--size 128] [--sf 1.0] [--repeats 3]
"""

import argparse
import os
import subprocess
import sys

_WORKER = """
import hashlib, sys, time
import numpy as np
import tinylic
from tinylic import bitstream as bsmod
from tinylic.codec import decode_image, encode_image
from tinylic.config import ModelConfig
from tinylic.weights import init_weights

size = int(sys.argv[1]); sf = float(sys.argv[2]); repeats = int(sys.argv[3])
cfg = ModelConfig()
ws = init_weights(cfg, 0)
rng = np.random.default_rng(0)
img = rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)

# warm up JIT compilation (cached to disk after the first run)
small = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
encode_image(small, cfg, ws, sf=sf)

enc_times, dec_times = [], []
blob = recon = None
for _ in range(repeats):
    t0 = time.perf_counter()
    result = encode_image(img, cfg, ws, sf=sf)
    t1 = time.perf_counter()
    blob = bsmod.serialize(result.bitstream)
    decoded = decode_image(blob, cfg, ws)
    t2 = time.perf_counter()
    assert np.array_equal(decoded, result.reconstruction)
    recon = decoded
    enc_times.append(t1 - t0)
    dec_times.append(t2 - t1)

digest = hashlib.sha256(blob + recon.tobytes()).hexdigest()
print(f"{tinylic.BACKEND} {min(enc_times):.4f} {min(dec_times):.4f} {len(blob)} {digest}")
"""


def run_backend(backend, size, sf, repeats):
    env = dict(os.environ, TINYLIC_BACKEND=backend)
    proc = subprocess.run(
        [sys.executable, "-c", _WORKER, str(size), str(sf), str(repeats)],
        capture_output=True,
        text=True,
        env=env,
    )
    if proc.returncode != 0:
        raise RuntimeError(f"{backend} run failed:\n{proc.stderr}")
    name, enc, dec, nbytes, digest = proc.stdout.split()
    assert name == backend
    return float(enc), float(dec), int(nbytes), digest


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=128, help="square image size")
    parser.add_argument("--sf", type=float, default=1.0)
    parser.add_argument("--repeats", type=int, default=3,
                        help="timed repetitions; best time is reported")
    args = parser.parse_args()

    results = {}
    for backend in ("numba", "numpy"):
        print(f"running {backend} backend ...", flush=True)
        results[backend] = run_backend(backend, args.size, args.sf, args.repeats)

    print()
    print(f"image {args.size}x{args.size}, sf={args.sf}, best of {args.repeats}")
    print(f"{'backend':<8} {'encode s':>10} {'decode s':>10} {'stream B':>10}")
    for backend, (enc, dec, nbytes, _) in results.items():
        print(f"{backend:<8} {enc:>10.4f} {dec:>10.4f} {nbytes:>10d}")
    enc_ratio = results["numpy"][0] / results["numba"][0]
    dec_ratio = results["numpy"][1] / results["numba"][1]
    print(f"numba speedup: encode {enc_ratio:.1f}x, decode {dec_ratio:.1f}x")

    if results["numba"][3] != results["numpy"][3]:
        print("ERROR: backends produced different bitstreams!", file=sys.stderr)
        return 1
    print("bitstreams and reconstructions are byte-identical across backends")
    return 0


if __name__ == "__main__":
    sys.exit(main())
