"""Compare the compiled and pure-Python RLE backends, alone and inside the codec.

    python benchmarks/bench_rle.py [--frames N] [--repeat R]
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np


def plane_corpus(frames: int) -> list[bytes]:
    from vtester.synth import moving_objects

    video = moving_objects(352, 288, frames)
    rng = np.random.default_rng(0)
    noisy = [rng.integers(0, 4, 352 * 288, dtype=np.uint8).tobytes() for _ in range(frames // 10 or 1)]
    return [f.to_bytes() for f in video.frames] + noisy


def run_backend(frames: int, repeat: int) -> dict:
    from vtester import rle
    from vtester.codec import decode, encode
    from vtester.synth import moving_objects

    corpus = plane_corpus(frames)
    packed = [rle.rle_compress(b) for b in corpus]
    video = moving_objects(352, 288, frames)
    stream = encode(video, 15, 3)

    def best(fn):
        return min(timeit.repeat(fn, number=1, repeat=repeat))

    return {
        "backend": rle.BACKEND,
        "compress_MBps": sum(map(len, corpus)) / best(lambda: [rle.rle_compress(b) for b in corpus]) / 1e6,
        "decompress_MBps": sum(map(len, corpus)) / best(lambda: [rle.rle_decompress(p) for p in packed]) / 1e6,
        "encode_s": best(lambda: encode(video, 15, 3)),
        "decode_s": best(lambda: decode(stream, frames)),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        print(json.dumps(run_backend(args.frames, args.repeat)))
        return

    rows = []
    for pure in (False, True):
        env = dict(os.environ)
        env.pop("VTESTER_PURE_PYTHON", None)
        if pure:
            env["VTESTER_PURE_PYTHON"] = "1"
        out = subprocess.run([sys.executable, __file__, "--child", "--frames", str(args.frames),
                              "--repeat", str(args.repeat)], env=env, capture_output=True, text=True, check=True)
        rows.append(json.loads(out.stdout))

    print(f"{'backend':<10}{'compress MB/s':>15}{'decompress MB/s':>17}{'encode s':>10}{'decode s':>10}")
    for r in rows:
        print(f"{r['backend']:<10}{r['compress_MBps']:>15.1f}{r['decompress_MBps']:>17.1f}"
              f"{r['encode_s']:>10.3f}{r['decode_s']:>10.3f}")
    if len({r["backend"] for r in rows}) == 2:
        c, p = rows
        print(f"speedup: compress x{c['compress_MBps'] / p['compress_MBps']:.1f}, "
              f"decompress x{c['decompress_MBps'] / p['decompress_MBps']:.1f}, "
              f"encode x{p['encode_s'] / c['encode_s']:.2f}, decode x{p['decode_s'] / c['decode_s']:.2f}")
    else:
        print("compiled backend unavailable; only the pure-Python path was measured")


if __name__ == "__main__":
    main()
