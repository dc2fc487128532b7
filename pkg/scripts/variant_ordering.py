"""Median BER of the three decoder variants over several seeds at desk scale.

Usage: python3 scripts/variant_ordering.py [--seeds 0,1,2] [--snr 5] [--out runs/ordering]
Checkpoints are kept under --out, so an interrupted run resumes.
"""

import argparse
import json
import statistics
import sys
from pathlib import Path

from dmecct import codes
from dmecct.harness import ModelDecoder, StopRule, evaluate
from dmecct.model import ECCTConfig, load_checkpoint, save_checkpoint, schedule_preset, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--code", default="polar-64-32")
    ap.add_argument("--seeds", default="0,1,2")
    ap.add_argument("--snr", type=float, default=5.0)
    ap.add_argument("--frames", type=int, default=20_000)
    ap.add_argument("--schedule", default="desk", choices=["desk", "smoke", "paper"])
    ap.add_argument("--out", default="runs/ordering")
    args = ap.parse_args()

    code = codes.get_code(args.code)
    seeds = [int(s) for s in args.seeds.split(",")]
    stop = StopRule(min_frames=args.frames, min_frame_errors=0, block_size=500)
    table = {}
    for variant in ("Conventional", "SM", "DM"):
        table[variant] = []
        for seed in seeds:
            ckpt = Path(args.out) / f"{variant}-seed{seed}"
            if (ckpt / "manifest.json").exists():
                params, config = load_checkpoint(ckpt)
            else:
                config = ECCTConfig(code=code, variant=variant, n_layers=2, embed_dim=32, heads=8)
                params = train(config, schedule_preset(args.schedule, seed=seed)).params
                save_checkpoint(params, config, ckpt)
            ber = evaluate(ModelDecoder(params, config), code, args.snr, stop).at(args.snr).ber
            table[variant].append(ber)
            print(f"{variant:<13} seed {seed}  BER {ber:.4e}", flush=True)
    medians = {v: statistics.median(b) for v, b in table.items()}
    print("median BER at", args.snr, "dB:", ", ".join(f"{v} {b:.4e}" for v, b in medians.items()))
    ordered = medians["SM"] <= medians["Conventional"] and medians["DM"] <= medians["SM"]
    print("ordering DM <= SM <= Conventional:", "yes" if ordered else "no")
    Path(args.out).mkdir(parents=True, exist_ok=True)
    (Path(args.out) / "ordering.json").write_text(json.dumps({"ber": table, "median": medians}, indent=1))
    return 0


if __name__ == "__main__":
    sys.exit(main())
