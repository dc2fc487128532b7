"""Train one decoder at desk scale and compare it with hard decisions.

Usage: python3 scripts/smoke_training.py [--variant DM] [--code polar-64-32] [--seed 0] [--out DIR]
"""

import argparse
import json
import sys
from pathlib import Path

from dmecct import codes
from dmecct.harness import HardDecisionDecoder, ModelDecoder, StopRule, evaluate
from dmecct.model import ECCTConfig, save_checkpoint, schedule_preset, train, write_loss_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--variant", default="DM", choices=["Conventional", "SM", "DM"])
    ap.add_argument("--code", default="polar-64-32")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--schedule", default="desk", choices=["desk", "smoke", "paper"])
    ap.add_argument("--frames", type=int, default=20_000)
    ap.add_argument("--snr", default="4,5,6")
    ap.add_argument("--out", default="runs/smoke")
    args = ap.parse_args()

    code = codes.get_code(args.code)
    config = ECCTConfig(code=code, variant=args.variant, n_layers=2, embed_dim=32, heads=8)
    schedule = schedule_preset(args.schedule, seed=args.seed)
    result = train(config, schedule, log=lambda e, v: print(f"epoch {e:3d}  loss {v:.4f}", flush=True))
    out = Path(args.out)
    save_checkpoint(result.params, config, out / "checkpoint")
    write_loss_csv(result.epoch_losses, out / "loss.csv")

    snrs = [float(s) for s in args.snr.split(",")]
    stop = StopRule(min_frames=args.frames, min_frame_errors=0, block_size=500)
    model = evaluate(ModelDecoder(result.params, config), code, snrs, stop, seed=args.seed)
    hard = evaluate(HardDecisionDecoder(), code, snrs, stop, seed=args.seed)
    summary = []
    print(f"trained in {result.wall_time / 60:.1f} min")
    for snr in snrs:
        m, h = model.at(snr), hard.at(snr)
        print(f"{snr:4.1f} dB  BER {m.ber:.4e}  FER {m.fer:.4e}  hard-decision BER {h.ber:.4e}  ratio {m.ber / h.ber:.3f}")
        summary.append({"snr_db": snr, "ber": m.ber, "fer": m.fer, "hard_ber": h.ber, "frames": m.frames})
    (out / "summary.json").write_text(json.dumps({"train_seconds": result.wall_time, "rows": summary}, indent=1))
    return 0


if __name__ == "__main__":
    sys.exit(main())
