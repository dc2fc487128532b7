"""Command-line interface.

Exit status: 0 on success, 1 on usage errors (a synopsis goes to stderr),
2 on runtime errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import channel, codes, gf2, rng
from .errors import DMECCTError
from .harness import (
    HardDecisionDecoder,
    ModelDecoder,
    OracleDecoder,
    PRESETS,
    StopRule,
    evaluate,
    load_spec,
    parse_config_text,
    sweep,
)
from .harness.sweep import format_row
from .mask import build_mask, code_mask, save_mask, sparsity
from .model import ECCTConfig, save_checkpoint, schedule_preset, train, write_loss_csv


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _global_options() -> argparse.ArgumentParser:
    p = Parser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    p.add_argument("--precision", choices=["f32", "f64"], default=argparse.SUPPRESS)
    p.add_argument("--out", default=argparse.SUPPRESS, help="output directory or file")
    p.add_argument("--config", default=argparse.SUPPRESS, help="flat key = value config file")
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="machine-readable output")
    return p


def _code_options(p):
    p.add_argument("--code", help="bundled code name, e.g. bch-31-11 or polar-64-22")
    p.add_argument("--pcm", help="load the PCM from a file instead")
    p.add_argument("--pcm-format", choices=["alist", "dense01"], default="alist")


def build_parser() -> Parser:
    common = _global_options()
    parser = Parser(prog="dmecct", description="Transformer ECC decoders with systematic and double masks.",
                    parents=[common])
    sub = parser.add_subparsers(dest="command", parser_class=Parser, required=True)

    code = sub.add_parser("code", help="construct and inspect codes", parents=[common])
    code_sub = code.add_subparsers(dest="action", parser_class=Parser, required=True)
    for name, helptext in (("build", "write PCMs and manifest"), ("inspect", "print code facts and checks"),
                           ("export", "write one matrix")):
        p = code_sub.add_parser(name, help=helptext, parents=[common])
        _code_options(p)
        if name == "export":
            p.add_argument("--which", choices=["conventional", "systematic", "modified", "generator"],
                           default="conventional")
            p.add_argument("--format", choices=["alist", "dense01"], default="alist")

    mask = sub.add_parser("mask", help="attention masks", parents=[common])
    mask_sub = mask.add_subparsers(dest="action", parser_class=Parser, required=True)
    p = mask_sub.add_parser("build", help="write a mask", parents=[common])
    _code_options(p)
    p.add_argument("--kind", choices=["conventional", "systematic", "modified"], default="systematic")
    p.add_argument("--format", choices=["dense01", "pgm"], default="dense01")
    p.add_argument("--scale", type=int, default=1)
    p = mask_sub.add_parser("sparsity", help="fraction of masked entries", parents=[common])
    _code_options(p)
    p.add_argument("--kind", choices=["conventional", "systematic", "modified"], default="conventional")
    p.add_argument("--both", action="store_true", help="report conventional and systematic")

    p = sub.add_parser("train", help="train a decoder", parents=[common])
    _code_options(p)
    p.add_argument("--variant", choices=["Conventional", "SM", "DM"], default="DM")
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--heads", type=int, default=8)
    p.add_argument("--ffn-mult", type=int, default=4)
    p.add_argument("--share-streams", action="store_true")
    p.add_argument("--preset", choices=["paper", "desk", "smoke"], default="desk")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batches", type=int, help="batches per epoch")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--lr-decay", choices=["none", "cosine"])
    p.add_argument("--train-snr", help="comma-separated training SNRs in dB")

    p = sub.add_parser("eval", help="Monte-Carlo BER/FER", parents=[common])
    p.add_argument("--checkpoint", help="checkpoint directory")
    _code_options(p)
    p.add_argument("--decoder", choices=["model", "hard", "oracle"], default="model")
    p.add_argument("--snr", default="4,5,6", help="comma-separated Eb/N0 values in dB")
    p.add_argument("--min-frames", type=int, default=100_000)
    p.add_argument("--min-frame-errors", type=int, default=500)
    p.add_argument("--max-frames", type=int, default=10_000_000)
    p.add_argument("--block-size", type=int, default=1000)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--zero-codeword", action="store_true")

    p = sub.add_parser("sweep", help="run a preset or config-file sweep", parents=[common])
    p.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    p.add_argument("--no-resume", action="store_true")
    p.add_argument("--max-cells", type=int)
    return parser


def _apply_config_defaults(parser: Parser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    cfg = getattr(args, "config", None)
    if cfg and args.command != "sweep":
        values = parse_config_text(Path(cfg).read_text())
        # config values fill in options not given on the command line
        argv2 = list(argv)
        for key, value in values.items():
            flag = "--" + key.replace("_", "-")
            if flag in argv:
                continue
            if value.lower() in ("true", "false"):
                if value.lower() == "true":
                    argv2.append(flag)
            else:
                argv2.extend([flag, value])
        args = parser.parse_args(argv2)
    return args


def _resolve(args) -> codes.LinearCode:
    if not args.code and not args.pcm:
        raise UsageError("one of --code or --pcm is required")
    return codes.resolve_code(args.code, args.pcm, args.pcm_format)


def _emit(args, payload: dict, text: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=1))
    else:
        print(text)


def _verdicts(code: codes.LinearCode, seed: int) -> dict:
    gen = rng.stream(seed, "inspect", code.n, code.k)
    words = codes.encode(code, gen.integers(0, 2, (1000, code.k)))
    pcms = {"conventional": code.h_conv, "systematic": code.h_sys}
    if code.h_mod is not None:
        pcms["modified"] = code.h_mod
    out = {
        "rank_conventional": gf2.rank(code.h_conv),
        "rank_systematic": gf2.rank(code.h_sys),
        "systematic_leading_identity": bool(
            np.array_equal(code.h_sys[:, : code.n - code.k], np.eye(code.n - code.k, dtype=np.uint8))),
        "permutation_identity": bool(np.array_equal(code.column_permutation, np.arange(code.n))),
        "row_space_equal_systematic": gf2.row_space_equal(code.h_conv, code.h_sys),
    }
    if code.h_mod is not None:
        out["row_space_equal_modified"] = gf2.row_space_equal(code.h_conv, code.h_mod)
    out["zero_syndrome_1000_words"] = {k: not gf2.matvec_mod2(h, words).any() for k, h in pcms.items()}
    return out


def cmd_code(args) -> None:
    code = _resolve(args)
    seed = getattr(args, "seed", 0)
    if args.action == "inspect":
        facts = {"name": code.name, "family": code.family, "n": code.n, "k": code.k, "rate": code.rate,
                 **_verdicts(code, seed)}
        lines = [f"{k}: {v}" for k, v in facts.items()]
        _emit(args, facts, "\n".join(lines))
    elif args.action == "build":
        out = Path(getattr(args, "out", ".") or ".")
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for tag, h in (("conventional", code.h_conv), ("systematic", code.h_sys), ("modified", code.h_mod)):
            if h is not None:
                path = out / f"{code.name}.{tag}.alist"
                codes.save_pcm(h, path)
                written.append(str(path))
        codes.save_manifest(code, out / f"{code.name}.manifest.json")
        written.append(str(out / f"{code.name}.manifest.json"))
        _emit(args, {"code": code.name, "files": written}, "\n".join(written))
    else:
        mats = {"conventional": code.h_conv, "systematic": code.h_sys, "modified": code.h_mod,
                "generator": code.generator}
        h = mats[args.which]
        if h is None:
            raise DMECCTError(f"{code.name} has no {args.which} matrix")
        text = codes.format_alist(h) if args.format == "alist" else codes.format_dense01(h)
        out = getattr(args, "out", None)
        if out:
            Path(out).write_text(text)
            _emit(args, {"code": code.name, "which": args.which, "path": out}, out)
        elif getattr(args, "json", False):
            _emit(args, {"code": code.name, "which": args.which, "format": args.format, "text": text}, "")
        else:
            sys.stdout.write(text)


def cmd_mask(args) -> None:
    code = _resolve(args)
    if args.action == "sparsity":
        kinds = ["conventional", "systematic"] if args.both else [args.kind]
        values = {}
        for kind in kinds:
            mask, _ = code_mask(code, kind)
            values[kind] = sparsity(mask)
        lines = [f"{code.name} {kind}: {100 * v:.2f}%" for kind, v in values.items()]
        _emit(args, {"code": code.name, "size": 2 * code.n - code.k,
                     "sparsity": {k: round(v, 6) for k, v in values.items()}}, "\n".join(lines))
    else:
        mask, _ = code_mask(code, args.kind)
        out = getattr(args, "out", None) or f"{code.name}.{args.kind}.{'pgm' if args.format == 'pgm' else 'txt'}"
        save_mask(mask, out, args.format, args.scale)
        _emit(args, {"code": code.name, "kind": args.kind, "path": str(out), "sparsity": sparsity(mask)}, str(out))


def cmd_train(args) -> None:
    code = _resolve(args)
    config = ECCTConfig(code=code, variant=args.variant, n_layers=args.layers, embed_dim=args.dim, heads=args.heads,
                        ffn_mult=args.ffn_mult, share_streams=args.share_streams,
                        precision=getattr(args, "precision", "f32"))
    overrides = {"seed": getattr(args, "seed", 0)}
    for key, attr in (("epochs", "epochs"), ("batches_per_epoch", "batches"), ("batch_size", "batch_size"),
                      ("lr", "lr"), ("lr_decay", "lr_decay")):
        if getattr(args, attr) is not None:
            overrides[key] = getattr(args, attr)
    if args.train_snr:
        overrides["train_snr_db"] = tuple(_floats(args.train_snr))
    schedule = schedule_preset(args.preset, **overrides)
    quiet = getattr(args, "json", False)

    def log(epoch, value):
        if not quiet:
            print(f"epoch {epoch}: mean loss {value:.6f}", file=sys.stderr, flush=True)

    result = train(config, schedule, log=log)
    out = Path(getattr(args, "out", None) or f"ckpt-{code.name}-{args.variant}")
    save_checkpoint(result.params, config, out)
    write_loss_csv(result.epoch_losses, out / "loss.csv")
    _emit(args, {"checkpoint": str(out), "epoch_losses": result.epoch_losses, "wall_time": result.wall_time},
          f"checkpoint written to {out}")


def cmd_eval(args) -> None:
    if args.decoder == "model":
        if not args.checkpoint:
            raise UsageError("--checkpoint is required with --decoder model")
        decoder = ModelDecoder.from_checkpoint(args.checkpoint)
        code = _resolve(args) if (args.code or args.pcm) else decoder.code
    else:
        decoder = HardDecisionDecoder() if args.decoder == "hard" else OracleDecoder()
        code = _resolve(args)
    stop = StopRule(args.min_frames, args.min_frame_errors, args.max_frames, args.block_size)
    report = evaluate(decoder, code, _floats(args.snr), stop, getattr(args, "seed", 0), args.threads,
                      args.zero_codeword)
    lines = ["snr_db frames bit_errors frame_errors ber fer capped"]
    for r in report.results:
        lines.append(f"{r.snr_db:g} {r.frames} {r.bit_errors} {r.frame_errors} {r.ber:.6g} {r.fer:.6g} {r.capped}")
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(json.dumps(report.to_dict(), indent=1))
    _emit(args, report.to_dict(), "\n".join(lines))


def cmd_sweep(args) -> None:
    cfg = getattr(args, "config", None)
    spec = load_spec(cfg) if cfg else PRESETS[args.preset]
    if hasattr(args, "seed"):
        from dataclasses import replace
        spec = replace(spec, seed=args.seed, schedule=replace(spec.schedule, seed=args.seed))
    out = Path(getattr(args, "out", None) or "sweep-out")
    quiet = getattr(args, "json", False)

    def log(epoch, value):
        if not quiet:
            print(f"epoch {epoch}: mean loss {value:.6f}", file=sys.stderr, flush=True)

    rows = sweep(spec, out, resume=not args.no_resume, log=log, max_cells=args.max_cells)
    text = "\n".join(",".join(str(v) for v in format_row(r).values()) for r in rows)
    _emit(args, {"out": str(out), "rows": len(rows), "expected_rows": spec.rows_expected()}, text)


COMMANDS = {"code": cmd_code, "mask": cmd_mask, "train": cmd_train, "eval": cmd_eval, "sweep": cmd_sweep}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config_defaults(parser, argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (DMECCTError, OSError, ValueError, KeyError) as exc:
        print(f"dmecct: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
