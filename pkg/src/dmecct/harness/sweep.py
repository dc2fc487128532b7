"""Experiment sweeps over codes, variants, model sizes and SNRs."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .. import codes
from ..errors import ParseError
from ..model import ECCTConfig, TrainSchedule, load_checkpoint, save_checkpoint, schedule_preset, train, write_loss_csv
from .evaluate import ModelDecoder, StopRule, evaluate

CSV_COLUMNS = [
    "code", "family", "n", "k", "variant", "n_layers", "embed_dim", "heads",
    "snr_db", "frames", "bit_errors", "frame_errors", "ber", "fer", "seed", "capped",
]
PROGRESS = "progress.json"


@dataclass(frozen=True)
class SweepSpec:
    codes: tuple = ("polar-64-32",)
    variants: tuple = ("Conventional", "SM", "DM")
    sizes: tuple = ((2, 32),)
    snr_db: tuple = (4.0, 5.0, 6.0)
    heads: int = 8
    precision: str = "f32"
    schedule: TrainSchedule = field(default_factory=lambda: schedule_preset("desk"))
    stop: StopRule = StopRule(min_frames=20_000, min_frame_errors=0)
    seed: int = 0
    threads: int = 1

    def cells(self) -> list[tuple]:
        return [(c, v, n, d) for c in self.codes for v in self.variants for n, d in self.sizes]

    def rows_expected(self) -> int:
        return len(self.cells()) * len(self.snr_db)


PRESETS = {
    "desk": SweepSpec(),
    "paper": SweepSpec(
        codes=codes.BENCHMARK_CODES,
        sizes=((2, 32), (2, 64), (2, 128), (6, 32), (6, 64), (6, 128)),
        schedule=schedule_preset("paper"),
        stop=StopRule(),
    ),
}


def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError(lineno, "empty key")
        out[key] = value
    return out


def _floats(v):
    return tuple(float(x) for x in v.split(","))


def _ints(v):
    return tuple(int(x) for x in v.split(","))


def _words(v):
    return tuple(x.strip() for x in v.split(",") if x.strip())


def _sizes(v):
    # "2x32, 6x64"
    out = []
    for item in _words(v):
        n, d = item.lower().split("x")
        out.append((int(n), int(d)))
    return tuple(out)


SCHEDULE_KEYS = {
    "epochs": int, "batches_per_epoch": int, "batch_size": int, "lr": float,
    "lr_decay": str, "lr_min": float, "train_snr_db": _floats,
}
STOP_KEYS = {"min_frames": int, "min_frame_errors": int, "max_frames": int, "block_size": int}
SPEC_KEYS = {
    "codes": _words, "variants": _words, "sizes": _sizes, "snr_db": _floats, "heads": int,
    "precision": str, "seed": int, "threads": int,
}


def spec_from_mapping(values: dict[str, str]) -> SweepSpec:
    """Build a sweep spec from parsed key/value pairs (``preset`` picks the base)."""
    values = dict(values)
    base = values.pop("preset", "desk")
    if base not in PRESETS:
        raise ParseError(0, f"unknown preset {base!r}")
    spec = PRESETS[base]
    sched, stop, top = {}, {}, {}
    for key, raw in values.items():
        try:
            if key in SCHEDULE_KEYS:
                sched[key] = SCHEDULE_KEYS[key](raw)
            elif key == "schedule":
                spec = replace(spec, schedule=schedule_preset(raw))
            elif key in STOP_KEYS:
                stop[key] = STOP_KEYS[key](raw)
            elif key in SPEC_KEYS:
                top[key] = SPEC_KEYS[key](raw)
            else:
                raise ParseError(0, f"unknown key {key!r}")
        except (ValueError, KeyError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(0, f"bad value for {key}: {raw!r} ({exc})") from exc
    if "seed" in top:
        sched.setdefault("seed", top["seed"])
    return replace(spec, schedule=replace(spec.schedule, **sched), stop=replace(spec.stop, **stop), **top)


def load_spec(path) -> SweepSpec:
    return spec_from_mapping(parse_config_text(Path(path).read_text()))


def cell_key(cell) -> str:
    c, v, n, d = cell
    return f"{c}/{v}/N{n}/d{d}"


def format_row(row: dict) -> dict:
    out = dict(row)
    out["ber"] = f"{row['ber']:.6g}"
    out["fer"] = f"{row['fer']:.6g}"
    out["capped"] = "true" if row["capped"] else "false"
    return out


def write_results(rows: list[dict], out_dir: Path) -> None:
    with open(out_dir / "results.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow(format_row(row))
    mirror = [{**row, "ber": float(f"{row['ber']:.6g}"), "fer": float(f"{row['fer']:.6g}")} for row in rows]
    (out_dir / "results.json").write_text(json.dumps(mirror, indent=1))


def run_cell(spec: SweepSpec, cell, out_dir: Path, log=None) -> list[dict]:
    code_name, variant, n_layers, dim = cell
    code = codes.get_code(code_name)
    config = ECCTConfig(code=code, variant=variant, n_layers=n_layers, embed_dim=dim, heads=spec.heads,
                        precision=spec.precision)
    ckpt = out_dir / "checkpoints" / cell_key(cell).replace("/", "_")
    if (ckpt / "manifest.json").exists():
        params, config = load_checkpoint(ckpt)
    else:
        result = train(config, spec.schedule, log=log)
        params = result.params
        save_checkpoint(params, config, ckpt)
        write_loss_csv(result.epoch_losses, ckpt / "loss.csv")
    report = evaluate(ModelDecoder(params, config), code, spec.snr_db, spec.stop, spec.seed, spec.threads)
    rows = []
    for r in report.results:
        rows.append({
            "code": code.name, "family": code.family, "n": code.n, "k": code.k, "variant": variant,
            "n_layers": n_layers, "embed_dim": dim, "heads": spec.heads, "snr_db": r.snr_db,
            "frames": r.frames, "bit_errors": r.bit_errors, "frame_errors": r.frame_errors,
            "ber": r.ber, "fer": r.fer, "seed": spec.seed, "capped": r.capped,
        })
    return rows


def sweep(spec: SweepSpec, out_dir, resume: bool = True, log=None, max_cells: int | None = None) -> list[dict]:
    """Run every cell not yet recorded in the progress file; returns all rows.

    Results are rewritten after each finished cell, always in cell order, so
    an interrupted sweep leaves valid partial files and a resumed one ends with
    the same CSV as an uninterrupted run. ``max_cells`` stops early after that
    many newly computed cells.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    progress_path = out_dir / PROGRESS
    done = json.loads(progress_path.read_text()) if resume and progress_path.exists() else {}
    fresh = 0
    for cell in spec.cells():
        key = cell_key(cell)
        if key in done:
            continue
        if max_cells is not None and fresh >= max_cells:
            break
        done[key] = run_cell(spec, cell, out_dir, log)
        fresh += 1
        progress_path.write_text(json.dumps(done, indent=1))
        write_results(_ordered_rows(spec, done), out_dir)
    rows = _ordered_rows(spec, done)
    write_results(rows, out_dir)
    return rows


def _ordered_rows(spec: SweepSpec, done: dict) -> list[dict]:
    return [row for cell in spec.cells() for row in done.get(cell_key(cell), [])]
