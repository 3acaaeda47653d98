"""Experiment protocols: datasets, training runs, the architecture sweep,
the finite-sample study and the Monte-Carlo method comparison.

Datasets live in a directory holding ``manifest.json`` and one ``.rifm``
frame file per snapshot under ``frames/``.  Metric tables are CSV.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import io as rio
from .cnn import ArchitectureSpec, ModelState, init_model, param_count
from .config import ExperimentConfig
from .detection import ca_cfar, sinr, sinr_cdf
from .mitigation import imat, ramp_filter, zeroing
from .radar_sim import (
    IFFrame,
    InterfererSpec,
    ObjectSpec,
    RadarConfig,
    SamplingBounds,
    ScenarioSpec,
    sample_scenario,
    scaled_interference,
    simulate,
)
from .rd_pipeline import doppler_dft, magnitude_db, range_dft, rd_map
from .training import PairSet, TrainConfig, TrainResult, denoise_map, train

log = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")


class DataError(RuntimeError):
    """Missing, inconsistent or malformed dataset files."""


# --------------------------------------------------------------------------
# datasets


@dataclass
class DatasetManifest:
    radar: dict
    count: int
    splits: dict
    frames: list[dict]
    seed: int
    source: str = "simulated"
    note: str = ""
    bounds: dict | None = None

    def indices(self, split: str) -> list[int]:
        return [f["index"] for f in self.frames if f["split"] == split]

    def check_groups(self) -> None:
        owner: dict[int, str] = {}
        for f in self.frames:
            prev = owner.setdefault(f["group"], f["split"])
            if prev != f["split"]:
                raise DataError(f"group {f['group']} appears in both {prev} and {f['split']} splits")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        return cls(**json.loads(text))


def split_counts(count: int, ratios) -> tuple[int, int, int]:
    ratios = np.asarray(ratios, dtype=float)
    if int(ratios.sum()) == count:
        return tuple(int(r) for r in ratios)
    train = int(round(count * ratios[0] / ratios.sum()))
    val = int(round(count * ratios[1] / ratios.sum()))
    return train, val, count - train - val


def assign_splits(count: int, ratios, group_size: int) -> list[tuple[str, int]]:
    """``(split, group_id)`` per frame; groups never straddle splits."""
    out = []
    gid = 0
    for split, n in zip(SPLITS, split_counts(count, ratios)):
        for k in range(n):
            if k and k % group_size == 0:
                gid += 1
            out.append((split, gid))
        if n:
            gid += 1
    return out


def _seed(*keys: int) -> int:
    return int(np.random.SeedSequence(list(keys)).generate_state(2, np.uint32).view(np.uint64)[0] >> 1)


def scenario_to_dict(sc: ScenarioSpec) -> dict:
    return {
        "objects": [asdict(o) for o in sc.objects],
        "interferers": [asdict(i) for i in sc.interferers],
        "snr_db": sc.snr_db,
        "snir_db": sc.snir_db,
        "seed": sc.seed,
    }


def scenario_from_dict(d: dict) -> ScenarioSpec:
    return ScenarioSpec(
        objects=tuple(ObjectSpec(**o) for o in d.get("objects", [])),
        interferers=tuple(InterfererSpec(**i) for i in d.get("interferers", [])),
        snr_db=float(d.get("snr_db", float("inf"))),
        snir_db=float(d.get("snir_db", float("inf"))),
        seed=int(d.get("seed", 0)),
    )


def group_scenario(cfg: RadarConfig, bounds: SamplingBounds, seed: int, group: int, index: int) -> ScenarioSpec:
    """Frame scenario whose reflectors are shared by its whole group.

    Noise, interference, SNR and SNIR are drawn per frame; object phases are
    redrawn per frame as well.
    """
    scene = sample_scenario(_seed(seed, 1, group), cfg, bounds)
    frame = sample_scenario(_seed(seed, 2, index), cfg, bounds)
    rng = np.random.default_rng(_seed(seed, 3, index))
    objects = tuple(replace(o, phase=float(rng.uniform(0, 2 * np.pi))) for o in scene.objects)
    return replace(frame, objects=objects)


def _record(cfg: RadarConfig, clean: np.ndarray, scenario: ScenarioSpec, meta: dict) -> rio.FrameRecord:
    # interference is scaled against the stored (complex64) clean frame so
    # that re-injection from a file reproduces the interfered frame exactly
    clean32 = clean.astype(np.complex64).astype(complex)
    interference, mask = scaled_interference(cfg, clean32, scenario.interferers, scenario.snir_db)
    return rio.FrameRecord(clean32, clean32 + interference, mask, meta)


def _write_manifest(out: Path, manifest: DatasetManifest) -> None:
    (out / "manifest.json").write_text(manifest.to_json() + "\n", encoding="utf-8")


def gen_dataset(
    cfg: ExperimentConfig,
    count: int | None,
    seed: int,
    out_path,
    bounds: SamplingBounds | None = None,
    note: str = "",
) -> DatasetManifest:
    """Simulate ``count`` frames into ``out_path`` with a group-aware split."""
    bounds = bounds or cfg.bounds
    bounds.validate()
    count = sum(cfg.splits) if count is None else int(count)
    out = Path(out_path)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    frames = []
    for index, (split, group) in enumerate(assign_splits(count, cfg.splits, cfg.group_size)):
        sc = group_scenario(cfg.radar, bounds, seed, group, index)
        pair = simulate(cfg.radar, sc)
        name = f"frames/{index:06d}.rifm"
        meta = {"index": index, "group": group, "split": split, "scenario": scenario_to_dict(sc)}
        rio.write_frame(out / name, _record(cfg.radar, pair.clean.data, sc, meta))
        frames.append({"index": index, "file": name, "split": split, "group": group, "seed": sc.seed})
    manifest = DatasetManifest(
        radar=asdict(cfg.radar),
        count=count,
        splits={s: n for s, n in zip(SPLITS, split_counts(count, cfg.splits))},
        frames=frames,
        seed=seed,
        note=note,
        bounds=asdict(bounds),
    )
    _write_manifest(out, manifest)
    return manifest


def ingest_external_frames(
    in_path, out_path, cfg: ExperimentConfig, seed: int = 0, bounds: SamplingBounds | None = None
) -> DatasetManifest:
    """Turn externally recorded clean frames into a training dataset.

    Each input ``.rifm`` contributes its clean frame only.  Interference is
    taken from the file's scenario metadata when present (so re-ingesting an
    exported dataset reproduces it) and drawn from ``bounds`` otherwise.
    """
    bounds = bounds or cfg.bounds
    src = Path(in_path)
    if not src.exists():
        raise DataError(f"input {src} does not exist")
    files = sorted(src.rglob("*.rifm")) if src.is_dir() else [src]
    if not files:
        raise DataError(f"no .rifm files under {src}")
    out = Path(out_path)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    shape = (cfg.radar.N, cfg.radar.M)
    defaults = assign_splits(len(files), cfg.splits, cfg.group_size)
    frames = []
    for index, path in enumerate(files):
        try:
            rec = rio.read_frame(path, expect_shape=shape)
        except rio.FormatError as exc:
            raise DataError(f"{path}: {exc}") from exc
        meta = dict(rec.metadata)
        if "scenario" in meta and "snir_db" in meta["scenario"]:
            sc = scenario_from_dict(meta["scenario"])
        else:
            drawn = sample_scenario(_seed(seed, 4, index), cfg.radar, bounds)
            sc = ScenarioSpec(objects=(), interferers=drawn.interferers, snir_db=drawn.snir_db, seed=drawn.seed)
            meta["scenario"] = scenario_to_dict(sc)
        split = meta.get("split", defaults[index][0])
        group = int(meta.get("group", defaults[index][1]))
        meta.update(index=index, split=split, group=group)
        name = f"frames/{index:06d}.rifm"
        rio.write_frame(out / name, _record(cfg.radar, rec.clean.astype(complex), sc, meta))
        frames.append({"index": index, "file": name, "split": split, "group": group, "seed": sc.seed})
    counts = {s: sum(f["split"] == s for f in frames) for s in SPLITS}
    manifest = DatasetManifest(
        radar=asdict(cfg.radar),
        count=len(frames),
        splits=counts,
        frames=frames,
        seed=seed,
        source="ingested",
        note=f"clean frames from {src.name}; interference simulated",
        bounds=asdict(bounds),
    )
    manifest.check_groups()
    _write_manifest(out, manifest)
    return manifest


@dataclass
class SplitData:
    """Processed frames of one split."""

    ids: list[int]
    clean_rd: list[np.ndarray]
    interfered_rd: list[np.ndarray]
    frames: list[IFFrame]
    peaks: list[list[tuple[int, int]]]

    def __len__(self):
        return len(self.ids)

    def pairs(self, idx=None) -> PairSet:
        idx = range(len(self)) if idx is None else idx
        return PairSet.from_maps(
            [self.interfered_rd[i] for i in idx],
            [self.clean_rd[i] for i in idx],
            [self.peaks[i] for i in idx],
        )


class Dataset:
    def __init__(self, path, cfg: ExperimentConfig):
        self.path = Path(path)
        mf = self.path / "manifest.json"
        if not mf.is_file():
            raise DataError(f"no manifest.json in {self.path}")
        try:
            self.manifest = DatasetManifest.from_json(mf.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, TypeError) as exc:
            raise DataError(f"unreadable manifest {mf}: {exc}") from exc
        self.manifest.check_groups()
        if len(self.manifest.frames) != self.manifest.count:
            raise DataError("manifest frame count does not match its frame list")
        missing = [f["file"] for f in self.manifest.frames if not (self.path / f["file"]).is_file()]
        if missing:
            raise DataError(f"{len(missing)} frame files missing, e.g. {missing[0]}")
        self.cfg = cfg
        self._cache: dict[str, SplitData] = {}

    def split(self, name: str) -> SplitData:
        if name not in self._cache:
            shape = (self.cfg.radar.N, self.cfg.radar.M)
            data = SplitData([], [], [], [], [])
            for f in self.manifest.frames:
                if f["split"] != name:
                    continue
                try:
                    rec = rio.read_frame(self.path / f["file"], expect_shape=shape)
                except rio.FormatError as exc:
                    raise DataError(f"{f['file']}: {exc}") from exc
                clean_rd = rd_map(rec.clean.astype(complex))
                data.ids.append(f["index"])
                data.clean_rd.append(clean_rd)
                data.interfered_rd.append(rd_map(rec.interfered.astype(complex)))
                data.frames.append(IFFrame(rec.interfered.astype(complex), rec.mask))
                data.peaks.append(ca_cfar(np.abs(clean_rd) ** 2, self.cfg.cfar))
            self._cache[name] = data
        return self._cache[name]


# --------------------------------------------------------------------------
# training and scoring


def train_model(
    cfg: ExperimentConfig,
    train_data: PairSet,
    val_data: PairSet | None,
    arch: ArchitectureSpec | None = None,
    seed: int = 0,
    init: ModelState | None = None,
    train_cfg: TrainConfig | None = None,
) -> TrainResult:
    model = init.copy() if init is not None else init_model(arch or cfg.arch, seed)
    tc = replace(train_cfg or cfg.train, seed=seed)
    return train(model, train_data, val_data, tc)


def mitigate(method: str, frame: IFFrame, clean_rd, interfered_rd, cfg: ExperimentConfig, model=None):
    """RD map produced by one method for one frame."""
    if method == "clean":
        return clean_rd
    if method == "interfered":
        return interfered_rd
    if method == "zeroing":
        return rd_map(zeroing(frame).data)
    if method == "imat":
        return rd_map(imat(frame, cfg.imat).data)
    if method == "ramp_filter":
        return doppler_dft(ramp_filter(range_dft(frame.data)))
    if method == "cnn":
        if model is None:
            raise ValueError("the cnn method needs a trained model")
        return denoise_map(model, interfered_rd)
    raise ValueError(f"unknown method {method!r}")


def score_methods(cfg: ExperimentConfig, data: SplitData, methods, model=None) -> list[dict]:
    """Per-frame SINR of every method at the clean map's CFAR peaks.

    Frames without clean-map detections have no defined SINR and are skipped.
    """
    rows = []
    for k, fid in enumerate(data.ids):
        peaks = data.peaks[k]
        if not peaks:
            continue
        for method in methods:
            rd = mitigate(method, data.frames[k], data.clean_rd[k], data.interfered_rd[k], cfg, model)
            rows.append({"frame_id": fid, "method": method, "sinr_db": sinr(rd, peaks, cfg.cfar)})
    return rows


def mean_test_sinr(cfg: ExperimentConfig, model: ModelState, data: SplitData) -> float:
    vals = [r["sinr_db"] for r in score_methods(cfg, data, ["cnn"], model)]
    return float(np.mean(vals)) if vals else float("nan")


def write_csv(path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_history(path, result: TrainResult) -> None:
    write_csv(path, result.history, ["epoch", "train_loss", "val_loss", "val_sinr"])


# --------------------------------------------------------------------------
# protocols


def kernel_ladder(layers: int, max_kernels: int, floor: int = 8) -> ArchitectureSpec:
    """Halving power-of-two ladder from ``max_kernels``, never below ``floor``,
    closed by the 2-kernel output layer."""
    ks = [max(max_kernels >> i, min(floor, max_kernels)) for i in range(layers - 1)]
    return ArchitectureSpec(tuple(ks) + (2,))


def sweep_grid(cfg: ExperimentConfig) -> list[tuple[int, int, ArchitectureSpec]]:
    return [(L, K, kernel_ladder(L, K)) for L in cfg.sweep_layers for K in cfg.sweep_max_kernels]


def reference_sinr(cfg: ExperimentConfig, data: SplitData) -> dict[str, float]:
    rows = score_methods(cfg, data, ["clean", "interfered"])
    return {m: float(np.mean([r["sinr_db"] for r in rows if r["method"] == m])) for m in ("clean", "interfered")}


def run_arch_sweep(cfg: ExperimentConfig, dataset: Dataset, out_dir=None, seed: int = 0) -> list[dict]:
    """Train every (depth, max-kernel) ladder and record its test SINR."""
    tr, va, te = (dataset.split(s) for s in SPLITS)
    train_pairs, val_pairs = tr.pairs(), va.pairs()
    rows = []
    for L, K, arch in sweep_grid(cfg):
        row = {"layers": L, "max_kernels": K, "arch": str(arch), "params": param_count(arch)}
        try:
            res = train_model(cfg, train_pairs, val_pairs, arch, seed)
            row.update(best_epoch=res.best_epoch, test_sinr_db=mean_test_sinr(cfg, res.model, te), status="ok")
        except Exception as exc:  # a failed cell must not stop the sweep
            log.warning("sweep cell %s failed: %s", arch, exc)
            row.update(best_epoch=-1, test_sinr_db=float("nan"), status=f"failed: {type(exc).__name__}")
        rows.append(row)
    ref = reference_sinr(cfg, te)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "sweep.csv", rows, ["layers", "max_kernels", "arch", "params", "best_epoch", "test_sinr_db", "status"])
        write_csv(out / "sweep_reference.csv", [{"reference": k, "sinr_db": v} for k, v in ref.items()], ["reference", "sinr_db"])
    return rows


def run_sample_size_study(
    cfg: ExperimentConfig,
    sim: Dataset,
    real: Dataset,
    out_dir=None,
    seed: int = 0,
    variants=None,
    sizes=None,
    repetitions: int | None = None,
) -> tuple[list[dict], list[dict]]:
    """Test SINR on the ``real`` test split against training-set size.

    Variants: ``sim`` (simulated train and validation), ``sim_vreal``
    (simulated train, real validation), ``real`` and ``transfer``
    (pre-trained on ``cfg.pretrain_size`` simulated frames, then fine-tuned
    on the real subset).  Every repetition draws a fresh random subset and
    trains from scratch.
    """
    variants = tuple(variants or cfg.sample_variants)
    sizes = tuple(sizes or cfg.sample_sizes)
    reps = repetitions or cfg.repetitions
    sim_tr, sim_va = sim.split("train"), sim.split("val")
    real_tr, real_va, real_te = real.split("train"), real.split("val"), real.split("test")
    pools = {"sim": sim_tr, "sim_vreal": sim_tr, "real": real_tr, "transfer": real_tr}
    vals = {"sim": sim_va.pairs(), "sim_vreal": real_va.pairs(), "real": real_va.pairs(), "transfer": real_va.pairs()}
    for v in variants:
        if v not in pools:
            raise ValueError(f"unknown variant {v!r}")
        if max(sizes) > len(pools[v]):
            raise ValueError(f"subset size {max(sizes)} exceeds the {v} pool of {len(pools[v])} frames")
    pretrained = None
    if "transfer" in variants:
        if cfg.pretrain_size > len(sim_tr):
            raise ValueError(f"pre-training size {cfg.pretrain_size} exceeds the simulated pool")
        idx = np.random.default_rng(_seed(seed, 5)).choice(len(sim_tr), cfg.pretrain_size, replace=False)
        pretrained = train_model(cfg, sim_tr.pairs(np.sort(idx)), sim_va.pairs(), seed=seed).model

    rows = []
    for variant in variants:
        pool = pools[variant]
        for size in sizes:
            for rep in range(reps):
                rng = np.random.default_rng(_seed(seed, 6, size, rep))
                idx = np.sort(rng.choice(len(pool), size, replace=False))
                run_seed = _seed(seed, 7, size, rep)
                init = pretrained if variant == "transfer" else None
                res = train_model(cfg, pool.pairs(idx), vals[variant], seed=run_seed, init=init)
                rows.append(
                    {
                        "variant": variant,
                        "size": size,
                        "repetition": rep,
                        "test_sinr_db": mean_test_sinr(cfg, res.model, real_te),
                    }
                )
    summary = summarize_sample_study(rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "sample_size_runs.csv", rows, ["variant", "size", "repetition", "test_sinr_db"])
        write_csv(out / "sample_size_summary.csv", summary, ["variant", "size", "n", "mean_sinr_db", "var_sinr_db"])
    return rows, summary


def summarize_sample_study(rows: list[dict]) -> list[dict]:
    out = []
    keys = sorted({(r["variant"], r["size"]) for r in rows}, key=lambda k: (k[0], k[1]))
    for variant, size in keys:
        v = np.array([r["test_sinr_db"] for r in rows if r["variant"] == variant and r["size"] == size])
        out.append(
            {
                "variant": variant,
                "size": size,
                "n": len(v),
                "mean_sinr_db": float(np.mean(v)),
                "var_sinr_db": float(np.var(v, ddof=1)) if len(v) > 1 else 0.0,
            }
        )
    return out


@dataclass
class Comparison:
    rows: list[dict]
    cdfs: dict[str, np.ndarray]
    summary: list[dict] = field(default_factory=list)

    def medians(self) -> dict[str, float]:
        return {r["method"]: r["median_sinr_db"] for r in self.summary}


def run_method_comparison(
    cfg: ExperimentConfig, model: ModelState | None, data: SplitData, out_dir=None, methods=None, n_maps: int = 1
) -> Comparison:
    """Per-frame SINR, empirical CDF and median/mean summary per method,
    all scored at the clean map's CFAR peaks."""
    methods = list(methods or cfg.methods)
    if "cnn" in methods and model is None:
        raise ValueError("comparison includes the cnn method but no model was given")
    rows = score_methods(cfg, data, methods, model)
    cdfs, summary = {}, []
    for m in methods:
        v = [r["sinr_db"] for r in rows if r["method"] == m]
        if not v:
            continue
        cdfs[m] = sinr_cdf(v)
        summary.append({"method": m, "n": len(v), "median_sinr_db": float(np.median(v)), "mean_sinr_db": float(np.mean(v))})
    comp = Comparison(rows, cdfs, summary)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "sinr_per_frame.csv", rows, ["frame_id", "method", "sinr_db"])
        for m, table in cdfs.items():
            write_csv(out / f"cdf_{m}.csv", [{"value": a, "cum_fraction": b} for a, b in table], ["value", "cum_fraction"])
        write_csv(out / "summary.csv", summary, ["method", "n", "median_sinr_db", "mean_sinr_db"])
        for k in range(min(n_maps, len(data))):
            maps = {
                m: magnitude_db(mitigate(m, data.frames[k], data.clean_rd[k], data.interfered_rd[k], cfg, model))
                for m in methods
            }
            np.savez(out / f"rd_db_frame{data.ids[k]:06d}.npz", **maps)
    return comp
