"""Command-line entry point.

A session directory holds the canonical files (meta.json, tracks.csv,
labels.csv, observations.csv); every command reads some subset, writes
deterministic CSV/JSON (and SVG for report) into --out, and exits 0 on
success, 1 on an analysis error, 2 on a parse or I/O error. The only
randomized command is `simulate`, which demands an explicit --seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path
from typing import NamedTuple

from .core import (
    DRONE_FOCAL,
    GROUND_SCAN,
    METHODS,
    ML_AUTO,
    AnalysisParams,
    LabelStream,
    ObservationStream,
    Track,
    VideoMeta,
    validate_session,
)
from .ethogram import Ethogram, default_ethogram, read_ethogram
from .ingest import (
    ParseError,
    read_ground_observations,
    read_labels,
    read_tracks,
    read_video_meta,
)
from .metrics import (
    cohens_kappa,
    class_metrics,
    confusion,
    time_budget,
    transition_matrix,
)
from .miniscene import DEFAULT_OUT_H, DEFAULT_OUT_W, dump_miniscene_manifest, extract_miniscenes
from .social import (
    OverlapMatrix,
    detect_interactions,
    dump_interaction_events,
    dump_overlap_matrix,
    overlap_summary,
    tag_interactions,
)
from .stats import dummy_code, nested_f_test, ols_fit, significance_stars
from .simulator import OcclusionZone, demo_config, export_world, observe_focal, observe_scan, simulate
from .svgplot import gantt_svg, transition_heatmap_svg
from .timeline import (
    align_pair,
    dump_paired_series,
    label_stream_to_observation,
    map_labels,
    propagate_scan,
    visibility_filter,
)

_CONFIG_KEYS = {
    "ethogram",
    "params",
    "label_map",
    "crop",
    "clock_offset_s",
    "composition",
    "overlap_counts",
    "simulation",
    "references",
    "factors",
    "interactions",
}
_PARAM_KEYS = {f.name for f in dataclasses.fields(AnalysisParams)}
_SIM_KEYS = {
    "n_individuals",
    "codes",
    "transition",
    "speeds_mps",
    "arena_w_m",
    "arena_h_m",
    "zones",
    "fps",
    "duration_s",
    "scan_period_s",
    "step_s",
    "heading_sd_rad",
    "initial_code",
    "species",
    "px_per_m",
    "body_w_m",
    "body_h_m",
}


class RunConfig(NamedTuple):
    """Parsed --config document; every field has a working default."""

    ethogram_path: str | None
    params: AnalysisParams
    label_map: dict[str, str]
    crop: tuple[int, int]
    clock_offset_s: float
    composition: dict[str, int]
    overlap_counts: dict[tuple[str, str], int]
    simulation: dict
    references: dict[str, str]
    factors: list[str]
    interactions: list[tuple[str, str]]


def _default_config() -> RunConfig:
    return RunConfig(
        None, AnalysisParams(), {}, (DEFAULT_OUT_W, DEFAULT_OUT_H), 0.0, {}, {}, {}, {}, [], []
    )


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return _default_config()
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ParseError(f"config file not found: {p}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{p.name}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{p.name}: expected a JSON object")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ParseError(f"{p.name}: unknown config keys {sorted(unknown)}")
    params_doc = doc.get("params", {})
    bad = set(params_doc) - _PARAM_KEYS
    if bad:
        raise ParseError(f"{p.name}: unknown params keys {sorted(bad)}")
    params = dataclasses.replace(AnalysisParams(), **params_doc)
    crop_doc = doc.get("crop", {})
    if set(crop_doc) - {"out_w", "out_h"}:
        raise ParseError(f"{p.name}: unknown crop keys {sorted(set(crop_doc) - {'out_w', 'out_h'})}")
    sim_doc = doc.get("simulation", {})
    bad = set(sim_doc) - _SIM_KEYS
    if bad:
        raise ParseError(f"{p.name}: unknown simulation keys {sorted(bad)}")
    counts = {}
    for key, value in doc.get("overlap_counts", {}).items():
        parts = key.split("|")
        if len(parts) != 2:
            raise ParseError(f"{p.name}: overlap_counts key {key!r} is not 'speciesA|speciesB'")
        counts[tuple(sorted(parts))] = int(value)
    return RunConfig(
        doc.get("ethogram"),
        params,
        dict(doc.get("label_map", {})),
        (int(crop_doc.get("out_w", DEFAULT_OUT_W)), int(crop_doc.get("out_h", DEFAULT_OUT_H))),
        float(doc.get("clock_offset_s", 0.0)),
        {str(k): int(v) for k, v in doc.get("composition", {}).items()},
        counts,
        sim_doc,
        {str(k): str(v) for k, v in doc.get("references", {}).items()},
        [str(f) for f in doc.get("factors", [])],
        [tuple(pair) for pair in doc.get("interactions", [])],
    )


def _load_ethogram(config: RunConfig) -> Ethogram:
    if config.ethogram_path:
        return read_ethogram(config.ethogram_path)
    env = os.environ.get("ETHOKIT_ETHOGRAM")
    if env:
        return read_ethogram(env)
    return default_ethogram()


class Session(NamedTuple):
    meta: VideoMeta
    tracks: list[Track]
    labels: list[LabelStream]
    observations: list[ObservationStream]


def _load_session(directory: str | Path, *, need: tuple[str, ...] = ()) -> Session:
    root = Path(directory)
    if not root.is_dir():
        raise ParseError(f"session directory not found: {root}")
    meta_path = root / "meta.json"
    if not meta_path.exists():
        raise ParseError(f"missing file: {meta_path}")
    meta = read_video_meta(meta_path)

    def optional(name: str, reader):
        path = root / name
        if path.exists():
            return reader(path)
        if name in need:
            raise ParseError(f"missing file: {path}")
        return []

    return Session(
        meta,
        optional("tracks.csv", read_tracks),
        optional("labels.csv", read_labels),
        optional("observations.csv", read_ground_observations),
    )


def _emit(out_dir: Path, name: str, text: str) -> Path:
    """Atomic write: the final path never holds a partial file."""
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
    return path


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    config = load_config(args.config)
    session = _load_session(args.session)
    report = validate_session(
        session.tracks,
        session.labels + session.observations,
        session.meta,
        _load_ethogram(config),
    )
    if report.ok:
        print("ok")
        return 0
    print(report)
    return 1


def cmd_miniscenes(args) -> int:
    config = load_config(args.config)
    params = config.params
    if args.min_frames is not None:
        params = dataclasses.replace(params, min_miniscene_frames=args.min_frames)
    session = _load_session(args.session, need=("tracks.csv", "labels.csv"))
    out_w, out_h = config.crop
    scenes = extract_miniscenes(
        session.tracks, session.labels, params, session.meta, out_w, out_h
    )
    path = _emit(Path(args.out), "miniscenes.csv", dump_miniscene_manifest(scenes))
    print(f"{len(scenes)} mini-scene(s) -> {path}")
    return 0


def _budget_rows(session: Session, ethogram: Ethogram) -> list[tuple[str, str, str, float, float]]:
    technical = ethogram.technical_codes()
    rows = []
    for stream in session.labels:
        budget = time_budget(stream, ethogram, session.meta)
        for code in sorted(budget.seconds):
            rows.append(
                ("labels", stream.track_id, code, budget.seconds[code], budget.proportion(code))
            )
    for stream in session.observations:
        # scans are instantaneous and a fully occluded focal record has
        # no behavioral denominator; neither yields a budget row
        visible = sum(iv.end - iv.start for iv in stream.intervals if iv.code not in technical)
        if visible <= 0:
            continue
        budget = time_budget(stream, ethogram)
        for code in sorted(budget.seconds):
            rows.append(
                (stream.method, stream.subject_id, code, budget.seconds[code], budget.proportion(code))
            )
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return rows


def cmd_timebudget(args) -> int:
    config = load_config(args.config)
    session = _load_session(args.session)
    if not session.labels and not session.observations:
        raise ValueError("session has neither labels.csv nor observations.csv")
    rows = _budget_rows(session, _load_ethogram(config))
    out = Path(args.out)
    if args.format == "json":
        doc = [
            {"source": s, "subject": subj, "code": c, "seconds": sec, "proportion": prop}
            for s, subj, c, sec, prop in rows
        ]
        path = _emit(out, "timebudget.json", _json_text(doc))
    else:
        lines = ["source,subject,code,seconds,proportion"]
        lines += [f"{s},{subj},{c},{sec!r},{prop!r}" for s, subj, c, sec, prop in rows]
        path = _emit(out, "timebudget.csv", "\n".join(lines) + "\n")
    print(f"time budget -> {path}")
    return 0


def _transition_inputs(session: Session, ethogram: Ethogram):
    """Label streams when present, else non-scan observation streams."""
    if session.labels:
        streams = session.labels
    else:
        streams = [s for s in session.observations if s.method != GROUND_SCAN]
    if not streams:
        raise ValueError("no streams to sample transitions from")
    codes: set[str] = set()
    for stream in streams:
        if isinstance(stream, LabelStream):
            codes |= stream.codes()
        else:
            codes |= {iv.code for iv in stream.intervals}
    codes -= ethogram.technical_codes()
    return streams, sorted(codes)


def _matrix_csv(codes, rows) -> str:
    lines = ["code," + ",".join(codes)]
    for code, row in zip(codes, rows):
        lines.append(code + "," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def cmd_transitions(args) -> int:
    config = load_config(args.config)
    ethogram = _load_ethogram(config)
    session = _load_session(args.session)
    streams, codes = _transition_inputs(session, ethogram)
    delta = args.interval if args.interval is not None else config.params.downsample_interval_s
    matrix = transition_matrix(streams, delta, codes, ethogram, session.meta)
    out = Path(args.out)
    if args.format == "json":
        doc = {
            "codes": list(matrix.codes),
            "counts": [list(r) for r in matrix.counts],
            "probabilities": [list(r) for r in matrix.probabilities],
        }
        path = _emit(out, "transitions.json", _json_text(doc))
    else:
        path = _emit(out, "transitions.csv", _matrix_csv(matrix.codes, matrix.probabilities))
        _emit(
            out,
            "transition_counts.csv",
            _matrix_csv(matrix.codes, matrix.counts),
        )
    print(f"{matrix.total} transition pair(s) -> {path}")
    return 0


def cmd_interactions(args) -> int:
    config = load_config(args.config)
    params = config.params
    if args.threshold is not None:
        params = dataclasses.replace(params, overlap_ratio_threshold=args.threshold)
    if args.min_frames is not None:
        params = dataclasses.replace(params, min_overlap_frames=args.min_frames)
    out = Path(args.out)
    if config.overlap_counts:
        if not config.composition:
            raise ValueError("overlap_counts given without composition")
        matrix = OverlapMatrix.from_counts(config.composition, config.overlap_counts)
        path = _emit(out, "overlap_summary.csv", dump_overlap_matrix(matrix))
        print(f"overlap summary (published counts) -> {path}")
        return 0
    if args.session is None:
        raise ParseError("interactions needs a session directory or overlap_counts in --config")
    session = _load_session(args.session, need=("tracks.csv",))
    events = detect_interactions(session.tracks, params)
    if session.labels:
        events = tag_interactions(events, session.labels)
    path = _emit(out, "interactions.csv", dump_interaction_events(events))
    print(f"{len(events)} interaction(s) -> {path}")
    if config.composition:
        summary = overlap_summary(events, config.composition)
        _emit(out, "overlap_summary.csv", dump_overlap_matrix(summary))
    return 0


def _pick_stream(session: Session, config: RunConfig, subject: str, method: str):
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    found = [
        s for s in session.observations if s.subject_id == subject and s.method == method
    ]
    if len(found) > 1:
        observers = sorted(s.observer_id for s in found)
        raise ValueError(
            f"multiple {method} streams for {subject!r} (observers: {', '.join(observers)})"
        )
    if found:
        return found[0]
    if method in (DRONE_FOCAL, ML_AUTO):
        for stream in session.labels:
            if stream.track_id == subject:
                return label_stream_to_observation(
                    stream, session.meta, method, subject, config.clock_offset_s
                )
    raise ValueError(f"no {method} stream for subject {subject!r}")


def _apply_map(stream: ObservationStream, config: RunConfig, ethogram: Ethogram):
    if not config.label_map:
        return stream
    # The config mapping lists only renames; everything else (incl.
    # technical codes) maps to itself.
    present = {iv.code for iv in stream.intervals}
    total = {code: config.label_map.get(code, code) for code in present}
    return map_labels(stream, total)


def cmd_compare(args) -> int:
    config = load_config(args.config)
    ethogram = _load_ethogram(config)
    session = _load_session(args.session, need=("observations.csv",))
    a = _pick_stream(session, config, args.subject, args.method_a)
    b = _pick_stream(session, config, args.subject, args.method_b)
    if a.method == GROUND_SCAN:
        a = propagate_scan(a, config.params.scan_propagation_s)
    if b.method == GROUND_SCAN:
        b = propagate_scan(b, config.params.scan_propagation_s)
    a = _apply_map(a, config, ethogram)
    b = _apply_map(b, config, ethogram)
    a, b = visibility_filter(a, b, ethogram.technical_codes())
    delta = args.interval if args.interval is not None else config.params.downsample_interval_s
    pairs = align_pair(a, b, delta)
    codes = sorted(set(pairs.codes_a) | set(pairs.codes_b))
    matrix = confusion(pairs, codes)
    agreement = cohens_kappa(matrix)
    scores = class_metrics(matrix)

    out = Path(args.out)
    _emit(out, "paired.csv", dump_paired_series(pairs))
    _emit(out, "confusion.csv", _matrix_csv(matrix.codes, matrix.counts))
    _emit(
        out,
        "agreement.json",
        _json_text(
            {
                "subject": pairs.subject_id,
                "method_a": pairs.method_a,
                "method_b": pairs.method_b,
                "samples": len(pairs),
                "p_observed": agreement.p_observed,
                "p_expected": agreement.p_expected,
                "kappa": agreement.kappa,
            }
        ),
    )
    lines = ["code,precision,recall,f1"]
    for s in scores.per_class:
        lines.append(
            ",".join(
                [s.code]
                + ["" if v is None else repr(v) for v in (s.precision, s.recall, s.f1)]
            )
        )
    lines.append(
        ",".join(
            ["macro"]
            + [
                "" if v is None else repr(v)
                for v in (scores.macro_precision, scores.macro_recall, scores.macro_f1)
            ]
        )
    )
    _emit(out, "class_metrics.csv", "\n".join(lines) + "\n")
    print(f"kappa = {agreement.kappa:.4f} over {len(pairs)} samples -> {out}")
    return 0


def _read_table(path: Path) -> tuple[list[str], list[list[str]]]:
    import csv as _csv

    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ParseError(f"missing file: {path}") from None
    rows = list(_csv.reader(text.splitlines()))
    if not rows:
        raise ParseError(f"{path.name}: empty file")
    header, body = rows[0], rows[1:]
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ParseError(f"{path.name} row {i}: expected {len(header)} fields")
    return header, body


def cmd_regress(args) -> int:
    config = load_config(args.config)
    header, body = _read_table(Path(args.data))
    if args.response not in header:
        raise ParseError(f"{args.data}: no column {args.response!r}")
    factors = config.factors or [c for c in header if c != args.response]
    for f in factors:
        if f not in header:
            raise ParseError(f"{args.data}: no column {f!r}")
    y_idx = header.index(args.response)
    observations = []
    y = []
    for i, row in enumerate(body, start=2):
        try:
            y.append(float(row[y_idx]))
        except ValueError:
            raise ParseError(
                f"{args.data} row {i}: response {row[y_idx]!r} is not a number"
            ) from None
        observations.append({f: row[header.index(f)] for f in factors})
    references = dict(config.references)
    for f in factors:
        references.setdefault(f, min(obs[f] for obs in observations))
    references = {f: references[f] for f in factors}

    design = dummy_code(observations, references, config.interactions)
    result = ols_fit(design, y)

    lines = ["term,beta,se,t,p,ci_low,ci_high,stars"]
    for j, term in enumerate(result.columns):
        lines.append(
            f"{term},{result.beta[j]!r},{result.se[j]!r},{result.t_stats[j]!r},"
            f"{result.p_values[j]!r},{result.ci_low[j]!r},{result.ci_high[j]!r},"
            f"{significance_stars(result.p_values[j])}"
        )
    out = Path(args.out)
    path = _emit(out, "regression.csv", "\n".join(lines) + "\n")
    model = {
        "n_obs": result.n_obs,
        "r_squared": result.r_squared,
        "adj_r_squared": result.adj_r_squared,
        "f_squared": result.f_squared,
        "block_f_squared": {name: value for name, value in result.block_f_squared},
        "response": args.response,
        "references": references,
    }
    if config.interactions:
        reduced = ols_fit(dummy_code(observations, references), y)
        ftest = nested_f_test(result, reduced)
        model["interaction_test"] = {
            "f": ftest.f,
            "df1": ftest.df1,
            "df2": ftest.df2,
            "p": ftest.p,
        }
    _emit(out, "model.json", _json_text(model))
    print(f"R^2 = {result.r_squared:.4f} -> {path}")
    return 0


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    sim = config.simulation
    cfg = demo_config(args.seed)
    if sim:
        base = dataclasses.asdict(cfg)
        base.update(sim)
        base["seed"] = args.seed
        if "zones" in base:
            base["zones"] = tuple(OcclusionZone(*z) for z in base["zones"])
        for key in ("codes", "speeds_mps"):
            base[key] = tuple(base[key])
        base["transition"] = tuple(tuple(row) for row in base["transition"])
        cfg = type(cfg)(**base)
    world = simulate(cfg)
    written = export_world(world, args.out)
    for path in written:
        print(path)
    return 0


def cmd_report(args) -> int:
    config = load_config(args.config)
    ethogram = _load_ethogram(config)
    session = _load_session(args.session)
    if not session.labels and not session.observations:
        raise ValueError("session has neither labels.csv nor observations.csv")
    out = Path(args.out)
    rows = _budget_rows(session, ethogram)
    lines = ["source,subject,code,seconds,proportion"]
    lines += [f"{s},{subj},{c},{sec!r},{prop!r}" for s, subj, c, sec, prop in rows]
    _emit(out, "timebudget.csv", "\n".join(lines) + "\n")

    streams, codes = _transition_inputs(session, ethogram)
    matrix = transition_matrix(
        streams, config.params.downsample_interval_s, codes, ethogram, session.meta
    )
    _emit(out, "transitions.csv", _matrix_csv(matrix.codes, matrix.probabilities))
    _emit(out, "transitions.svg", transition_heatmap_svg(matrix, "Transition probabilities"))

    if session.labels:
        lanes = [(s.track_id, s) for s in sorted(session.labels, key=lambda s: s.track_id)]
    else:
        lanes = [
            (f"{s.subject_id} ({s.method})", s)
            for s in sorted(session.observations, key=lambda s: (s.subject_id, s.method))
            if not s.is_instantaneous()
        ]
    _emit(out, "gantt.svg", gantt_svg(lanes, title="Behavior timeline"))
    print(f"report -> {out}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ethokit",
        description="Behavioral analytics for tracked animal video and field observations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, out_required=True):
        sp.add_argument("--config", help="JSON run-config file")
        if out_required:
            sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("validate", help="check a session directory against the data contracts")
    sp.add_argument("session")
    sp.add_argument("--config")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("miniscenes", help="emit the mini-scene crop-window manifest")
    sp.add_argument("session")
    sp.add_argument("--min-frames", type=int, help="minimum mini-scene length in frames")
    common(sp)
    sp.set_defaults(func=cmd_miniscenes)

    sp = sub.add_parser("timebudget", help="per-subject visible-time budgets")
    sp.add_argument("session")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    common(sp)
    sp.set_defaults(func=cmd_timebudget)

    sp = sub.add_parser("transitions", help="downsampled behavior transition matrix")
    sp.add_argument("session")
    sp.add_argument("--interval", type=float, help="sampling interval in seconds")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    common(sp)
    sp.set_defaults(func=cmd_transitions)

    sp = sub.add_parser("interactions", help="detect and normalize pairwise interactions")
    sp.add_argument("session", nargs="?")
    sp.add_argument("--threshold", type=float, help="overlap ratio threshold (strict >)")
    sp.add_argument("--min-frames", type=int, help="minimum run length in frames")
    common(sp)
    sp.set_defaults(func=cmd_interactions)

    sp = sub.add_parser("compare", help="agreement between two methods on one subject")
    sp.add_argument("session")
    sp.add_argument("--subject", required=True)
    sp.add_argument("--method-a", required=True, dest="method_a")
    sp.add_argument("--method-b", required=True, dest="method_b")
    sp.add_argument("--interval", type=float, help="alignment bin width in seconds")
    common(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("regress", help="OLS with dummy-coded factors on a CSV table")
    sp.add_argument("data")
    sp.add_argument("--response", required=True, help="numeric response column")
    common(sp)
    sp.set_defaults(func=cmd_regress)

    sp = sub.add_parser("simulate", help="generate a synthetic session")
    sp.add_argument("--seed", type=int, required=True, help="simulation seed (required)")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("report", help="render budgets, matrices and SVG figures")
    sp.add_argument("session")
    common(sp)
    sp.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
