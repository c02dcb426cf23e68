"""Command-line pipeline: suggest-schema, extract, infuse, evaluate,
probe-litm, compare.

Configuration comes from built-in defaults, overridden by a JSON config
file (--config), overridden in turn by command-line flags. All randomness
flows from the single configured seed, and every artifact embeds the tool
version, the effective-config hash, the seed, and (where applicable) the
infusion fingerprint.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__, artifacts
from .chunking import split_document
from .errors import FingerprintMismatch, NeedlegaugeError
from .extraction import ExtractionConfig, ExtractionRun, extract_pieces
from .forge import InfusedDocument, infuse, load_needles, save_needles, strip_needles
from .forge import annotate_needle, generate_needles
from .gateway import DirectoryBackend, Gateway, GatewayConfig, HttpBackend
from .litm import litm_csv, probe
from .matching import (
    aggregate_minea,
    compare_models,
    match_k,
    match_llm,
    match_n,
    match_ns,
    minea,
)
from .metrics import ScoreVector, score_vector
from .schema import load_schema, suggest_schema

log = logging.getLogger(__name__)

CONFIG_DEFAULTS = {
    "endpoint": "https://api.openai.com/v1",
    "model": "gpt-4o",
    "temperature": 0.0,
    "max_output_tokens": 4095,
    "context_window_tokens": 128000,
    "max_attempts": 5,
    "iterations_per_piece": 3,
    "max_piece_tokens": 3000,
    "history_compaction_fraction": 0.25,
    "prompts": "default",
    "redundancy_thresholds": [0.1, 0.2],
    "keyed_thresholds": [[0.5, "name"]],
    "criteria": ["n", "ns", "k0.5", "k0.6", "k0.7", "llm"],
    "fill_range": [0.10, 0.30],
    "seed": 0,
    "model_label": "",
    "replies_dir": None,
}

FLAG_KEYS = {
    "endpoint": "endpoint",
    "model": "model",
    "seed": "seed",
    "iterations": "iterations_per_piece",
    "replies_dir": "replies_dir",
    "label": "model_label",
    "max_piece_tokens": "max_piece_tokens",
}


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration after defaults, config file, and flags."""

    endpoint: str
    model: str
    temperature: float
    max_output_tokens: int
    context_window_tokens: int
    max_attempts: int
    iterations_per_piece: int
    max_piece_tokens: int
    history_compaction_fraction: float
    prompts: str
    redundancy_thresholds: tuple[float, ...]
    keyed_thresholds: tuple[tuple[float, str], ...]
    criteria: tuple[str, ...]
    fill_range: tuple[float, float]
    seed: int
    model_label: str
    replies_dir: str | None

    @property
    def label(self) -> str:
        return self.model_label or self.model

    def as_dict(self) -> dict:
        payload = dataclasses.asdict(self)
        payload["redundancy_thresholds"] = list(self.redundancy_thresholds)
        payload["keyed_thresholds"] = [[t, k] for t, k in self.keyed_thresholds]
        payload["criteria"] = list(self.criteria)
        payload["fill_range"] = list(self.fill_range)
        return payload

    @property
    def config_hash(self) -> str:
        return artifacts.config_hash(self.as_dict())

    def gateway_config(self) -> GatewayConfig:
        return GatewayConfig(
            endpoint=self.endpoint,
            model=self.model,
            temperature=self.temperature,
            max_output_tokens=self.max_output_tokens,
            context_window_tokens=self.context_window_tokens,
            max_attempts=self.max_attempts,
        )

    def extraction_config(self, schema) -> ExtractionConfig:
        return ExtractionConfig(
            schema=schema,
            iterations_per_piece=self.iterations_per_piece,
            max_piece_tokens=self.max_piece_tokens,
            context_window_tokens=self.context_window_tokens,
            prompts=self.prompts,
            history_compaction_fraction=self.history_compaction_fraction,
        )

    def build_gateway(self, stem: str = "", suffix: str = "") -> Gateway:
        """One gateway per document so mock replies and transcripts stay
        isolated and document-level parallelism is safe."""
        if self.replies_dir:
            base = Path(self.replies_dir)
            for candidate in (base / f"{stem}{suffix}", base / stem, base):
                if candidate.is_dir():
                    return Gateway(DirectoryBackend(candidate), self.gateway_config())
            raise NeedlegaugeError(f"no replies directory found under {base}")
        return Gateway(HttpBackend(), self.gateway_config())


def load_run_config(args: argparse.Namespace) -> RunConfig:
    effective = dict(CONFIG_DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        loaded = artifacts.read_json(config_path)
        unknown = sorted(set(loaded) - set(CONFIG_DEFAULTS))
        if unknown:
            raise NeedlegaugeError(f"unknown config keys: {', '.join(unknown)}")
        effective.update(loaded)
    for flag, key in FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            effective[key] = value
    return RunConfig(
        endpoint=effective["endpoint"],
        model=effective["model"],
        temperature=float(effective["temperature"]),
        max_output_tokens=int(effective["max_output_tokens"]),
        context_window_tokens=int(effective["context_window_tokens"]),
        max_attempts=int(effective["max_attempts"]),
        iterations_per_piece=int(effective["iterations_per_piece"]),
        max_piece_tokens=int(effective["max_piece_tokens"]),
        history_compaction_fraction=float(effective["history_compaction_fraction"]),
        prompts=effective["prompts"],
        redundancy_thresholds=tuple(float(t) for t in effective["redundancy_thresholds"]),
        keyed_thresholds=tuple(
            (float(t), str(k)) for t, k in effective["keyed_thresholds"]
        ),
        criteria=tuple(effective["criteria"]),
        fill_range=(float(effective["fill_range"][0]), float(effective["fill_range"][1])),
        seed=int(effective["seed"]),
        model_label=effective["model_label"],
        replies_dir=effective["replies_dir"],
    )


def _read_document(path: Path) -> tuple[str, str]:
    """Return (text, infusion_fingerprint). Accepts plain text/markdown or
    an infused-document artifact, in which case the enriched text is used."""
    if path.suffix == ".json":
        payload = artifacts.read_json(path)
        if "enriched_text" in payload:
            infused = InfusedDocument.from_json(payload)
            return infused.enriched_text, infused.fingerprint
        raise NeedlegaugeError(f"{path} is JSON but not an infused document")
    return path.read_text(encoding="utf-8"), ""


def _stem(path: Path) -> str:
    stem = path.stem
    for marker in (".infused", ".run"):
        if stem.endswith(marker):
            stem = stem[: -len(marker)]
    return stem


def _for_each_document(paths, jobs: int, work) -> int:
    """Run `work(path)` per document, isolating failures; 0 iff all passed."""
    failures = 0

    def safe(path: Path) -> bool:
        try:
            work(path)
            return True
        except (NeedlegaugeError, OSError, ValueError, KeyError) as exc:
            log.error("%s: %s", path, exc)
            return False

    paths = [Path(p) for p in paths]
    if jobs > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(safe, paths))
        failures = results.count(False)
    else:
        failures = sum(0 if safe(p) else 1 for p in paths)
    return 0 if failures == 0 else 1


# --- subcommands -------------------------------------------------------------


def cmd_suggest_schema(args: argparse.Namespace) -> int:
    rc = load_run_config(args)
    out_dir = Path(args.out)
    meta = artifacts.build_meta(rc.config_hash, rc.seed)

    def work(path: Path) -> None:
        text, _ = _read_document(path)
        gateway = rc.build_gateway(_stem(path))
        suggestions = suggest_schema(gateway, text)
        artifacts.write_json(
            out_dir / f"{_stem(path)}.suggestions.json",
            {
                "meta": meta,
                "document": path.name,
                "suggestions": [
                    {"type": s.type_name, "relevance": s.relevance, "reasoning": s.reasoning}
                    for s in suggestions
                ],
            },
        )

    return _for_each_document(args.documents, args.jobs, work)


def _parse_int_list(raw: str) -> list[int]:
    return [int(part) for part in raw.split(",") if part.strip() != ""]


def _extract_one(rc: RunConfig, schema, text: str, stem: str, suffix: str = ""):
    gateway = rc.build_gateway(stem, suffix)
    pieces = split_document(text, rc.max_piece_tokens)
    run = extract_pieces(gateway, pieces, rc.extraction_config(schema))
    return gateway, pieces, run


def cmd_extract(args: argparse.Namespace) -> int:
    rc = load_run_config(args)
    schema = load_schema(args.schema)
    out_dir = Path(args.out)

    def work(path: Path) -> None:
        text, fingerprint = _read_document(path)
        stem = _stem(path)
        meta = artifacts.build_meta(rc.config_hash, rc.seed, fingerprint)
        if args.study is not None:
            _iteration_study(rc, schema, text, stem, _parse_int_list(args.study), out_dir, meta)
            return
        gateway, pieces, run = _extract_one(rc, schema, text, stem)
        payload = {
            "meta": meta,
            "document": path.name,
            "pieces": len(pieces),
            "calls": gateway.call_count,
            **run.to_json(),
        }
        artifacts.write_json(out_dir / f"{stem}.run.json", payload)
        gateway.write_transcript(out_dir / f"{stem}.transcript.ndjson")

    return _for_each_document(args.documents, args.jobs, work)


def _iteration_study(rc, schema, text, stem, iteration_counts, out_dir, meta) -> None:
    """Re-extract at several iteration counts and emit the score-per-column
    CSV (rows = scores, columns = iteration counts)."""
    if not iteration_counts:
        raise NeedlegaugeError("--study needs at least one iteration count")
    columns: dict[int, dict] = {}
    pieces = split_document(text, rc.max_piece_tokens)
    for count in iteration_counts:
        study_rc = dataclasses.replace(rc, iterations_per_piece=count)
        gateway = study_rc.build_gateway(stem, f"-iter{count}")
        run = extract_pieces(gateway, pieces, study_rc.extraction_config(schema))
        vector = score_vector(
            text, pieces, run, schema,
            redundancy_thresholds=rc.redundancy_thresholds,
            keyed_thresholds=rc.keyed_thresholds,
        )
        columns[count] = vector.to_flat_json()

    names = ScoreVector.row_names(rc.redundancy_thresholds, rc.keyed_thresholds)
    lines = [artifacts.meta_comment(meta)]
    lines.append("score," + ",".join(str(c) for c in iteration_counts) + "\n")
    for name in names:
        cells = [f"{columns[c][name]:.4f}" for c in iteration_counts]
        lines.append(f"{name}," + ",".join(cells) + "\n")
    artifacts.write_text(out_dir / f"{stem}.iteration_study.csv", "".join(lines))


def _parse_generate_spec(raw: str) -> list[tuple[str, int]]:
    spec = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        type_name, _, count = part.partition("=")
        if not count.isdigit() or int(count) < 1:
            raise NeedlegaugeError(f"bad --generate entry {part!r}; expected Type=N")
        spec.append((type_name.strip(), int(count)))
    if not spec:
        raise NeedlegaugeError("--generate spec is empty")
    return spec


def cmd_infuse(args: argparse.Namespace) -> int:
    rc = load_run_config(args)
    schema = load_schema(args.schema) if args.schema else None
    out_dir = Path(args.out)
    if bool(args.needles) == bool(args.generate):
        raise NeedlegaugeError("exactly one of --needles and --generate is required")

    def work(path: Path) -> None:
        text, _ = _read_document(path)
        stem = _stem(path)
        if args.needles:
            needles = load_needles(args.needles)
        else:
            gateway = rc.build_gateway(stem)
            needles = []
            for type_name, count in _parse_generate_spec(args.generate):
                for raw in generate_needles(gateway, text, type_name, count):
                    needles.append(annotate_needle(gateway, raw))
        if schema is not None:
            known = set(schema.type_names())
            stray = sorted({n.entity_type for n in needles} - known)
            if stray:
                raise NeedlegaugeError(f"needle types not in schema: {', '.join(stray)}")
        infused = infuse(text, needles, fill_range=rc.fill_range, seed=rc.seed)
        meta = artifacts.build_meta(rc.config_hash, rc.seed, infused.fingerprint)
        artifacts.write_json(
            out_dir / f"{stem}.infused.json", {"meta": meta, **infused.to_json()}
        )
        save_needles(needles, out_dir / f"{stem}.needles.json")

    return _for_each_document(args.documents, args.jobs, work)


def _criterion_results(rc: RunConfig, needles, run, stem: str):
    results = []
    llm_gateway = None
    for needle in needles:
        for criterion in rc.criteria:
            if criterion == "n":
                results.append(match_n(needle, run.entities))
            elif criterion == "ns":
                results.append(match_ns(needle, run))
            elif criterion.startswith("k"):
                results.append(match_k(needle, run.entities, float(criterion[1:])))
            elif criterion == "llm":
                if llm_gateway is None:
                    llm_gateway = rc.build_gateway(stem, "-verdicts")
                results.append(match_llm(llm_gateway, needle, run.entities))
            else:
                raise NeedlegaugeError(f"unknown criterion {criterion!r}")
    return results


def _load_run_artifact(path: Path) -> tuple[ExtractionRun, dict]:
    payload = artifacts.read_json(path)
    return ExtractionRun.from_json(payload), payload.get("meta", {})


def cmd_evaluate(args: argparse.Namespace) -> int:
    rc = load_run_config(args)
    schema = load_schema(args.schema)
    out_dir = Path(args.out)
    stem = _stem(Path(args.run))

    try:
        infused = InfusedDocument.from_json(artifacts.read_json(args.infused))
        needles = load_needles(args.needles)
        run, run_meta = _load_run_artifact(Path(args.run))
        run_fp = run_meta.get("infusion_fingerprint", "")
        if run_fp != infused.fingerprint:
            raise FingerprintMismatch(
                f"run was produced from fingerprint {run_fp or '(none)'}, "
                f"infusion manifest has {infused.fingerprint}"
            )

        report = minea(
            _criterion_results(rc, needles, run, stem),
            needles,
            criteria=rc.criteria,
            model_label=rc.label,
            fingerprint=infused.fingerprint,
        )
        meta = artifacts.build_meta(rc.config_hash, rc.seed, infused.fingerprint)
        artifacts.write_json(out_dir / f"{stem}.minea.json", {"meta": meta, **report.to_json()})
        if args.csv:
            lines = [artifacts.meta_comment(meta), "type,criterion,ratio,is_max\n"]
            for row in report.to_csv_rows():
                lines.append(
                    f"{row['type']},{row['criterion']},{row['ratio']:.6f},"
                    f"{'1' if row['is_max'] else '0'}\n"
                )
            artifacts.write_text(out_dir / f"{stem}.minea.csv", "".join(lines))

        scores: dict[str, object] = {
            "with_needles": _scores_for(rc, infused.enriched_text, run, schema)
        }
        if args.baseline_run:
            baseline, _ = _load_run_artifact(Path(args.baseline_run))
            original = strip_needles(infused)
            scores["without_needles"] = _scores_for(rc, original, baseline, schema)
        artifacts.write_json(out_dir / f"{stem}.scores.json", {"meta": meta, **scores})
    except (NeedlegaugeError, OSError, ValueError, KeyError) as exc:
        log.error("evaluate: %s", exc)
        return 1
    return 0


def _scores_for(rc: RunConfig, text: str, run: ExtractionRun, schema) -> dict:
    pieces = split_document(text, rc.max_piece_tokens)
    vector = score_vector(
        text, pieces, run, schema,
        redundancy_thresholds=rc.redundancy_thresholds,
        keyed_thresholds=rc.keyed_thresholds,
    )
    return vector.to_flat_json()


def cmd_probe_litm(args: argparse.Namespace) -> int:
    rc = load_run_config(args)
    schema = load_schema(args.schema)
    positions = _parse_int_list(args.positions) if args.positions else None
    results = []
    failed = False
    for raw in args.documents:
        path = Path(raw)
        try:
            text, _ = _read_document(path)
            gateway = rc.build_gateway(_stem(path))
            results.append(
                probe(
                    gateway,
                    text,
                    args.pieces,
                    rc.extraction_config(schema),
                    label=_stem(path),
                    positions=positions,
                )
            )
        except (NeedlegaugeError, OSError, ValueError, KeyError) as exc:
            log.error("%s: %s", path, exc)
            failed = True
    if results:
        meta = artifacts.build_meta(rc.config_hash, rc.seed)
        artifacts.write_text(
            args.out, artifacts.meta_comment(meta) + litm_csv(results)
        )
    return 1 if failed or not results else 0


def cmd_compare(args: argparse.Namespace) -> int:
    rc = load_run_config(args)
    try:
        reports = []
        for raw in args.reports:
            payload = artifacts.read_json(raw)
            reports.append(
                aggregate_minea(
                    {t: row["ratios"] for t, row in payload["types"].items()},
                    {t: row["count"] for t, row in payload["types"].items()},
                    model_label=payload.get("model", Path(raw).stem),
                    fingerprint=payload.get("fingerprint", ""),
                )
            )
        ranking = compare_models(reports)
    except (NeedlegaugeError, OSError, ValueError, KeyError) as exc:
        log.error("compare: %s", exc)
        return 1
    meta = artifacts.build_meta(rc.config_hash, rc.seed, reports[0].fingerprint)
    artifacts.write_json(args.out, {"meta": meta, "ranking": ranking})
    for row in ranking:
        print(f"{row['model']}\t{row['minea']:.6f}")
    return 0


# --- argument parsing ---------------------------------------------------------


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--endpoint", help="OpenAI-compatible API base URL")
    common.add_argument("--model", help="model identifier sent to the endpoint")
    common.add_argument("--label", help="model label used in reports")
    common.add_argument("--seed", type=int, help="seed for all randomness")
    common.add_argument("--iterations", type=int, help="extraction iterations per piece")
    common.add_argument("--max-piece-tokens", type=int, dest="max_piece_tokens")
    common.add_argument(
        "--replies-dir",
        dest="replies_dir",
        help="directory of canned replies; replaces the HTTP backend",
    )
    common.add_argument("--jobs", type=int, default=1, help="document-level parallelism")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="needlegauge",
        description="Needle-infusion evaluation for LLM information extraction.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    p = sub.add_parser("suggest-schema", parents=[common], help="propose entity types")
    p.add_argument("documents", nargs="+")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_suggest_schema)

    p = sub.add_parser("extract", parents=[common], help="run schema-guided extraction")
    p.add_argument("documents", nargs="+")
    p.add_argument("--schema", required=True)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--study", help="comma-separated iteration counts; emit score CSV")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("infuse", parents=[common], help="plant needles into documents")
    p.add_argument("documents", nargs="+")
    p.add_argument("--schema", help="validate needle types against this schema")
    p.add_argument("--needles", help="existing needle file to plant")
    p.add_argument("--generate", help="Type=N[,Type=N...] to generate via the LLM")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_infuse)

    p = sub.add_parser("evaluate", parents=[common], help="score a run against needles")
    p.add_argument("--run", required=True, help="extraction run over the infused text")
    p.add_argument("--infused", required=True, help="infused-document artifact")
    p.add_argument("--needles", required=True, help="needle manifest")
    p.add_argument("--schema", required=True)
    p.add_argument("--baseline-run", dest="baseline_run", help="run over the original text")
    p.add_argument("--csv", action="store_true", help="also emit the per-criterion CSV")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("probe-litm", parents=[common], help="lost-in-the-middle probe")
    p.add_argument("documents", nargs="+")
    p.add_argument("--schema", required=True)
    p.add_argument("--pieces", type=int, default=16)
    p.add_argument("--positions", help="comma-separated subset of positions to probe")
    p.add_argument("--out", default="litm.csv", help="output CSV path")
    p.set_defaults(func=cmd_probe_litm)

    p = sub.add_parser("compare", parents=[common], help="rank MINEA reports")
    p.add_argument("reports", nargs="+", help="two or more MINEA report files")
    p.add_argument("--out", default="model_comparison.json")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NeedlegaugeError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
