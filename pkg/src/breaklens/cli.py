"""Command-line entry point: ``breaklens {detect, explain, eval, rag}``.

Settings resolve as flags > ``--config`` JSON file > ``BREAKLENS_*``
environment variables > built-in defaults. Exit status is 0 when the
requested pipeline completed; explanation failures only make it non-zero
when every explanation failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from breaklens.autoselect import profile_data, select_method
from breaklens.detectors import METHOD_IDS, DetectorConfig, run_method
from breaklens.ensemble import EnsembleConfig, ensemble_detect, run_detectors
from breaklens.report import BreakRecord, records_from, render_breaks_md, render_explanations_md, render_svg
from breaklens.timeseries import load_csv

log = logging.getLogger("breaklens")

DEFAULTS = {
    "value_col": "value",
    "date_col": "date",
    "method": "ensemble",
    "v_min": 5,
    "explain": "off",
    "rag_dir": None,
    "seed": 0,
    "tol": 3,
    "out": "breaklens-out",
    "description": None,
    "cases": None,
}
CASTS = {"v_min": int, "seed": int, "tol": int}


class CliError(Exception):
    pass


def _resolve(args: argparse.Namespace, config: dict, name: str):
    val = getattr(args, name, None)
    if val is not None:
        return val
    if name in config:
        return config[name]
    env = os.environ.get("BREAKLENS_" + name.upper())
    if env is not None:
        return CASTS.get(name, str)(env)
    return DEFAULTS.get(name)


def _settings(args: argparse.Namespace) -> dict:
    config = {}
    if getattr(args, "config", None):
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from exc
        config = {k.replace("-", "_"): v for k, v in config.items()}
    return {name: _resolve(args, config, name) for name in DEFAULTS}


# ---------------------------------------------------------------------------
# detect / explain
# ---------------------------------------------------------------------------


def _detect(ts, method: str, v_min: int, seed: int):
    """Run one strategy; returns (breaks, meta extras, scores, profile, per_method)."""
    if method == "ensemble":
        overrides = {m: DetectorConfig(seed=seed) for m in METHOD_IDS}
        cfg = EnsembleConfig(v_min=v_min, overrides=overrides)
        pooled, per_method = run_detectors(ts, cfg)
        if all(isinstance(v, str) for v in per_method.values()):
            raise CliError(f"no detector could run on n={ts.n}")
        return ensemble_detect(ts, cfg, detections=pooled), {}, None, None, per_method
    if method == "auto":
        profile = profile_data(ts)
        chosen, scores = select_method(ts, profile)
        return run_method(chosen, ts, DetectorConfig(seed=seed)), {"selected_method": chosen}, scores, profile, None
    if method in METHOD_IDS:
        return run_method(method, ts, DetectorConfig(seed=seed)), {}, None, None, None
    raise CliError(f"unknown method {method!r}; use auto, ensemble or one of {', '.join(METHOD_IDS)}")


def _has_column(path, name: str) -> bool:
    import csv

    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            return name in (next(csv.reader(fh), None) or [])
    except OSError:
        return True  # let the loader report the problem


def _provider(stub: bool):
    from breaklens.explain import EchoProvider, HttpChatProvider, ProviderError

    if stub:
        return EchoProvider()
    try:
        return HttpChatProvider.from_env()
    except ProviderError as exc:
        raise CliError(f"{exc} (or pass --stub-provider)") from exc


def _run_pipeline(args, mode_default: str) -> int:
    s = _settings(args)
    mode = args.explain or (s["explain"] if s["explain"] != "off" else mode_default)
    if mode not in ("off", "standard", "rag"):
        raise CliError(f"--explain must be off, standard or rag, not {mode!r}")
    out = Path(s["out"])

    source = getattr(args, "from_results", None)
    if source:
        try:
            prior = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read {source}: {exc}") from exc
        s.update({k: prior[k] for k in ("input", "value_col", "date_col", "method", "v_min", "seed") if k in prior})
        inp = prior.get("input")
    else:
        inp = args.input or s.get("input")
    if not inp:
        raise CliError("--input is required")
    date_col = s["date_col"] or None
    try:
        if date_col == DEFAULTS["date_col"] and args.date_col is None and not _has_column(inp, date_col):
            date_col = None  # undated file and no explicit request for dates
        ts = load_csv(inp, s["value_col"], date_col)
    except Exception as exc:
        raise CliError(str(exc)) from exc

    provider = retriever = None
    if mode != "off":
        provider = _provider(args.stub_provider)
        if mode == "rag":
            from breaklens.rag import VectorStore

            if not s["rag_dir"] or not Path(s["rag_dir"]).is_dir():
                raise CliError("rag mode needs an existing --rag-dir (build it with 'breaklens rag add')")
            retriever = VectorStore(s["rag_dir"])
            if retriever.stats()["total_chunks"] == 0:
                raise CliError(f"document store {s['rag_dir']} is empty")

    scores = profile = per_method = None
    extra: dict = {}
    if source:
        records = [BreakRecord(b["index"], b["date"], b["confidence"], b["magnitude"] if b["magnitude"] is not None else float("nan"),
                               b["votes"], tuple(b["methods"]), b["location"] if b["location"] is not None else float("nan"))
                   for b in prior["breaks"]]
        extra = {k: prior[k] for k in ("selected_method",) if k in prior}
    else:
        try:
            breaks, extra, scores, profile, per_method = _detect(ts, s["method"], s["v_min"], s["seed"])
        except CliError:
            raise
        except Exception as exc:  # any detector error becomes a one-line diagnostic
            raise CliError(f"detection failed: {exc}") from exc
        records = records_from(breaks, ts)

    meta = {"input": str(inp), "series": ts.name, "n": ts.n, "method": s["method"], "v_min": s["v_min"] if s["method"] == "ensemble" else None,
            "seed": s["seed"], **extra}
    out.mkdir(parents=True, exist_ok=True)
    md = render_breaks_md(records, meta, scores, profile, per_method)
    (out / "breaks.svg").write_text(render_svg(ts, records))
    result = {**meta, "value_col": s["value_col"], "date_col": date_col, "breaks": [r.as_dict() for r in records]}
    if scores is not None:
        result["scores"] = {sc.method_id: list(sc.scores) for sc in scores}
        result["profile"] = profile.as_dict()

    status = 0
    if mode != "off":
        from breaklens.explain import explain_breaks

        description = s["description"] or ts.name
        explained = explain_breaks(records, ts, description, provider, mode, retriever)
        md += "\n" + render_explanations_md(explained)
        result["explanations"] = [
            {"index": e.brk.index, "mode": e.mode, "explanation": e.explanation, "error": e.error,
             "retrieved": list(e.retrieved_ids)} for e in explained
        ]
        failed = [e for e in explained if not e.ok]
        for e in failed:
            print(f"warning: explanation for break at index {e.brk.index} failed: {e.error}", file=sys.stderr)
        if explained and len(failed) == len(explained):
            status = 1
    (out / "breaks.md").write_text(md)
    (out / "results.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    print(md.split("```")[1].strip("\n"))
    print(f"\nreport written to {out / 'breaks.md'}")
    return status


def cmd_detect(args) -> int:
    return _run_pipeline(args, "off")


def cmd_explain(args) -> int:
    return _run_pipeline(args, "standard")


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def cmd_eval(args) -> int:
    from breaklens.evaluation import STRATEGIES, format_cases, format_table, load_cases, run_benchmark

    s = _settings(args)
    methods = args.method or ["auto", "ensemble"]
    for m in methods:
        if m not in STRATEGIES:
            raise CliError(f"unknown strategy {m!r}")
    try:
        cases = load_cases(s["cases"])
    except (FileNotFoundError, ValueError, OSError) as exc:
        raise CliError(str(exc)) from exc
    results = [run_benchmark(cases, m, s["tol"], s["v_min"], s["seed"]) for m in methods]
    table = format_table(results)
    body = [f"# Detection benchmark ({len(cases)} cases, tolerance {s['tol']})", "", table]
    for r in results:
        body += [f"## {r.strategy}", "", format_cases(r)]
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "eval.md").write_text("\n".join(body))
    (out / "results.json").write_text(json.dumps([r.as_dict() for r in results], indent=2) + "\n")
    print(table, end="")
    return 0


# ---------------------------------------------------------------------------
# rag
# ---------------------------------------------------------------------------


def cmd_rag(args) -> int:
    from breaklens.rag import DocumentError, VectorStore

    s = _settings(args)
    if not s["rag_dir"]:
        raise CliError("--rag-dir is required")
    store = VectorStore(s["rag_dir"])
    if args.rag_cmd == "add":
        missing = [p for p in args.paths if not Path(p).exists()]
        if missing:
            raise CliError(f"no such file or directory: {', '.join(missing)}")
        try:
            rep = store.add_documents(list(args.paths))
        except DocumentError as exc:
            raise CliError(str(exc)) from exc
        print(f"Added: {len(rep.added)}  Replaced: {len(rep.replaced)}  Unchanged: {len(rep.skipped)}  New chunks: {rep.chunks_added}")
    elif args.rag_cmd == "stats":
        st = store.stats()
        print(f"Documents: {st['total_documents']}")
        print(f"Chunks: {st['total_chunks']}")
        print(f"Store size: {st['store_bytes']} bytes")
    elif args.rag_cmd == "delete-range":
        try:
            n = store.delete_by_date(args.start, args.end)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
        print(f"Removed: {n}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="breaklens", description="Ensemble structural break detection and explanation.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with default settings")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--v-min", dest="v_min", type=int, help="minimum distinct votes for an ensemble break")

    for name, fn, hlp in (("detect", cmd_detect, "detect breaks and write a report"),
                          ("explain", cmd_explain, "detect (or reuse results) and explain each break")):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        sp.add_argument("--input", help="CSV file with a header row")
        sp.add_argument("--value-col", dest="value_col")
        sp.add_argument("--date-col", dest="date_col", help="date column ('' for none)")
        sp.add_argument("--method", help="auto, ensemble or a method id")
        sp.add_argument("--explain", choices=("off", "standard", "rag"))
        sp.add_argument("--rag-dir", dest="rag_dir")
        sp.add_argument("--description", help="what the series measures, used in prompts and retrieval")
        sp.add_argument("--stub-provider", action="store_true", help="use the offline echo provider")
        if name == "explain":
            sp.add_argument("--from", dest="from_results", help="results.json from an earlier detect run")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("eval", help="score strategies on benchmark cases")
    common(sp)
    sp.add_argument("--cases", help="directory of <case>/{data.csv,meta.json} (default: bundled cases)")
    sp.add_argument("--method", action="append", help="strategy to evaluate; repeatable (default: auto and ensemble)")
    sp.add_argument("--tol", type=int)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("rag", help="manage the document store")
    sp.add_argument("--config")
    sp.add_argument("--rag-dir", dest="rag_dir")
    rsub = sp.add_subparsers(dest="rag_cmd", required=True)
    a = rsub.add_parser("add", help="ingest files or directories")
    a.add_argument("paths", nargs="+")
    rsub.add_parser("stats", help="print document and chunk counts")
    d = rsub.add_parser("delete-range", help="remove documents dated within [START, END]")
    d.add_argument("start")
    d.add_argument("end")
    sp.set_defaults(func=cmd_rag)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
