"""Recall@k, CompleteRecall@k and per-category report tables.

All accumulation is done with :class:`fractions.Fraction`; percentages are
rounded to two decimals only when rendering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import ReportError
from .providers import QUERY_CLASSES

KS = (3, 5, 10)
METHOD_ORDER = ("lexical", "semantic", "hybrid", "eeg")
METHOD_LABELS = {"lexical": "Lexical", "semantic": "Semantic", "hybrid": "Hybrid", "eeg": "Graph"}
# Table rows are listed alphabetically, with the pooled row last.
CATEGORY_ORDER = tuple(sorted(QUERY_CLASSES))
MICRO = "micro-average"


def recall_at_k(gold, ranked, k: int) -> Fraction:
    gold = set(gold)
    if not gold:
        raise ValueError("gold tool set is empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    return Fraction(len(gold & set(ranked[:k])), len(gold))


@dataclass(frozen=True)
class EvalCase:
    query_id: str
    category: str
    gold: frozenset[str]
    rankings: dict[str, list[str]] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if not self.gold:
            raise ValueError(f"case {self.query_id}: gold set is empty")


def complete_recall(cases: list[EvalCase], method: str, k: int) -> Fraction:
    """Share of cases whose whole gold set is inside the top-k."""
    if not cases:
        raise ValueError("complete_recall() needs at least one case")
    hits = sum(1 for c in cases if recall_at_k(c.gold, c.rankings.get(method, []), k) == 1)
    return Fraction(hits, len(cases))


@dataclass
class EvalReport:
    methods: tuple[str, ...]
    ks: tuple[int, ...]
    cells: dict[str, dict[tuple[str, int], Fraction | None]]
    counts: dict[str, int]
    metadata: dict = field(default_factory=dict)

    @property
    def rows(self) -> list[str]:
        return list(CATEGORY_ORDER) + [MICRO]

    def cell(self, row: str, method: str, k: int) -> Fraction | None:
        return self.cells[row][(method, k)]

    def monotonicity_violations(self) -> list[str]:
        bad = []
        for row in self.rows:
            for m in self.methods:
                vals = [self.cells[row][(m, k)] for k in self.ks]
                if None in vals:
                    continue
                for (k1, a), (k2, b) in zip(zip(self.ks, vals), zip(self.ks[1:], vals[1:])):
                    if a > b:
                        bad.append(f"{row}/{m}: @{k1}={a} > @{k2}={b}")
        return bad

    def to_csv(self) -> str:
        header = ["category"] + [f"{m}@{k}" for m in self.methods for k in self.ks]
        lines = [",".join(header)]
        for row in self.rows:
            vals = [_pct(self.cells[row][(m, k)]) for m in self.methods for k in self.ks]
            lines.append(",".join([row] + vals))
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        header = ["Query Category"] + [f"{METHOD_LABELS.get(m, m)} @{k}" for m in self.methods for k in self.ks]
        body = []
        for row in self.rows:
            label = "Micro-Average" if row == MICRO else row
            vals = [_pct(self.cells[row][(m, k)]) or "n/a" for m in self.methods for k in self.ks]
            body.append([label] + vals)
        widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]

        def fmt(r):
            cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
            return "| " + " | ".join(cells) + " |"

        sep = "|" + "|".join(
            "-" * (w + 2) if i == 0 else "-" * (w + 1) + ":" for i, w in enumerate(widths)
        ) + "|"
        lines = ["# CompleteRecall@k (%)", ""]
        for key in sorted(self.metadata):
            lines.append(f"- {key}: {self.metadata[key]}")
        counts = ", ".join(f"{row}={self.counts[row]}" for row in self.rows)
        lines += [f"- queries per category: {counts}", ""]
        lines += [fmt(header), sep] + [fmt(r) for r in body]
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path, md_path = out / "report.csv", out / "report.md"
        csv_path.write_text(self.to_csv(), encoding="utf-8")
        md_path.write_text(self.to_markdown(), encoding="utf-8")
        return csv_path, md_path


def _pct(value: Fraction | None) -> str:
    if value is None:
        return ""
    return f"{float(round(value * 100, 2)):.2f}"


def build_report(cases: list[EvalCase], methods=METHOD_ORDER, ks=KS, metadata: dict | None = None) -> EvalReport:
    """Per-category rows plus a micro-average over the pooled cases."""
    methods, ks = tuple(methods), tuple(sorted(ks))
    by_cat: dict[str, list[EvalCase]] = {c: [] for c in CATEGORY_ORDER}
    for case in cases:
        if case.category not in by_cat:
            raise ReportError(f"case {case.query_id} has unknown category {case.category!r}")
        by_cat[case.category].append(case)
    groups = dict(by_cat)
    groups[MICRO] = list(cases)
    cells = {}
    for row, group in groups.items():
        cells[row] = {(m, k): complete_recall(group, m, k) if group else None for m in methods for k in ks}
    counts = {row: len(group) for row, group in groups.items()}
    report = EvalReport(methods, ks, cells, counts, dict(metadata or {}))
    bad = report.monotonicity_violations()
    if bad:
        raise ReportError("CompleteRecall is not monotone in k: " + "; ".join(bad))
    return report


def cases_from_records(dataset: list[dict], run_log: list[dict]) -> tuple[list[EvalCase], dict]:
    """Join accepted dataset records with their run-log rankings.

    Returns the cases and a summary with skipped/flagged counts.
    """
    rankings: dict[str, dict[str, list[str]]] = {}
    for rec in run_log:
        rankings.setdefault(rec["query_id"], {})[rec["method"]] = [t for t, _ in rec["ranked_tools"]]
    cases, flagged, unranked = [], 0, 0
    for rec in dataset:
        if rec.get("status", "accepted") != "accepted":
            flagged += 1
            continue
        qid = rec["query_id"]
        if qid not in rankings:
            unranked += 1
            continue
        cases.append(EvalCase(qid, rec["query_class"], frozenset(rec["gold_tools"]), rankings[qid]))
    return cases, {"flagged_skipped": flagged, "unranked_skipped": unranked}
