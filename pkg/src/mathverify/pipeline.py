"""Pipeline orchestration, per-chapter aggregation, and report rendering.

The pipeline runs scan two over the input corpus (a no-op when the corpus
is already second-scan), translates every record, verifies equations
symbolically, verifies the translated-but-not-symbolically-verified rest
numerically, and folds the outcomes into per-chapter rows shaped like the
summary table: F2, T, TVs, TVn with percentages, plus a failure
breakdown.  Flagged cases (above-threshold discrepancies, stray numeric
outcomes of the simplifier, and constraints no blueprint understood) are
collected for review.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

from . import ir
from .chapters import CHAPTERS
from .constraints import (
    ConstraintBlueprint,
    interpret_constraints,
    parse_blueprint_rules,
)
from .emit import DIALECT_MAPLE, emit_relation
from .errors import (
    ConfigParseError,
    MathVerifyError,
    MissingInputFile,
    NoDialectMapping,
    TranslationError,
)
from .extraction import FormulaRecord, read_corpus, scan_second
from .numeric import (
    CLASS_ABOVE_THRESHOLD,
    CLASS_NO_VALID_VALUES,
    CLASS_VERIFIED,
    NumericConfig,
    verify_numeric,
)
from .parser import MacroTable, load_macro_table, parse, tokenize
from .symbolic import (
    ALL_PREPROCESSORS,
    CLASS_OTHER_NUMERIC,
    MODE_BOTH,
    RewriteRule,
    SimplifyConfig,
    load_rewrite_rules,
    verify_symbolic,
)
from .translate import TranslationTable, load_translation_table, to_relation

# Translation-failure kinds: their chapter counts plus T reconstitute F2.
TRANSLATION_FAILURE_KINDS = (
    "unknown_macro", "insufficient_semantics", "unsupported_grammar",
)


def data_text(name: str) -> str:
    return resources.files("mathverify").joinpath("data", name).read_text(encoding="utf-8")


@dataclass
class PipelineOptions:
    macro_table: Optional[str] = None
    translation_table: Optional[str] = None
    blueprints: Optional[str] = None
    rewrite_rules: Optional[str] = None
    mode: str = MODE_BOTH
    preprocessors: tuple[str, ...] = ALL_PREPROCESSORS
    rewrite_step_budget: int = 500_000
    test_values: tuple = (Fraction(-1, 2), Fraction(1, 2), Fraction(3, 2))
    threshold: float = 0.001
    precision_digits: int = 10
    timeout_seconds: float = 300.0
    comparison_mode: str = "absolute"
    jobs: int = 1
    run_symbolic: bool = True
    run_numeric: bool = True

    def numeric_config(self) -> NumericConfig:
        return NumericConfig(
            test_values=tuple(self.test_values),
            threshold=self.threshold,
            precision_digits=self.precision_digits,
            timeout_seconds=self.timeout_seconds,
            comparison_mode=self.comparison_mode,
        )


class Tables:
    """Loaded macro/translation/blueprint/rule tables."""

    def __init__(self, options: PipelineOptions):
        if options.macro_table:
            macro_text = Path(options.macro_table).read_text(encoding="utf-8")
        else:
            macro_text = data_text("macros.table")
        self.macro_table: MacroTable = load_macro_table(macro_text)
        if options.translation_table:
            tr_text = Path(options.translation_table).read_text(encoding="utf-8")
        else:
            tr_text = data_text("translation.table")
        self.translation_table: TranslationTable = load_translation_table(tr_text)
        if options.blueprints:
            bp_text = Path(options.blueprints).read_text(encoding="utf-8")
        else:
            bp_text = data_text("blueprints.rules")
        self.blueprints: list[ConstraintBlueprint] = parse_blueprint_rules(
            bp_text, self.macro_table
        )
        if options.rewrite_rules:
            rw_text = Path(options.rewrite_rules).read_text(encoding="utf-8")
        else:
            rw_text = data_text("rewrite.rules")
        self.rewrite_rules: tuple[RewriteRule, ...] = load_rewrite_rules(
            rw_text, self.macro_table, self.translation_table
        )


def verify_record(record: FormulaRecord, tables: Tables,
                  options: PipelineOptions) -> dict:
    """Translate and verify one corpus record; returns the structured
    per-formula outcome."""
    out: dict = {
        "id": record.id,
        "chapter": record.chapter_code,
        "latex": record.latex,
        "translated": False,
        "failure": None,
        "relation": None,
        "symbolic": None,
        "numeric": None,
        "unmatched_constraints": [],
        "constraint_conflicts": [],
        "maple": None,
    }
    interp = interpret_constraints(record.constraints, tables.blueprints,
                                   tables.macro_table)
    out["unmatched_constraints"] = list(interp.unmatched)
    out["constraint_conflicts"] = list(interp.conflicts)
    try:
        tree = parse(tokenize(record.latex), tables.macro_table)
        rel = to_relation(tree, tables.translation_table)
    except TranslationError as exc:
        out["failure"] = exc.failure_kind
        return out
    except MathVerifyError:
        out["failure"] = "unsupported_grammar"
        return out
    out["translated"] = True
    out["relation"] = rel.kind
    try:
        out["maple"] = emit_relation(rel, DIALECT_MAPLE, tables.translation_table)
    except NoDialectMapping:
        out["maple"] = None
    sym_verified = False
    if options.run_symbolic and rel.kind in (ir.REL_EQ, ir.REL_EQUIV):
        sym_config = SimplifyConfig(
            mode=options.mode,
            preprocessors=options.preprocessors,
            rewrite_step_budget=options.rewrite_step_budget,
            assumptions=tuple(interp.domains),
            rules=tables.rewrite_rules,
        )
        sym = verify_symbolic(rel, interp.domains, sym_config)
        out["symbolic"] = {
            "classification": sym.classification,
            "value": None if sym.value is None else str(sym.value),
            "preprocessor": sym.winning_preprocessor,
            "steps": sym.steps_used,
        }
        sym_verified = sym.verified
    if options.run_numeric and not sym_verified and rel.kind != ir.REL_TO:
        num = verify_numeric(rel, interp.domains, interp.specials,
                             options.numeric_config())
        out["numeric"] = {
            "classification": num.classification,
            "detail": num.detail,
            "worst": num.worst,
            "branch_sensitive": num.branch_sensitive,
            "n_evaluations": len(num.evaluations),
            "n_skipped": len(num.skipped),
            "evaluations": [
                {
                    "assignment": ev.assignment,
                    "lhs": [ev.lhs.real, ev.lhs.imag],
                    "rhs": [ev.rhs.real, ev.rhs.imag],
                    "discrepancy": ev.discrepancy,
                }
                for ev in num.evaluations
            ],
        }
    return out


@dataclass
class ChapterReport:
    chapter_code: str
    f2: int = 0
    translated: int = 0
    sym_verified: int = 0
    num_verified: int = 0
    failures: dict = field(default_factory=dict)

    @property
    def chapter_number(self) -> int:
        return CHAPTERS[self.chapter_code][0] if self.chapter_code in CHAPTERS else 0

    def t_percent(self) -> float:
        return 100.0 * self.translated / self.f2 if self.f2 else 0.0

    def tvs_percent(self) -> float:
        return 100.0 * self.sym_verified / self.f2 if self.f2 else 0.0

    def tvn_percent(self) -> float:
        remaining = self.f2 - self.sym_verified
        return 100.0 * self.num_verified / remaining if remaining else 0.0


@dataclass
class FlaggedCase:
    formula_id: str
    stage: str          # symbolic | numeric | constraint
    detail: str
    suspected_reason: str
    worst: Optional[float] = None


@dataclass
class PipelineReport:
    chapters: list[ChapterReport]
    outcomes: list[dict]
    totals: ChapterReport

    def chapter(self, code: str) -> Optional[ChapterReport]:
        for ch in self.chapters:
            if ch.chapter_code == code:
                return ch
        return None


def aggregate(outcomes: Sequence[dict]) -> PipelineReport:
    """Deterministic fold of per-formula outcomes into chapter rows."""
    by_chapter: dict[str, ChapterReport] = {}
    for out in sorted(outcomes, key=lambda o: o["id"]):
        ch = by_chapter.setdefault(out["chapter"], ChapterReport(out["chapter"]))
        ch.f2 += 1
        if out["failure"] is not None:
            ch.failures[out["failure"]] = ch.failures.get(out["failure"], 0) + 1
            continue
        ch.translated += 1
        sym = out.get("symbolic")
        if sym is not None and sym["classification"] in ("zero", "one"):
            ch.sym_verified += 1
            continue
        num = out.get("numeric")
        if num is None:
            continue
        if num["classification"] == CLASS_VERIFIED:
            ch.num_verified += 1
        else:
            key = num["classification"]
            ch.failures[key] = ch.failures.get(key, 0) + 1
    chapters = sorted(by_chapter.values(), key=lambda c: c.chapter_number)
    totals = _totals_row(chapters)
    return PipelineReport(chapters, sorted(outcomes, key=lambda o: o["id"]), totals)


def _totals_row(chapters: Sequence[ChapterReport]) -> ChapterReport:
    total = ChapterReport("Σ")
    total.f2 = sum(c.f2 for c in chapters)
    total.translated = sum(c.translated for c in chapters)
    total.sym_verified = sum(c.sym_verified for c in chapters)
    total.num_verified = sum(c.num_verified for c in chapters)
    for c in chapters:
        for k, v in c.failures.items():
            total.failures[k] = total.failures.get(k, 0) + v
    return total


# --- flagged cases ---

REASON_INVALID_VALUES = "invalid_values"
REASON_TRANSLATION_ERROR = "translation_error"
REASON_SOURCE_ERROR = "source_error"
REASON_ENGINE_ERROR = "engine_error"


def list_flagged(report: PipelineReport) -> list[FlaggedCase]:
    """Particularly interesting cases, worst discrepancy first; unmatched
    constraints close the list with stage ``constraint``."""
    numeric_flags: list[FlaggedCase] = []
    symbolic_flags: list[FlaggedCase] = []
    constraint_flags: list[FlaggedCase] = []
    for out in report.outcomes:
        sym = out.get("symbolic")
        if sym is not None and sym["classification"] == CLASS_OTHER_NUMERIC:
            symbolic_flags.append(FlaggedCase(
                out["id"], "symbolic",
                f"simplified to {sym['value']}", REASON_SOURCE_ERROR,
            ))
        num = out.get("numeric")
        if num is not None and num["classification"] == CLASS_ABOVE_THRESHOLD:
            reason = REASON_ENGINE_ERROR if num.get("branch_sensitive") \
                else REASON_SOURCE_ERROR
            numeric_flags.append(FlaggedCase(
                out["id"], "numeric",
                f"worst discrepancy {num['worst']:.6g}", reason,
                worst=num.get("worst"),
            ))
        if num is not None and num["classification"] == CLASS_NO_VALID_VALUES:
            pass  # counted in the failure breakdown, not flagged
        for text in out.get("unmatched_constraints", ()):
            constraint_flags.append(FlaggedCase(
                out["id"], "constraint", text, REASON_INVALID_VALUES,
            ))
    numeric_flags.sort(key=lambda f: -(f.worst or 0.0))
    return numeric_flags + symbolic_flags + constraint_flags


# --- run ---

def run_pipeline(
    corpus_path: Union[str, Path],
    options: Optional[PipelineOptions] = None,
    tables: Optional[Tables] = None,
    chapter: Optional[str] = None,
) -> PipelineReport:
    options = options or PipelineOptions()
    path = Path(corpus_path)
    if not path.exists():
        raise MissingInputFile(str(path))
    records = read_corpus(path)
    if chapter is not None:
        records = [r for r in records if r.chapter_code == chapter]
    records = scan_second(records)
    tables = tables or Tables(options)
    if options.jobs > 1:
        outcomes = _run_parallel(records, options)
    else:
        outcomes = [verify_record(r, tables, options) for r in records]
    return aggregate(outcomes)


_WORKER_STATE: dict = {}


def _worker_init(options: PipelineOptions) -> None:
    _WORKER_STATE["options"] = options
    _WORKER_STATE["tables"] = Tables(options)


def _worker_verify(record_json: str) -> dict:
    record = FormulaRecord.from_json(record_json)
    return verify_record(record, _WORKER_STATE["tables"], _WORKER_STATE["options"])


def _run_parallel(records: Sequence[FormulaRecord],
                  options: PipelineOptions) -> list[dict]:
    with ProcessPoolExecutor(
        max_workers=options.jobs,
        initializer=_worker_init,
        initargs=(options,),
    ) as pool:
        return list(pool.map(_worker_verify, [r.to_json() for r in records]))


# --- rendering ---

FORMAT_TEXT = "text"
FORMAT_CSV = "csv"
FORMAT_STRUCTURED = "structured"


def _pct(value: float) -> str:
    return f"({value:.1f}%)"


def render_report(report: PipelineReport, fmt: str = FORMAT_TEXT) -> bytes:
    if fmt == FORMAT_CSV:
        return _render_csv(report)
    if fmt == FORMAT_TEXT:
        return _render_text(report)
    if fmt == FORMAT_STRUCTURED:
        lines = [json.dumps(o, ensure_ascii=True) for o in report.outcomes]
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}")


def _row_cells(ch: ChapterReport) -> list[str]:
    number = str(ch.chapter_number) if ch.chapter_code in CHAPTERS else ""
    return [
        ch.chapter_code,
        number,
        str(ch.f2),
        f"{ch.translated} {_pct(ch.t_percent())}",
        f"{ch.sym_verified} {_pct(ch.tvs_percent())}",
        f"{ch.num_verified} {_pct(ch.tvn_percent())}",
    ]


def _render_csv(report: PipelineReport) -> bytes:
    lines = ["2C, C#, F2, T, TVs, TVn"]
    for ch in report.chapters + [report.totals]:
        lines.append(", ".join(_row_cells(ch)))
    return ("\n".join(lines) + "\n").encode("utf-8")


def _render_text(report: PipelineReport) -> bytes:
    headers = ["2C", "C#", "F2", "T", "TVs", "TVn", "failures"]
    rows = []
    for ch in report.chapters + [report.totals]:
        cells = _row_cells(ch)
        failure_text = ", ".join(
            f"{k}={v}" for k, v in sorted(ch.failures.items())
        ) or "-"
        rows.append(cells + [failure_text])
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(len(headers))]
    out_lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip()
    ]
    out_lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        out_lines.append("  ".join(r[i].ljust(widths[i]) for i in range(len(r))).rstrip())
    return ("\n".join(out_lines) + "\n").encode("utf-8")


# --- config file ---

_CONFIG_KEYS = {
    "mode", "preprocessors", "rewrite_step_budget", "test_values", "threshold",
    "precision", "timeout_seconds", "comparison_mode", "jobs",
    "macro_table", "translation_table", "blueprints", "rewrite_rules",
}


def load_config(path: Union[str, Path]) -> PipelineOptions:
    """Key-value configuration file (``key = value``, '#' comments)."""
    path = Path(path)
    if not path.exists():
        raise MissingInputFile(str(path))
    options = PipelineOptions()
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigParseError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            _apply_config(options, key, value, path.parent)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigParseError(f"{path}:{lineno}: {exc}") from exc
    return options


def _apply_config(options: PipelineOptions, key: str, value: str,
                  base: Path) -> None:
    if key == "mode":
        options.mode = value
    elif key == "preprocessors":
        options.preprocessors = tuple(v.strip() for v in value.split(",") if v.strip())
    elif key == "rewrite_step_budget":
        options.rewrite_step_budget = int(value)
    elif key == "test_values":
        options.test_values = tuple(Fraction(v.strip()) for v in value.split(","))
    elif key == "threshold":
        options.threshold = float(value)
    elif key == "precision":
        options.precision_digits = int(value)
    elif key == "timeout_seconds":
        options.timeout_seconds = float(value)
    elif key == "comparison_mode":
        options.comparison_mode = value
    elif key == "jobs":
        options.jobs = int(value)
    else:  # path-valued keys resolve relative to the config file
        resolved = str((base / value).resolve()) if not Path(value).is_absolute() else value
        setattr(options, key, resolved)
