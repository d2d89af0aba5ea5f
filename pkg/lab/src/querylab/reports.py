"""Line-delimited report records and the human-readable summary."""

from enum import Enum
from fractions import Fraction
from typing import Any, Dict, IO, List, Literal, Optional, Union

from pydantic import BaseModel, Field
from rich.console import Console
from rich.table import Table


class CheckId(str, Enum):
    """Names of every check a suite can emit"""
    GAPMAJ_RATIO = "gapmaj-ratio"
    GAPOR_SLICES = "gapor-slices"
    SLICE_FORMULA = "slice-formula"
    XOR_FOURIER = "xor-fourier"
    MAJ_CASES = "maj-cases"
    SYM_INEQUALITY = "sym-inequality"
    OUTCOME_SELECTION = "outcome-selection"
    POSTSELECTION_EXTRACTION = "postselection-extraction"
    WAPP_EXTRACTION = "wapp-extraction"
    WALK_LEMMA = "walk-lemma"
    VOTE5 = "vote5"
    NOISY_OR = "noisy-or"
    WHICH_EVAL = "which-eval"
    ZERO_SIDED_RECOVER = "zero-sided-recover"
    ONE_QUERY = "one-query"
    COMPOSE_AMP = "compose-amp"
    DISTRIBUTIONAL = "distributional"
    GAME_VALUE = "game-value"
    JUNTA_DEGREE = "junta-degree"
    CERTIFICATE_SEARCH = "certificate-search"


def exact(value: Fraction) -> Dict[str, Any]:
    """A rational as its "p/q" string next to a decimal rendering"""
    value = Fraction(value)
    return {"exact": f"{value.numerator}/{value.denominator}", "approx": float(value)}


def jsonable(value: Any) -> Any:
    """Convert witnesses to JSON-ready values; rationals become exact pairs"""
    if isinstance(value, Fraction):
        return exact(value)
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, BaseModel):
        return jsonable(value.model_dump())
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [jsonable(v) for v in items]
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


# -------------------------
# Records
# -------------------------

class HeaderRecord(BaseModel):
    """Echo of the configuration a suite ran with"""
    record: Literal["header"] = "header"
    suite: str
    params: Dict[str, Any] = Field(default_factory=dict)


class RunRecord(BaseModel):
    """Monte Carlo result for one (algorithm, adversary) pair"""
    record: Literal["run"] = "run"
    check_id: str
    algorithm: str
    function: str
    adversary_id: str
    trials: int
    errors: int
    aborts: int = 0
    error_rate: float
    ci_low: float
    ci_high: float
    max_queries: int
    mean_queries: float
    seed: int
    passed: bool


class CheckRecord(BaseModel):
    """Outcome of an exact check, a statistical check or a solver run"""
    record: Literal["check"] = "check"
    check_id: str
    params: Dict[str, Any] = Field(default_factory=dict)
    passed: bool
    instances: int = 0
    witness: Dict[str, Any] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)


class SummaryRecord(BaseModel):
    """Final pass/fail tally of a suite"""
    record: Literal["summary"] = "summary"
    suite: str
    passed: int
    failed: int
    ok: bool


Record = Union[HeaderRecord, RunRecord, CheckRecord, SummaryRecord]


def check_record(check_id: str, params: Dict[str, Any], passed: bool = True, instances: int = 0,
                 witness: Optional[Dict[str, Any]] = None, notes: Optional[List[str]] = None) -> CheckRecord:
    return CheckRecord(
        check_id=check_id,
        params=jsonable(params),
        passed=passed,
        instances=instances,
        witness=jsonable(witness or {}),
        notes=notes or [],
    )


# -------------------------
# Writer
# -------------------------

class ReportWriter:
    """Writes records as JSON lines and keeps the pass/fail rows for the summary table"""

    def __init__(self, stream: IO[str]):
        self.stream = stream
        self.rows: List[Union[RunRecord, CheckRecord]] = []

    def emit(self, record: Record) -> None:
        self.stream.write(record.model_dump_json() + "\n")
        self.stream.flush()
        if isinstance(record, (RunRecord, CheckRecord)):
            self.rows.append(record)

    @property
    def failed(self) -> int:
        return sum(1 for r in self.rows if not r.passed)

    def summary(self, suite: str) -> SummaryRecord:
        failed = self.failed
        return SummaryRecord(suite=suite, passed=len(self.rows) - failed, failed=failed, ok=failed == 0)

    def render_table(self, console: Console, title: str, claims: Optional[Dict[str, str]] = None) -> None:
        """Summary table; ``claims`` maps a check id to the statement it checks"""
        table = Table(title=title)
        table.add_column("check")
        if claims:
            table.add_column("claim")
        table.add_column("detail")
        table.add_column("result")
        for row in self.rows:
            if isinstance(row, RunRecord):
                detail = f"{row.adversary_id}: {row.errors}/{row.trials} (ci_high={row.ci_high:.4f})"
            else:
                detail = ", ".join(f"{k}={v}" for k, v in row.params.items())
            result = "[green]pass[/green]" if row.passed else "[red]FAIL[/red]"
            cells = [row.check_id]
            if claims:
                cells.append(claims.get(row.check_id, ""))
            table.add_row(*cells, detail, result)
        console.print(table)
