"""Column-by-column comparison of two trajectory files."""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .io import VALUE_COLUMNS, SchemaError, read_trajectory

__all__ = ["ComparisonReport", "compare", "compare_tables"]


@dataclass(eq=False)
class ComparisonReport:
    """Outcome of comparing series `a` and `b`.

    ``diff[col]`` holds ``a - b`` per time point and ``allowance[col]`` the
    statistical allowance ``3 sqrt(se_a^2 + se_b^2)`` (zero without stderr
    columns or when the allowance is off).  A column passes iff
    ``max(|diff| - allowance) <= tolerance``; all-NaN columns are skipped.
    """

    a: str
    b: str
    tolerance: float
    stat_allowance: bool
    t: np.ndarray
    diff: dict
    allowance: dict
    verdicts: dict
    summary: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(v != "FAIL" for v in self.verdicts.values())

    @property
    def verdict(self):
        return "PASS" if self.passed else "FAIL"

    def max_deviation(self, col=None):
        cols = [col] if col else [c for c, v in self.verdicts.items() if v != "SKIP"]
        vals = [np.nanmax(abs(self.diff[c])) for c in cols]
        return float(max(vals)) if vals else 0.0

    def to_dict(self):
        d = asdict(self)
        d["t"] = self.t.tolist()
        d["diff"] = {k: v.tolist() for k, v in self.diff.items()}
        d["allowance"] = {k: v.tolist() for k, v in self.allowance.items()}
        d["verdict"] = self.verdict
        return d

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        text = json.dumps(self.to_dict(), indent=2, allow_nan=True)
        path.write_text(text + "\n", encoding="utf-8")
        return path

    def summary_text(self):
        lines = [f"compare {self.a} vs {self.b}  tolerance={self.tolerance:g}"
                 f"{'  (+3 stderr allowance)' if self.stat_allowance else ''}"]
        for col, verdict in self.verdicts.items():
            s = self.summary[col]
            if verdict == "SKIP":
                lines.append(f"  {col:<10} SKIP (no data)")
            else:
                lines.append(f"  {col:<10} {verdict}  max|diff|={s['max_abs']:.3e}  worst excess={s['excess']:.3e}")
        lines.append(f"overall: {self.verdict}")
        return "\n".join(lines)


def compare_tables(A, B, tolerance, stat_allowance=False, interpolate=False, names=("a", "b")):
    """Compare two trajectory dictionaries (see :func:`compare`).

    Only the standard value columns are compared; extra columns such as the
    van Hove mode decomposition are ignored.
    """
    for name, X in zip(names, (A, B)):
        missing = [c for c in ("t",) + VALUE_COLUMNS if c not in X]
        if missing:
            raise SchemaError(f"{name}: missing trajectory columns {missing}")
    cols = list(VALUE_COLUMNS)
    ta, tb = A["t"], B["t"]
    if ta.shape == tb.shape and np.array_equal(ta, tb):
        t, take_b = ta, lambda x: x
    elif interpolate:
        lo, hi = max(ta[0], tb[0]), min(ta[-1], tb[-1])
        mask = (ta >= lo) & (ta <= hi)
        if lo > hi or not mask.any():
            raise SchemaError("time grids do not overlap")
        t = ta[mask]
        A = {k: v[mask] for k, v in A.items()}
        take_b = lambda x: np.interp(t, tb, x)  # noqa: E731
    else:
        raise SchemaError("time grids differ; pass interpolate=True to interpolate b onto a")
    diff, allow, verdicts, summary = {}, {}, {}, {}
    for c in cols:
        a, b = A[c], take_b(B[c])
        d = a - b
        se2 = np.zeros_like(d)
        if stat_allowance:
            for X, get in ((A, lambda x: x), (B, take_b)):
                if f"{c}_stderr" in X:
                    se = get(X[f"{c}_stderr"])
                    se2 = se2 + np.where(np.isfinite(se), se, 0.0) ** 2
        al = 3.0 * np.sqrt(se2)
        diff[c], allow[c] = d, al
        if np.all(np.isnan(a)) or np.all(np.isnan(b)):
            verdicts[c] = "SKIP"
            summary[c] = {}
            continue
        excess = abs(d) - al
        bad = np.isnan(d) & ~(np.isnan(a) & np.isnan(b))
        worst = float(np.nanmax(excess)) if np.any(np.isfinite(excess)) else 0.0
        verdicts[c] = "PASS" if worst <= tolerance and not bad.any() else "FAIL"
        summary[c] = {"max_abs": float(np.nanmax(abs(d))), "mean_abs": float(np.nanmean(abs(d))),
                      "excess": worst, "argmax_t": float(t[int(np.nanargmax(abs(d)))])}
    return ComparisonReport(str(names[0]), str(names[1]), float(tolerance), bool(stat_allowance), t, diff, allow,
                            verdicts, summary)


def compare(file_a, file_b, tolerance, stat_allowance=False, interpolate=False):
    """Compare two trajectory CSVs.

    Raises
    ------
    SchemaError
        A standard trajectory column is missing, or different time grids without `interpolate`.
    """
    return compare_tables(read_trajectory(file_a), read_trajectory(file_b), tolerance, stat_allowance,
                          interpolate, names=(str(file_a), str(file_b)))
