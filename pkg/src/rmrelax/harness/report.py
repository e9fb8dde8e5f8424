"""Bundle several comparison reports into one summary."""

import json
from pathlib import Path

__all__ = ["bundle_reports"]


def _load(path):
    path = Path(path)
    if path.is_dir():
        return [d for p in sorted(path.rglob("comparison.json")) for d in _load(p)]
    doc = json.loads(path.read_text(encoding="utf-8"))
    doc.setdefault("source", str(path))
    return [doc]


def bundle_reports(paths, out=None):
    """Collect comparison JSON files (or directories containing them).

    Returns the summary dict and writes ``report.json`` and ``report.txt``
    into `out` when given.  The bundle passes iff every comparison passes.
    """
    docs = [d for p in paths for d in _load(p)]
    if not docs:
        raise FileNotFoundError("no comparison reports found")
    rows = []
    for d in docs:
        worst = max((s.get("max_abs", 0.0) for s in d.get("summary", {}).values() if s), default=0.0)
        rows.append({"source": d["source"], "a": d["a"], "b": d["b"], "tolerance": d["tolerance"],
                     "verdict": d["verdict"], "max_abs": worst})
    summary = {"count": len(rows), "passed": sum(r["verdict"] == "PASS" for r in rows), "rows": rows}
    summary["verdict"] = "PASS" if summary["passed"] == summary["count"] else "FAIL"
    lines = [f"{r['verdict']}  max|diff|={r['max_abs']:.3e}  tol={r['tolerance']:g}  {r['a']} vs {r['b']}"
             for r in rows]
    lines.append(f"{summary['passed']}/{summary['count']} comparisons passed: {summary['verdict']}")
    summary["text"] = "\n".join(lines)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        (out / "report.txt").write_text(summary["text"] + "\n", encoding="utf-8")
    return summary
