"""Structured pass/fail records produced by every check."""

import json
import math

__all__ = ["CheckReport", "read_reports", "write_reports"]

_FIELDS = ("check_id", "passed", "instances", "worst_margin", "tolerance", "note", "details")


class CheckReport:
    """Outcome of one verification run.

    ``passed`` is derived, never stored independently: it is true iff
    ``worst_margin >= -tolerance``.  A run over zero instances passes
    vacuously and says so in ``note``.
    """

    def __init__(self, check_id, instances, worst_margin, tolerance, details=None, note=""):
        self.check_id = str(check_id)
        self.instances = int(instances)
        self.tolerance = float(tolerance)
        self.details = list(details or [])
        if self.instances == 0:
            worst_margin = 0.0
            note = note or "no instances"
        self.worst_margin = float(worst_margin)
        self.note = note

    @property
    def passed(self):
        if math.isnan(self.worst_margin):
            return False
        return self.worst_margin >= -self.tolerance

    def __repr__(self):
        return (f"CheckReport({self.check_id!r}, instances={self.instances}, "
                f"worst_margin={self.worst_margin:.6g}, tolerance={self.tolerance:.3g}, "
                f"passed={self.passed})")

    def __eq__(self, other):
        if not isinstance(other, CheckReport):
            return NotImplemented
        return self.to_line() == other.to_line()

    def summary(self):
        flag = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.note})" if self.note else ""
        return (f"{flag} {self.check_id}: instances={self.instances} "
                f"worst_margin={self.worst_margin:.6g} tol={self.tolerance:.3g}{extra}")

    # one record per line, tab separated; details ride along as JSON
    @staticmethod
    def header():
        return "\t".join(_FIELDS)

    def to_line(self):
        vals = (
            self.check_id,
            "1" if self.passed else "0",
            str(self.instances),
            repr(self.worst_margin),
            repr(self.tolerance),
            self.note.replace("\t", " ").replace("\n", " "),
            json.dumps(self.details, sort_keys=True, default=_jsonable),
        )
        return "\t".join(vals)

    @classmethod
    def from_line(cls, line):
        parts = line.rstrip("\n").split("\t")
        if len(parts) != len(_FIELDS):
            raise ValueError(f"expected {len(_FIELDS)} fields, got {len(parts)}")
        cid, passed, inst, margin, tol, note, details = parts
        rep = cls(cid, int(inst), float(margin), float(tol), json.loads(details), note)
        if rep.passed != (passed == "1"):
            raise ValueError(f"record for {cid} has an inconsistent pass flag")
        return rep


def _jsonable(x):
    if hasattr(x, "item"):
        return x.item()
    if hasattr(x, "tolist"):
        return x.tolist()
    return str(x)


def write_reports(path, reports):
    with open(path, "w") as fh:
        fh.write(CheckReport.header() + "\n")
        for r in reports:
            fh.write(r.to_line() + "\n")


def read_reports(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CheckReport.header():
        raise ValueError(f"{path}: not a check-report table")
    return [CheckReport.from_line(l) for l in lines[1:] if l.strip()]
