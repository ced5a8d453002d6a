"""Labelled pass/fail checks collected into reports."""

from __future__ import annotations

from dataclasses import dataclass, field

from .algebra import MatrixSeries, TruncatedSeries


def describe_witness(value) -> str | None:
    """Human-readable first nonzero term of a series or matrix, or None."""
    if isinstance(value, MatrixSeries):
        hit = value.first_nonzero()
        if hit is None:
            return None
        i, j, ((z, e, s), c) = hit
        return f"entry ({i + 1},{j + 1}): {_term(z, e, s, c)}"
    if isinstance(value, TruncatedSeries):
        lt = value.leading_term()
        if lt is None:
            return None
        (z, e, s), c = lt
        return _term(z, e, s, c)
    if value is None:
        return None
    return str(value)


def _term(z, e, s, c):
    from .algebra.series import format_terms

    return format_terms([((z, e, s), c)])


@dataclass
class Check:
    """One certified identity, named by its equation tag."""

    label: str
    ok: bool
    witness: str | None = None
    detail: str = ""

    @classmethod
    def zero(cls, label: str, value, detail: str = "") -> "Check":
        w = describe_witness(value)
        return cls(label, w is None, w, detail)

    def line(self) -> str:
        status = "pass" if self.ok else "FAIL"
        extra = f" [{self.detail}]" if self.detail else ""
        wit = "" if self.ok or not self.witness else f"  witness: {self.witness}"
        return f"{status}  {self.label}{extra}{wit}"

    def to_json(self) -> dict:
        d = {"label": self.label, "ok": self.ok}
        if self.detail:
            d["detail"] = self.detail
        if self.witness is not None:
            d["witness"] = self.witness
        return d


@dataclass
class Report:
    checks: list = field(default_factory=list)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, checks) -> None:
        self.checks.extend(checks)

    def merge(self, checks) -> None:
        """Extend, skipping labels already present (the same identity certified twice)."""
        seen = {c.label for c in self.checks}
        self.checks.extend(c for c in checks if c.label not in seen)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.ok]

    def by_label(self, label: str) -> list:
        return [c for c in self.checks if c.label == label or c.label.startswith(label + "[")]

    def __iter__(self):
        return iter(self.checks)

    def __len__(self):
        return len(self.checks)

    def lines(self) -> list:
        return [c.line() for c in self.checks]

    def to_json(self) -> list:
        return [c.to_json() for c in self.checks]
