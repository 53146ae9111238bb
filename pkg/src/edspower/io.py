"""File formats: curve JSON, eigenform tables, the term cache and certificates."""

from __future__ import annotations

import json
import os
import platform
import re
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import gmpy2
from filelock import FileLock

from .bound import EigenformData
from .curve import PointDecomposition, RationalPoint, WeierstrassModel
from .eds import EDSequence
from .errors import CacheCorruptError, ParseError

CACHE_ENV = "EDSPOWER_CACHE_DIR"

_INT = re.compile(r"^[+-]?\d+$")
_RATIONAL = re.compile(r"^([+-]?\d+)(?:/(\d+))?$")


def int_from_str(s: str) -> int:
    """Exact decimal parse without the interpreter's digit limit."""
    s = str(s).strip()
    if not _INT.match(s):
        raise ParseError(f"not a decimal integer: {s[:40]!r}")
    return int(gmpy2.mpz(s))


def int_to_str(n: int) -> str:
    return gmpy2.mpz(n).digits(10)


def rational_from_str(s) -> Fraction:
    if isinstance(s, bool) or not isinstance(s, (str, int)):
        raise ParseError(f"expected a rational string, got {type(s).__name__}")
    m = _RATIONAL.match(str(s).strip())
    if not m:
        raise ParseError(f"not an exact rational: {str(s)[:40]!r}")
    num = int_from_str(m.group(1))
    den = int_from_str(m.group(2)) if m.group(2) else 1
    if den == 0:
        raise ParseError("zero denominator")
    return Fraction(num, den)


def rational_to_str(x: Fraction) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return int_to_str(x.numerator)
    return f"{int_to_str(x.numerator)}/{int_to_str(x.denominator)}"


@dataclass(frozen=True)
class CurveInput:
    name: str
    model: WeierstrassModel
    point: RationalPoint


def parse_curve(obj, name: str = "curve") -> CurveInput:
    if not isinstance(obj, dict):
        raise ParseError("curve file must hold a JSON object")
    try:
        coeffs = obj["a"]
        px, py = obj["point"]["x"], obj["point"]["y"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"curve file is missing {exc}") from exc
    if not isinstance(coeffs, list) or len(coeffs) != 5:
        raise ParseError('"a" must list the five coefficients a1, a2, a3, a4, a6')
    a = [int_from_str(c) if isinstance(c, str) else _strict_int(c) for c in coeffs]
    model = WeierstrassModel(*a)
    point = RationalPoint(rational_from_str(px), rational_from_str(py))
    return CurveInput(str(obj.get("name", name)), model, point)


def _strict_int(c) -> int:
    if isinstance(c, bool) or not isinstance(c, int):
        raise ParseError(f"coefficient {c!r} is not an integer")
    return c


def load_json(path) -> object:
    path = Path(path)
    try:
        with path.open() as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc


def load_curve(path) -> CurveInput:
    return parse_curve(load_json(path), Path(path).stem)


def load_forms(directory) -> list[EigenformData]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ParseError(f"{directory}: not a readable directory")
    forms = []
    for path in sorted(directory.glob("*.json")):
        obj = load_json(path)
        records = obj if isinstance(obj, list) else [obj]
        forms.extend(EigenformData.from_json(r) for r in records)
    return forms


# -- term cache ---------------------------------------------------------------------


def cache_root(explicit=None) -> Path | None:
    root = explicit or os.environ.get(CACHE_ENV)
    return Path(root) if root else None


class TermCache:
    """Persist the decompositions of one sequence as ``n A B C`` lines under a hash header."""

    HEADER = "# edspower terms v1 "

    def __init__(self, root, seq: EDSequence):
        self.root = Path(root)
        self.seq = seq
        self.path = self.root / f"{seq.hash}.terms"
        self.lock = FileLock(str(self.root / f"{seq.hash}.lock"))

    def load(self) -> int:
        """Seed the sequence from disk; returns the number of terms read."""
        if not self.path.exists():
            return 0
        with self.lock:
            lines = self.path.read_text().splitlines()
        if not lines or lines[0] != self.HEADER + self.seq.hash:
            raise CacheCorruptError(f"{self.path}: header does not match the curve hash")
        terms = []
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split()
            if len(parts) != 4:
                raise CacheCorruptError(f"{self.path}:{lineno}: expected four fields")
            try:
                n, A, B, C = (int_from_str(p) for p in parts)
            except ParseError as exc:
                raise CacheCorruptError(f"{self.path}:{lineno}: {exc}") from exc
            terms.append(PointDecomposition(n, A, B, C))
        try:
            self.seq.seed(terms)
        except Exception as exc:
            raise CacheCorruptError(f"{self.path}: {exc}") from exc
        return len(terms)

    def flush(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        terms = sorted(self.seq.terms.values(), key=lambda t: t.n)
        body = "\n".join(f"{t.n} {int_to_str(t.A)} {int_to_str(t.B)} {int_to_str(t.C)}" for t in terms)
        tmp = self.path.with_suffix(".tmp")
        with self.lock:
            tmp.write_text(self.HEADER + self.seq.hash + "\n" + body + ("\n" if body else ""))
            tmp.replace(self.path)


# -- certificates -------------------------------------------------------------------


def environment_fingerprint() -> dict:
    import sympy

    from . import __version__

    return {
        "edspower": __version__,
        "python": platform.python_version(),
        "sympy": sympy.__version__,
        "gmpy2": gmpy2.version(),
    }


def certificate(kind: str, inputs: dict, outcome: dict, passed: bool) -> dict:
    return {
        "kind": kind,
        "inputs": inputs,
        "outcome": outcome,
        "passed": passed,
        "environment": environment_fingerprint(),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False)


def without_timestamp(cert: dict) -> dict:
    return {k: v for k, v in cert.items() if k != "timestamp"}
