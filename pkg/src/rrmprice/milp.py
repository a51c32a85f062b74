"""Solver-agnostic MILP container and free-format MPS reader/writer."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

INF = math.inf

# variable tag families used by the builders
FAMILIES = ("y", "yr", "RR", "R", "Rmin", "b", "z", "w", "lam", "alpha", "U", "Umax")


@dataclass(frozen=True)
class VarRef:
    id: int
    kind: str          # "binary" | "continuous"
    lower: float
    upper: float
    tag: tuple

    @property
    def name(self) -> str:
        return tag_name(self.tag)


@dataclass(frozen=True)
class LinConstraint:
    terms: tuple       # ((var_id, coef), ...)
    sense: str         # "<=", "=", ">="
    rhs: float
    label: tuple

    @property
    def name(self) -> str:
        return tag_name(self.label)


@dataclass
class MilpModel:
    variables: list[VarRef]
    constraints: list[LinConstraint]
    objective: list[tuple[int, float]]
    sense: str = "max"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = {v.tag: v.id for v in self.variables}

    def var(self, *tag) -> int:
        return self.index[tuple(tag)]

    def has(self, *tag) -> bool:
        return tuple(tag) in self.index

    def families(self) -> set[str]:
        return {v.tag[0] for v in self.variables}


def tag_name(tag: tuple) -> str:
    return "_".join(str(t) for t in tag)


def parse_tag(name: str) -> tuple:
    """Inverse of :func:`tag_name`: trailing integer fields become indices."""
    parts = name.split("_")
    k = len(parts)
    while k > 1 and parts[k - 1].lstrip("-").isdigit():
        k -= 1
    return ("_".join(parts[:k]), *(int(p) for p in parts[k:]))


def model_counts(model: MilpModel) -> dict:
    return {
        "n_vars": len(model.variables),
        "n_constraints": len(model.constraints),
        "n_binaries": sum(v.kind == "binary" for v in model.variables),
    }


class ModelBuilder:
    """Accumulates variables and rows; ``build`` freezes them into a MilpModel."""

    def __init__(self, kind: str, meta: dict | None = None):
        self.kind = kind
        self.meta = dict(meta or {})
        self.variables: list[VarRef] = []
        self.constraints: list[LinConstraint] = []
        self.objective: dict[int, float] = {}
        self.index: dict[tuple, int] = {}
        self.labels: set[tuple] = set()

    def add_var(self, tag, kind="continuous", lower=0.0, upper=INF) -> int:
        tag = tuple(tag)
        if tag in self.index:
            raise ValueError(f"duplicate variable tag {tag}")
        if kind == "binary" and (lower, upper) == (0.0, INF):
            upper = 1.0
        vid = len(self.variables)
        self.variables.append(VarRef(vid, kind, float(lower), float(upper), tag))
        self.index[tag] = vid
        return vid

    def binary(self, *tag) -> int:
        return self.add_var(tag, "binary", 0.0, 1.0)

    def continuous(self, *tag, lower=-INF, upper=INF) -> int:
        return self.add_var(tag, "continuous", lower, upper)

    def add(self, label, terms, sense, rhs):
        """Add a row; ``terms`` is an iterable of (var_id, coef), merged by id."""
        label = tuple(label)
        if label in self.labels:
            raise ValueError(f"duplicate constraint label {label}")
        merged: dict[int, float] = {}
        for vid, coef in terms:
            merged[vid] = merged.get(vid, 0.0) + coef
        clean = tuple((vid, c) for vid, c in merged.items() if c != 0.0)
        if any(not math.isfinite(c) for _, c in clean) or not math.isfinite(rhs):
            raise ValueError(f"non-finite data in constraint {label}")
        self.labels.add(label)
        self.constraints.append(LinConstraint(clean, sense, float(rhs), label))

    def add_objective(self, vid: int, coef: float):
        self.objective[vid] = self.objective.get(vid, 0.0) + coef

    def build(self) -> MilpModel:
        obj = sorted((vid, c) for vid, c in self.objective.items() if c != 0.0)
        m = MilpModel(list(self.variables), list(self.constraints), obj, "max",
                      {"kind": self.kind, **self.meta})
        m.meta["counts"] = model_counts(m)
        return m


# -- MPS ---------------------------------------------------------------------------

class MpsParseError(ValueError):
    def __init__(self, message, section=None, line=None):
        self.section = section
        self.line = line
        loc = []
        if section:
            loc.append(f"section {section}")
        if line is not None:
            loc.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)


_SENSE_CODE = {"<=": "L", "=": "E", ">=": "G"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}


def _num(x: float) -> str:
    return repr(float(x))


def export_mps(model: MilpModel) -> str:
    """Free-format MPS with explicit OBJSENSE; binaries declared by BV bounds."""
    names = [v.name for v in model.variables]
    rows = [c.name for c in model.constraints]
    for nm in names + rows:
        if len(nm) > 255 or " " in nm:
            raise ValueError(f"invalid MPS name {nm!r}")
    out = [f"NAME {model.meta.get('kind', 'model')}"]
    for key in ("kind", "instance_digest", "draw_digest"):
        if key in model.meta:
            out.append(f"* {key} {model.meta[key]}")
    out += ["OBJSENSE", f"    {model.sense.upper()}", "ROWS", " N  obj"]
    out += [f" {_SENSE_CODE[c.sense]}  {c.name}" for c in model.constraints]

    cols: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for vid, coef in model.objective:
        cols[vid].append(("obj", coef))
    for c in model.constraints:
        for vid, coef in c.terms:
            cols[vid].append((c.name, coef))
    out.append("COLUMNS")
    for vid, entries in enumerate(cols):
        if not entries:
            entries = [("obj", 0.0)]
        out += [f"    {names[vid]}  {row}  {_num(coef)}" for row, coef in entries]

    out.append("RHS")
    out += [f"    RHS  {c.name}  {_num(c.rhs)}" for c in model.constraints if c.rhs != 0.0]
    out.append("RANGES")
    out.append("BOUNDS")
    for v in model.variables:
        nm = v.name
        if v.kind == "binary":
            out.append(f" BV BND  {nm}")
            if v.lower != 0.0:
                out.append(f" LO BND  {nm}  {_num(v.lower)}")
            if v.upper != 1.0:
                out.append(f" UP BND  {nm}  {_num(v.upper)}")
            continue
        lo, up = v.lower, v.upper
        if lo == up:
            out.append(f" FX BND  {nm}  {_num(lo)}")
        elif lo == -INF and up == INF:
            out.append(f" FR BND  {nm}")
        else:
            if lo == -INF:
                out.append(f" MI BND  {nm}")
            elif lo != 0.0:
                out.append(f" LO BND  {nm}  {_num(lo)}")
            if up != INF:
                out.append(f" UP BND  {nm}  {_num(up)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


_SECTIONS = {"NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA"}


def import_mps(text: str) -> MilpModel:
    """Parse free-format MPS produced by :func:`export_mps` (or similar)."""
    meta: dict = {}
    sense = "min"
    obj_row = None
    row_order: list[str] = []
    row_sense: dict[str, str] = {}
    rhs: dict[str, float] = {}
    ranges: dict[str, float] = {}
    col_order: list[str] = []
    col_entries: dict[str, list[tuple[str, float]]] = {}
    integer: set[str] = set()
    bounds: dict[str, list] = {}
    section = None
    in_int = False
    ended = False

    def fnum(tok, lineno):
        try:
            return float(tok)
        except ValueError:
            raise MpsParseError(f"bad number {tok!r}", section, lineno) from None

    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        if raw.startswith("*"):
            parts = raw[1:].split()
            if len(parts) == 2 and parts[0] in ("kind", "instance_digest", "draw_digest"):
                meta[parts[0]] = parts[1]
            continue
        toks = raw.split()
        if not raw[0].isspace():
            head = toks[0].upper()
            if head not in _SECTIONS:
                raise MpsParseError(f"unknown section {toks[0]!r}", toks[0], lineno)
            section = head
            if head == "NAME":
                meta.setdefault("kind", toks[1] if len(toks) > 1 else "model")
            elif head == "OBJSENSE" and len(toks) > 1:
                sense = _objsense(toks[1], lineno)
            elif head == "ENDATA":
                ended = True
                break
            continue
        if section is None:
            raise MpsParseError("data before first section", None, lineno)
        if section == "OBJSENSE":
            sense = _objsense(toks[0], lineno)
        elif section == "ROWS":
            if len(toks) != 2:
                raise MpsParseError("expected '<type> <name>'", section, lineno)
            code, nm = toks[0].upper(), toks[1]
            if code == "N":
                if obj_row is None:
                    obj_row = nm
                continue
            if code not in _CODE_SENSE:
                raise MpsParseError(f"unknown row type {code!r}", section, lineno)
            if nm in row_sense:
                raise MpsParseError(f"duplicate row {nm!r}", section, lineno)
            row_order.append(nm)
            row_sense[nm] = _CODE_SENSE[code]
        elif section == "COLUMNS":
            if len(toks) >= 3 and toks[1].strip("'\"").upper() == "MARKER":
                mk = toks[2].strip("'\"").upper()
                in_int = mk == "INTORG"
                continue
            if len(toks) not in (3, 5):
                raise MpsParseError("expected '<col> <row> <value> [<row> <value>]'", section, lineno)
            col = toks[0]
            if col not in col_entries:
                col_order.append(col)
                col_entries[col] = []
            if in_int:
                integer.add(col)
            for k in range(1, len(toks), 2):
                row, val = toks[k], fnum(toks[k + 1], lineno)
                if row != obj_row and row not in row_sense:
                    raise MpsParseError(f"unknown row {row!r}", section, lineno)
                col_entries[col].append((row, val))
        elif section in ("RHS", "RANGES"):
            if len(toks) not in (3, 5):
                raise MpsParseError("expected '<set> <row> <value> [<row> <value>]'", section, lineno)
            for k in range(1, len(toks), 2):
                row, val = toks[k], fnum(toks[k + 1], lineno)
                if row == obj_row and section == "RHS":
                    continue
                if row not in row_sense:
                    raise MpsParseError(f"unknown row {row!r}", section, lineno)
                (rhs if section == "RHS" else ranges)[row] = val
        elif section == "BOUNDS":
            if len(toks) < 3:
                raise MpsParseError("expected '<type> <set> <col> [<value>]'", section, lineno)
            btype, col = toks[0].upper(), toks[2]
            if col not in col_entries:
                raise MpsParseError(f"bound on unknown column {col!r}", section, lineno)
            val = fnum(toks[3], lineno) if len(toks) > 3 else None
            if btype in ("UP", "LO", "FX") and val is None:
                raise MpsParseError(f"{btype} bound needs a value", section, lineno)
            if btype not in ("UP", "LO", "FX", "FR", "MI", "PL", "BV"):
                raise MpsParseError(f"unsupported bound type {btype!r}", section, lineno)
            bounds.setdefault(col, []).append((btype, val))
        elif section == "NAME":
            continue
    if not ended:
        raise MpsParseError("missing ENDATA", section, None)

    variables = []
    for vid, col in enumerate(col_order):
        kind = "binary" if col in integer else "continuous"
        lo, up = 0.0, (1.0 if kind == "binary" else INF)
        for btype, val in bounds.get(col, []):
            if btype == "BV":
                kind, lo, up = "binary", 0.0, 1.0
            elif btype == "UP":
                up = val
            elif btype == "LO":
                lo = val
            elif btype == "FX":
                lo = up = val
            elif btype == "FR":
                lo, up = -INF, INF
            elif btype == "MI":
                lo = -INF
            elif btype == "PL":
                up = INF
        if kind == "binary" and not (lo >= 0.0 and up <= 1.0):
            raise MpsParseError(f"integer column {col!r} is not binary", "BOUNDS", None)
        variables.append(VarRef(vid, kind, lo, up, parse_tag(col)))
    vid_of = {col: k for k, col in enumerate(col_order)}

    row_terms: dict[str, list] = {nm: [] for nm in row_order}
    objective = []
    for col in col_order:
        for row, val in col_entries[col]:
            if row == obj_row:
                if val != 0.0:
                    objective.append((vid_of[col], val))
            elif val != 0.0:
                row_terms[row].append((vid_of[col], val))

    constraints = []
    for nm in row_order:
        s, b = row_sense[nm], rhs.get(nm, 0.0)
        terms = tuple(row_terms[nm])
        if nm not in ranges:
            constraints.append(LinConstraint(terms, s, b, parse_tag(nm)))
            continue
        rg = ranges[nm]
        if s == "<=":
            lo, hi = b - abs(rg), b
        elif s == ">=":
            lo, hi = b, b + abs(rg)
        else:
            lo, hi = (b, b + rg) if rg >= 0 else (b + rg, b)
        constraints.append(LinConstraint(terms, ">=", lo, parse_tag(nm + "_lo")))
        constraints.append(LinConstraint(terms, "<=", hi, parse_tag(nm + "_hi")))

    m = MilpModel(variables, constraints, objective, sense, meta)
    m.meta["counts"] = model_counts(m)
    return m


def _objsense(tok, lineno):
    t = tok.upper()
    if t in ("MAX", "MAXIMIZE"):
        return "max"
    if t in ("MIN", "MINIMIZE"):
        return "min"
    raise MpsParseError(f"unknown objective sense {tok!r}", "OBJSENSE", lineno)
