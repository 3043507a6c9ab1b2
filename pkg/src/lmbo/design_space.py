"""Mixed hierarchical design spaces.

A design space is an ordered list of variables. Each variable has a kind
(continuous, integer, ordinal, categorical) and a role (neutral, meta,
decreed). A decreed variable only exists when its meta parent takes one of
the values listed in ``active_when``; otherwise it is inactive and its slot
holds a canonical filler value (lower bound / first level).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

KINDS = ("continuous", "integer", "ordinal", "categorical")
ROLES = ("neutral", "meta", "decreed")

DEFAULT_ENUMERATION_CAP = 100_000


class DesignSpaceError(ValueError):
    """Invalid design-space declaration or out-of-domain value."""


@dataclass(frozen=True)
class VariableSpec:
    """One design variable.

    ``bounds`` is used by continuous and integer kinds, ``levels`` by ordinal
    (numbers, strictly increasing) and categorical (distinct labels) kinds.
    """

    name: str
    kind: str
    bounds: tuple[float, float] | None = None
    levels: tuple[Any, ...] | None = None
    role: str = "neutral"
    parent: str | None = None
    active_when: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DesignSpaceError(f"{self.name}: unknown kind {self.kind!r}")
        if self.role not in ROLES:
            raise DesignSpaceError(f"{self.name}: unknown role {self.role!r}")
        if self.kind in ("continuous", "integer"):
            if self.bounds is None or len(self.bounds) != 2:
                raise DesignSpaceError(f"{self.name}: {self.kind} needs (lo, hi) bounds")
            lo, hi = self.bounds
            if self.kind == "integer":
                if int(lo) != lo or int(hi) != hi:
                    raise DesignSpaceError(f"{self.name}: integer bounds must be whole numbers")
                lo, hi = int(lo), int(hi)
            else:
                lo, hi = float(lo), float(hi)
            if not lo < hi:
                raise DesignSpaceError(f"{self.name}: bounds need lo < hi, got {self.bounds}")
            object.__setattr__(self, "bounds", (lo, hi))
        else:
            if not self.levels:
                raise DesignSpaceError(f"{self.name}: empty level list")
            levels = tuple(self.levels)
            if self.kind == "ordinal":
                levels = tuple(_as_number(v) for v in levels)
                if any(b <= a for a, b in zip(levels, levels[1:])):
                    raise DesignSpaceError(f"{self.name}: ordinal levels must be strictly increasing")
            else:
                if len(levels) < 2:
                    raise DesignSpaceError(f"{self.name}: categorical needs at least 2 levels")
                if len(set(levels)) != len(levels):
                    raise DesignSpaceError(f"{self.name}: categorical levels must be distinct")
            object.__setattr__(self, "levels", levels)
        if self.role == "meta" and self.kind == "continuous":
            raise DesignSpaceError(f"{self.name}: meta variables must be discrete")
        if self.role == "decreed":
            if self.parent is None or not self.active_when:
                raise DesignSpaceError(f"{self.name}: decreed variable needs parent and active_when")
            object.__setattr__(self, "active_when", frozenset(self.active_when))
        elif self.parent is not None:
            raise DesignSpaceError(f"{self.name}: only decreed variables take a parent")

    @property
    def is_discrete(self) -> bool:
        return self.kind != "continuous"

    def domain(self) -> tuple:
        """Finite value set of a discrete variable, in canonical order."""
        if self.kind == "integer":
            lo, hi = self.bounds
            return tuple(range(lo, hi + 1))
        if self.kind in ("ordinal", "categorical"):
            return self.levels
        raise DesignSpaceError(f"{self.name}: continuous variable has no finite domain")

    @property
    def cardinality(self) -> int:
        if self.kind == "integer":
            return self.bounds[1] - self.bounds[0] + 1
        return len(self.domain())

    @property
    def filler(self):
        """Value written into the slot when the variable is inactive."""
        if self.kind in ("continuous", "integer"):
            return self.bounds[0]
        return self.levels[0]

    def contains(self, value) -> bool:
        if self.kind == "continuous":
            try:
                v = float(value)
            except (TypeError, ValueError):
                return False
            return self.bounds[0] <= v <= self.bounds[1]
        if self.kind == "integer":
            if isinstance(value, bool) or not isinstance(value, (int, np.integer, float)):
                return False
            return int(value) == value and self.bounds[0] <= value <= self.bounds[1]
        return value in self.levels

    def normalize(self, value):
        """Coerce a value to its canonical Python type (int, float or label)."""
        if not self.contains(value):
            raise DesignSpaceError(f"{self.name}: value {value!r} outside domain")
        if self.kind == "continuous":
            return float(value)
        if self.kind == "integer":
            return int(value)
        return self.levels[self.levels.index(value)]

    @property
    def encoded_width(self) -> int:
        return len(self.levels) if self.kind == "categorical" else 1

    def encode(self, value) -> list[float]:
        if self.kind == "categorical":
            onehot = [0.0] * len(self.levels)
            onehot[self.levels.index(value)] = 1.0
            return onehot
        if self.kind == "ordinal":
            n = len(self.levels)
            return [self.levels.index(value) / (n - 1) if n > 1 else 0.0]
        lo, hi = self.bounds
        return [(float(value) - lo) / (hi - lo)]

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"name": self.name, "kind": self.kind, "role": self.role}
        if self.bounds is not None:
            d["bounds"] = list(self.bounds)
        if self.levels is not None:
            d["levels"] = list(self.levels)
        if self.role == "decreed":
            d["parent"] = self.parent
            d["active_when"] = sorted(self.active_when, key=repr)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VariableSpec":
        unknown = set(d) - {"name", "kind", "bounds", "levels", "role", "parent", "active_when"}
        if unknown:
            raise DesignSpaceError(f"unknown variable keys: {sorted(unknown)}")
        try:
            name, kind = d["name"], d["kind"]
        except KeyError as exc:
            raise DesignSpaceError(f"variable declaration missing {exc}") from None
        return cls(
            name=name,
            kind=kind,
            bounds=tuple(d["bounds"]) if "bounds" in d else None,
            levels=tuple(d["levels"]) if "levels" in d else None,
            role=d.get("role", "neutral"),
            parent=d.get("parent"),
            active_when=frozenset(d.get("active_when", ())),
        )


def _as_number(v):
    if isinstance(v, bool) or not isinstance(v, (int, float, np.integer, np.floating)):
        raise DesignSpaceError(f"ordinal level {v!r} is not a number")
    return int(v) if float(v).is_integer() else float(v)


def continuous(name, lo, hi, **kw) -> VariableSpec:
    return VariableSpec(name, "continuous", bounds=(lo, hi), **kw)


def integer(name, lo, hi, **kw) -> VariableSpec:
    return VariableSpec(name, "integer", bounds=(lo, hi), **kw)


def ordinal(name, levels, **kw) -> VariableSpec:
    return VariableSpec(name, "ordinal", levels=tuple(levels), **kw)


def categorical(name, levels, **kw) -> VariableSpec:
    return VariableSpec(name, "categorical", levels=tuple(levels), **kw)


@dataclass(frozen=True)
class DesignPoint:
    """A point of a design space with its activity mask.

    Points produced by :class:`DesignSpace` are canonical: inactive slots
    hold the variable's filler value, so equality and hashing ignore dead
    coordinates.
    """

    values: tuple
    active: tuple[bool, ...]

    def as_dict(self, names: Sequence[str]) -> dict:
        return dict(zip(names, self.values))


class DesignSpace:
    """Validated, immutable collection of :class:`VariableSpec`."""

    def __init__(self, variables: Sequence[VariableSpec]):
        variables = tuple(variables)
        if not variables:
            raise DesignSpaceError("design space needs at least one variable")
        names = [v.name for v in variables]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise DesignSpaceError(f"duplicate variable names: {dupes}")
        index = {n: i for i, n in enumerate(names)}
        for v in variables:
            if v.role != "decreed":
                continue
            if v.parent not in index:
                raise DesignSpaceError(f"{v.name}: decree parent {v.parent!r} not in space")
            parent = variables[index[v.parent]]
            if parent.role != "meta":
                raise DesignSpaceError(f"{v.name}: decree parent {v.parent!r} is not a meta variable")
            bad = [a for a in v.active_when if not parent.contains(a)]
            if bad:
                raise DesignSpaceError(f"{v.name}: active_when values {bad} outside parent domain")
        # A parent is always meta and a meta is never decreed, so the decree
        # graph has depth one and cannot contain cycles.
        self.variables = variables
        self.names = tuple(names)
        self._index = index
        self._parent_idx = tuple(index[v.parent] if v.role == "decreed" else -1 for v in variables)
        widths = [v.encoded_width for v in variables]
        offsets = np.concatenate([[0], np.cumsum(widths)]).astype(int)
        self.slices = tuple(slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:]))
        self.encoded_dim = int(offsets[-1])

    def __len__(self):
        return len(self.variables)

    def __getitem__(self, name: str) -> VariableSpec:
        return self.variables[self._index[name]]

    def __repr__(self):
        return f"DesignSpace({', '.join(self.names)})"

    @property
    def is_finite(self) -> bool:
        return all(v.is_discrete for v in self.variables)

    def to_list(self) -> list[dict]:
        return [v.to_dict() for v in self.variables]

    @classmethod
    def from_list(cls, decls: Sequence[dict]) -> "DesignSpace":
        return cls([VariableSpec.from_dict(d) for d in decls])

    # -- activity and canonical points ---------------------------------------

    def activity(self, values: Sequence) -> tuple[bool, ...]:
        """Activity mask of a complete, in-domain value assignment."""
        if len(values) != len(self.variables):
            raise DesignSpaceError(f"expected {len(self.variables)} values, got {len(values)}")
        for v, x in zip(self.variables, values):
            if not v.contains(x):
                raise DesignSpaceError(f"{v.name}: value {x!r} outside domain")
        return tuple(
            p < 0 or values[p] in v.active_when
            for v, p in zip(self.variables, self._parent_idx)
        )

    def point(self, values) -> DesignPoint:
        """Build a canonical point from a sequence or a name->value mapping.

        Inactive variables may be omitted from a mapping.
        """
        if isinstance(values, dict):
            filled = []
            for v in self.variables:
                if v.name in values:
                    filled.append(values[v.name])
                else:
                    filled.append(v.filler)
            unknown = set(values) - set(self.names)
            if unknown:
                raise DesignSpaceError(f"unknown variables: {sorted(unknown)}")
            values = filled
        values = [v.normalize(x) for v, x in zip(self.variables, values)]
        active = self.activity(values)
        canon = tuple(x if a else v.filler for v, x, a in zip(self.variables, values, active))
        return DesignPoint(canon, active)

    # -- encoding ------------------------------------------------------------

    def encode(self, point: DesignPoint) -> np.ndarray:
        """Map a point to the unit hypercube (one-hot blocks for categoricals)."""
        out = np.empty(self.encoded_dim)
        for v, sl, x, a in zip(self.variables, self.slices, point.values, point.active):
            out[sl] = v.encode(x if a else v.filler)
        return out

    def encode_many(self, points: Sequence[DesignPoint]) -> np.ndarray:
        if not points:
            return np.empty((0, self.encoded_dim))
        return np.vstack([self.encode(p) for p in points])

    # -- sampling ------------------------------------------------------------

    def sample_doe(self, n: int, seed: int) -> list[DesignPoint]:
        """Latin-hypercube design of ``n`` canonical points.

        Continuous variables are stratified directly; discrete variables are
        stratified on the level index and snapped to the level. Duplicates
        are possible on small discrete spaces.
        """
        if n < 1:
            raise DesignSpaceError("n must be >= 1")
        rng = np.random.default_rng(seed)
        cols = []
        for v in self.variables:
            u = (rng.permutation(n) + rng.random(n)) / n
            if v.kind == "continuous":
                lo, hi = v.bounds
                cols.append([float(lo + t * (hi - lo)) for t in u])
            else:
                dom = v.domain()
                idx = np.minimum((u * len(dom)).astype(int), len(dom) - 1)
                cols.append([dom[i] for i in idx])
        return [self.point(row) for row in zip(*cols)]

    def sample_random(self, n: int, seed: int) -> list[DesignPoint]:
        """Independent uniform draws (per-variable uniform over levels/bounds)."""
        rng = np.random.default_rng(seed)
        cols = []
        for v in self.variables:
            if v.kind == "continuous":
                lo, hi = v.bounds
                cols.append([float(t) for t in rng.uniform(lo, hi, n)])
            else:
                dom = v.domain()
                cols.append([dom[i] for i in rng.integers(0, len(dom), n)])
        return [self.point(row) for row in zip(*cols)]

    # -- enumeration ---------------------------------------------------------

    def _meta_assignments(self):
        metas = [i for i, v in enumerate(self.variables) if v.role == "meta"]
        doms = [self.variables[i].domain() for i in metas]
        return metas, list(itertools.product(*doms))

    def cardinality(self) -> int:
        """Number of distinct canonical points of a finite space."""
        if not self.is_finite:
            raise DesignSpaceError("space has continuous variables; cardinality is infinite")
        metas, assignments = self._meta_assignments()
        total = 0
        for combo in assignments:
            meta_val = dict(zip(metas, combo))
            count = 1
            for i, v in enumerate(self.variables):
                if v.role == "meta":
                    continue
                p = self._parent_idx[i]
                if p < 0 or meta_val[p] in v.active_when:
                    count *= v.cardinality
            total += count
        return total

    def enumerate(self, cap: int = DEFAULT_ENUMERATION_CAP) -> list[DesignPoint]:
        """Every distinct canonical point, ordered by meta assignment then
        lexicographically over the remaining variables' level order."""
        size = self.cardinality()
        if size > cap:
            raise DesignSpaceError(f"space has {size} points, above the enumeration cap {cap}")
        metas, assignments = self._meta_assignments()
        out = []
        for combo in assignments:
            meta_val = dict(zip(metas, combo))
            doms = []
            for i, v in enumerate(self.variables):
                p = self._parent_idx[i]
                if v.role == "meta":
                    doms.append((meta_val[i],))
                elif p < 0 or meta_val[p] in v.active_when:
                    doms.append(v.domain())
                else:
                    doms.append((v.filler,))
            for values in itertools.product(*doms):
                out.append(DesignPoint(tuple(values), self.activity(values)))
        return out


def build_space(specs: Sequence[VariableSpec | dict]) -> DesignSpace:
    """Validate a list of variable specs (or their dict declarations)."""
    return DesignSpace([s if isinstance(s, VariableSpec) else VariableSpec.from_dict(s) for s in specs])


def decree_activity(space: DesignSpace, values: Sequence) -> tuple[bool, ...]:
    return space.activity(values)


def neuron_levels(lo: int, hi: int, step: int) -> tuple[int, ...]:
    return tuple(range(lo, hi + 1, step))


def aero_space() -> DesignSpace:
    """Layer count, widths on a step-5 grid and activation, 2-3 hidden layers."""
    widths = neuron_levels(10, 80, 5)
    return DesignSpace([
        integer("N", 2, 3, role="meta"),
        ordinal("N1", widths),
        ordinal("N2", widths),
        ordinal("N3", widths, role="decreed", parent="N", active_when={3}),
        categorical("F", ("relu", "tanh", "sigmoid")),
    ])


def self_noise_space() -> DesignSpace:
    """Layer count, integer widths in [5, 40] and activation."""
    return DesignSpace([
        integer("N", 2, 3, role="meta"),
        integer("N1", 5, 40),
        integer("N2", 5, 40),
        integer("N3", 5, 40, role="decreed", parent="N", active_when={3}),
        categorical("F", ("relu", "tanh", "sigmoid")),
    ])

