"""Typed state variables and immutable variable evaluations.

Values are plain Python objects: ``bool`` for booleans, ``int`` for bounded
integers and ``str`` for symbols.  A :class:`Domain` fixes which values a
variable (or channel) may hold; every domain is finite.
"""
from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from ..errors import KindMismatch, OverlapError, UnknownVariable

BOOL = "bool"
INT = "int"
SYM = "sym"

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


def kind_of(value) -> str:
    # bool first: bool is a subclass of int
    if isinstance(value, bool):
        return BOOL
    if isinstance(value, int):
        return INT
    if isinstance(value, str):
        return SYM
    raise TypeError(f"unsupported value {value!r}")


def render_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


@dataclass(frozen=True)
class Domain:
    kind: str
    lo: int | None = None
    hi: int | None = None
    symbols: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind == INT:
            if self.lo is None or self.hi is None or self.lo > self.hi:
                raise ValueError(f"bad integer range [{self.lo}..{self.hi}]")
            if self.lo < INT64_MIN or self.hi > INT64_MAX:
                raise ValueError("integer range exceeds signed 64-bit")
        elif self.kind == SYM:
            if not self.symbols or len(set(self.symbols)) != len(self.symbols):
                raise ValueError("symbol domain needs distinct enumerants")
        elif self.kind != BOOL:
            raise ValueError(f"unknown kind {self.kind!r}")

    @classmethod
    def boolean(cls) -> Domain:
        return cls(BOOL)

    @classmethod
    def integer(cls, lo: int, hi: int) -> Domain:
        return cls(INT, lo, hi)

    @classmethod
    def enum(cls, *symbols: str) -> Domain:
        return cls(SYM, symbols=tuple(symbols))

    def values(self) -> tuple:
        if self.kind == BOOL:
            return (False, True)
        if self.kind == INT:
            return tuple(range(self.lo, self.hi + 1))
        return self.symbols

    def __len__(self):
        if self.kind == BOOL:
            return 2
        if self.kind == INT:
            return self.hi - self.lo + 1
        return len(self.symbols)

    def __contains__(self, value) -> bool:
        try:
            k = kind_of(value)
        except TypeError:
            return False
        if k != self.kind:
            return False
        if k == INT:
            return self.lo <= value <= self.hi
        if k == SYM:
            return value in self.symbols
        return True

    def contains_domain(self, other: Domain) -> bool:
        """True iff every value of ``other`` belongs to this domain."""
        if self.kind != other.kind:
            return False
        if self.kind == INT:
            return self.lo <= other.lo and other.hi <= self.hi
        if self.kind == SYM:
            return set(other.symbols) <= set(self.symbols)
        return True

    def default(self):
        if self.kind == BOOL:
            return False
        if self.kind == INT:
            return 0 if self.lo <= 0 <= self.hi else self.lo
        return self.symbols[0]

    def render(self) -> str:
        if self.kind == BOOL:
            return "bool"
        if self.kind == INT:
            return f"int[{self.lo}..{self.hi}]"
        return "{" + ", ".join(self.symbols) + "}"


@dataclass(frozen=True)
class VarSignature:
    """A declared state variable; ``default`` is the value used when the
    initial declarator does not pin the variable."""

    name: str
    domain: Domain
    default: object = field(default=None)

    def __post_init__(self):
        if self.default is None:
            object.__setattr__(self, "default", self.domain.default())
        elif self.default not in self.domain:
            raise KindMismatch(
                f"default {render_value(self.default)} of {self.name} "
                f"is not in {self.domain.render()}"
            )

    @property
    def kind(self) -> str:
        return self.domain.kind


class Evaluation(Mapping):
    """An immutable map from variable names to values.

    Equality is kind-strict, so ``{x: True}`` and ``{x: 1}`` differ even
    though Python considers ``True == 1``.
    """

    __slots__ = ("_data", "_hash")

    def __init__(self, bindings: Mapping | Iterable = ()):
        data = dict(bindings)
        for value in data.values():
            kind_of(value)
        self._data = data
        self._hash = None

    def __getitem__(self, name):
        return self._data[name]

    def __iter__(self):
        return iter(self._data)

    def __len__(self):
        return len(self._data)

    def _strict_items(self):
        return frozenset((k, kind_of(v), v) for k, v in self._data.items())

    def __eq__(self, other):
        if not isinstance(other, Evaluation):
            if isinstance(other, Mapping):
                other = Evaluation(other)
            else:
                return NotImplemented
        if self._data.keys() != other._data.keys():
            return False
        return all(
            kind_of(v) == kind_of(other._data[k]) and v == other._data[k]
            for k, v in self._data.items()
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._strict_items())
        return self._hash

    def __repr__(self):
        return "{" + ", ".join(f"{k}:{render_value(v)}" for k, v in self._data.items()) + "}"

    def render(self) -> str:
        """Compact ``a=1,b=true`` form used by the text formats."""
        return ",".join(f"{k}={render_value(v)}" for k, v in self._data.items())

    def sorted(self) -> Evaluation:
        return Evaluation(sorted(self._data.items()))

    def restrict(self, names: Iterable[str]) -> Evaluation:
        names = set(names)
        return Evaluation((k, v) for k, v in self._data.items() if k in names)


EMPTY = Evaluation()


def eval_update(base: Evaluation, var: str, value, signatures=None) -> Evaluation:
    """Return ``base`` with ``var`` rebound to ``value``.

    Without ``signatures`` the kind check compares against the current
    binding; with them, the value must also lie in the declared domain.
    """
    if var not in base:
        raise UnknownVariable(f"unknown variable {var!r}")
    if signatures is not None:
        sig = _lookup(signatures, var)
        if value not in sig.domain:
            raise KindMismatch(
                f"{render_value(value)} is not in {sig.domain.render()} (variable {var})"
            )
    elif kind_of(value) != kind_of(base[var]):
        raise KindMismatch(f"variable {var} holds {kind_of(base[var])}, got {kind_of(value)}")
    data = dict(base)
    data[var] = value
    return Evaluation(data)


def eval_merge(parts: Iterable[Mapping]) -> Evaluation:
    data = {}
    for part in parts:
        for k, v in part.items():
            if k in data:
                raise OverlapError(f"variable {k!r} bound by more than one part")
            data[k] = v
    return Evaluation(data)


def eval_override(base: Evaluation, partial: Mapping) -> Evaluation:
    """Right-biased override: pinned variables win, the rest carry over."""
    for k, v in partial.items():
        if k not in base:
            raise UnknownVariable(f"unknown variable {k!r} in partial evaluation")
        if kind_of(v) != kind_of(base[k]):
            raise KindMismatch(f"variable {k} holds {kind_of(base[k])}, got {kind_of(v)}")
    if not partial:
        return base
    data = dict(base)
    data.update(partial)
    return Evaluation(data)


def _lookup(signatures, name) -> VarSignature:
    if isinstance(signatures, Mapping):
        return signatures[name]
    for sig in signatures:
        if sig.name == name:
            return sig
    raise UnknownVariable(f"unknown variable {name!r}")
