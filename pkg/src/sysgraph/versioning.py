"""Content-addressed version store for graph iterations and increments.

Records live under ``.sgv/records/<id>.json`` as canonical JSON, where the
id is the SHA-256 digest of the graph's canonical serialization.  Each
lineage (graph name) has a head pointer in ``.sgv/heads/<name>``.
Writers serialize through a file lock; records are never rewritten except
to merge newly verified property labels.
"""
from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from filelock import FileLock

from .core.graph import SystemGraph, action_label
from .core.guards import render
from .core.values import render_value
from .errors import StorageError

DIGEST = "sha256"
KINDS = ("origin", "refinement", "horizontal-increment", "vertical-increment")
INCREMENT_KINDS = ("horizontal-increment", "vertical-increment")


def canonical_graph(g: SystemGraph) -> dict:
    """Order-independent description of a graph: sorted declarators and
    transitions, guards in normalized printed form."""
    return {
        "name": g.name,
        "vars": sorted([s.name, s.domain.render(), render_value(s.default)] for s in g.signatures),
        "channels": sorted(
            [c.name, c.capacity, c.domain.render(), c.external, [render_value(x) for x in c.initial]]
            for c in g.channels
        ),
        "declarators": sorted(
            [d.name, sorted([k, render_value(v)] for k, v in d.partial.items())] for d in g.declarators
        ),
        "transitions": sorted([t.source, render(t.guard), action_label(t.action), t.target] for t in g.transitions),
        "initial": g.initial,
        "initial_guard": render(g.initial_guard),
        "terminals": sorted(g.terminals),
        "propositions": sorted([p.name, render(p.formula)] for p in g.propositions),
        "labeling": sorted([r.prop, render(r.guard)] for r in g.labeling),
        "refinable": g.refinable,
    }


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def graph_digest(g: SystemGraph) -> str:
    return hashlib.sha256(canonical_json(canonical_graph(g)).encode("utf-8")).hexdigest()


@dataclass
class PropertyLabel:
    formula: str
    verdict: str  # "holds" or "fails"
    checker: str


@dataclass
class VersionRecord:
    id: str
    name: str
    kind: str
    parents: list[str]
    labels: list[PropertyLabel]
    timestamp: float
    source: str  # the graph in the modeling language
    digest: str = DIGEST
    refinement: dict | None = None  # {"mode": ..., "verdict": ...}
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> VersionRecord:
        data = dict(data)
        data["labels"] = [PropertyLabel(**x) for x in data.get("labels", [])]
        return cls(**data)

    def graph(self) -> SystemGraph:
        from .dsl import parse_source

        return parse_source(self.source, f"<record {self.id[:12]}>")

    def label_for(self, formula: str) -> PropertyLabel | None:
        key = _canonical_formula(formula)
        for lab in self.labels:
            if _canonical_formula(lab.formula) == key:
                return lab
        return None


def _canonical_formula(text: str) -> str:
    from .verification import parse_formula

    try:
        return parse_formula(text).canonical
    except Exception:
        return " ".join(text.split())


def _to_label(item) -> PropertyLabel:
    from . import __version__

    if isinstance(item, PropertyLabel):
        return item
    if hasattr(item, "satisfied") and hasattr(item, "formula"):
        return PropertyLabel(item.formula.canonical, "holds" if item.satisfied else "fails", f"sysgraph {__version__}")
    if isinstance(item, dict):
        return PropertyLabel(**item)
    formula, verdict, *rest = item
    if isinstance(verdict, bool):
        verdict = "holds" if verdict else "fails"
    return PropertyLabel(_canonical_formula(formula), verdict, rest[0] if rest else f"sysgraph {__version__}")


class VersionStore:
    def __init__(self, root=".sgv"):
        self.root = Path(root)

    @property
    def records_dir(self) -> Path:
        return self.root / "records"

    @property
    def heads_dir(self) -> Path:
        return self.root / "heads"

    def _lock(self) -> FileLock:
        self.root.mkdir(parents=True, exist_ok=True)
        return FileLock(str(self.root / "lock"))

    # -- reading ---------------------------------------------------------------------

    def exists(self, rid: str) -> bool:
        return (self.records_dir / f"{rid}.json").is_file()

    def load(self, rid: str, verify: bool = True) -> VersionRecord:
        path = self.records_dir / f"{rid}.json"
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise StorageError(f"no record {rid}") from None
        except (OSError, ValueError) as exc:
            raise StorageError(f"unreadable record {rid}: {exc}") from exc
        rec = VersionRecord.from_dict(data)
        if verify:
            actual = graph_digest(rec.graph())
            if actual != rec.id or rid != rec.id:
                raise StorageError(f"record {rid} does not match its content digest {actual}")
        return rec

    def ids(self) -> list[str]:
        if not self.records_dir.is_dir():
            return []
        return sorted(p.stem for p in self.records_dir.glob("*.json"))

    def records(self, verify: bool = True) -> list[VersionRecord]:
        return sorted((self.load(i, verify) for i in self.ids()), key=lambda r: (r.timestamp, r.id))

    def resolve(self, prefix: str) -> str:
        matches = [i for i in self.ids() if i.startswith(prefix)]
        if not matches:
            raise StorageError(f"no record matches {prefix!r}")
        if len(matches) > 1:
            raise StorageError(f"ambiguous id prefix {prefix!r}")
        return matches[0]

    def show(self, rid: str) -> VersionRecord:
        return self.load(self.resolve(rid))

    def head(self, name: str) -> str | None:
        path = self.heads_dir / name
        return path.read_text(encoding="utf-8").strip() if path.is_file() else None

    def log(self, name: str) -> list[VersionRecord]:
        """The lineage of ``name`` from its head back through parent links."""
        head = self.head(name)
        out, seen = [], set()
        stack = [head] if head else []
        while stack:
            rid = stack.pop(0)
            if rid in seen or not self.exists(rid):
                continue
            seen.add(rid)
            rec = self.load(rid)
            out.append(rec)
            stack.extend(rec.parents)
        return out

    def find_by_formula(self, text: str) -> list[VersionRecord]:
        key = _canonical_formula(text)
        return [r for r in self.records() if any(_canonical_formula(x.formula) == key for x in r.labels)]

    def is_dependent(self, g) -> bool:
        """Is ``g`` (a graph or record id) a part of some archived increment?"""
        rid = g if isinstance(g, str) else graph_digest(g)
        return any(r.kind in INCREMENT_KINDS and rid in r.parents for r in self.records(verify=False))

    def verify_all(self) -> list[str]:
        """Ids whose content digest or parent links are broken."""
        bad = []
        ids = set(self.ids())
        for rid in sorted(ids):
            try:
                rec = self.load(rid)
            except StorageError:
                bad.append(rid)
                continue
            if any(p not in ids for p in rec.parents):
                bad.append(rid)
        return bad

    # -- writing ---------------------------------------------------------------------

    def archive(self, g: SystemGraph, kind: str | None = None, parents=None, labels=(),
                refinement: dict | None = None, metadata: dict | None = None) -> VersionRecord:
        """Persist ``g`` and return its record.

        Without explicit ``parents`` the current head of the lineage becomes
        the parent.  Archiving identical content again returns the existing
        record, with any new property labels merged in.
        """
        from .dsl import print_graph

        rid = graph_digest(g)
        new_labels = [_to_label(x) for x in labels]
        with self._lock():
            self.records_dir.mkdir(parents=True, exist_ok=True)
            self.heads_dir.mkdir(parents=True, exist_ok=True)
            if self.exists(rid):
                rec = self.load(rid)
                changed = False
                for lab in new_labels:
                    old = rec.label_for(lab.formula)
                    if old is None:
                        rec.labels.append(lab)
                        changed = True
                    elif old != lab:
                        rec.labels[rec.labels.index(old)] = lab
                        changed = True
                if changed:
                    self._write(rec)
                self._set_head(g.name, rid)
                return rec

            if parents is None:
                head = self.head(g.name)
                parents = [head] if head and head != rid else []
            parents = list(parents)
            for p in parents:
                if not self.exists(p):
                    raise StorageError(f"dangling parent id {p}")
            if kind is None:
                kind = "refinement" if parents else "origin"
            if kind not in KINDS:
                raise StorageError(f"unknown record kind {kind!r}")
            if kind == "refinement" and refinement is None and parents:
                refinement = self._refinement_against(self.load(parents[0]).graph(), g)
            rec = VersionRecord(
                id=rid,
                name=g.name,
                kind=kind,
                parents=parents,
                labels=new_labels,
                timestamp=time.time(),
                source=print_graph(g),
                refinement=refinement,
                metadata=dict(metadata or {}),
            )
            self._write(rec)
            self._set_head(g.name, rid)
            return rec

    @staticmethod
    def _refinement_against(old: SystemGraph, new: SystemGraph) -> dict:
        from .equivalence import refine_check

        try:
            report = refine_check(old, new, "bisim")
            if not report.holds:
                sim = refine_check(old, new, "sim")
                if sim.holds:
                    report = sim
        except Exception as exc:  # lowering problems are recorded, not fatal
            return {"mode": "bisimulation", "verdict": "unknown", "error": str(exc)}
        return {"mode": report.mode, "verdict": report.verdict}

    def _write(self, rec: VersionRecord) -> None:
        path = self.records_dir / f"{rec.id}.json"
        tmp = path.with_suffix(".tmp")
        try:
            tmp.write_text(rec.to_json(), encoding="utf-8")
            os.replace(tmp, path)
        except OSError as exc:
            raise StorageError(f"cannot write record {rec.id}: {exc}") from exc

    def _set_head(self, name: str, rid: str) -> None:
        try:
            (self.heads_dir / name).write_text(rid + "\n", encoding="utf-8")
        except OSError as exc:
            raise StorageError(f"cannot update head of {name}: {exc}") from exc
