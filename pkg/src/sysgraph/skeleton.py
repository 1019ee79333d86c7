"""Skeleton bundles: the constraint-preserving scaffold handed to implementers.

A bundle freezes the variable table and the control flow, exposes one
overridable hook per named action, one resolver interface per detected
divergence and one descriptor per channel.  Two renderings exist: canonical
JSON (``bundle-json``) and a class-shaped pseudocode (``reference-text``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from .core.graph import Named, Receive, Send, SystemGraph, action_label
from .core.guards import render
from .errors import StageGateError, UnsupportedFeature

SCHEMA_VERSION = 1
BACKENDS = ("bundle-json", "reference-text")


def _camel(name: str) -> str:
    return "".join(part[:1].upper() + part[1:] for part in name.replace("-", "_").split("_") if part)


def load_schema() -> dict:
    text = resources.files("sysgraph").joinpath("skeleton.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


@dataclass
class SkeletonBundle:
    system: str
    variables: list[dict]
    states: list[dict]
    control_flow: list[dict]
    effect_hooks: list[dict]
    divergence_interfaces: list[dict]
    channel_descriptors: list[dict]
    entry_point: dict
    terminals: list[str]
    observations: dict = field(default_factory=lambda: {"propositions": [], "labeling": []})
    refinable: bool = False

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "system": self.system,
            "refinable": self.refinable,
            "variables": self.variables,
            "states": self.states,
            "control_flow": {"immutable": True, "rows": self.control_flow},
            "effect_hooks": self.effect_hooks,
            "divergence_interfaces": self.divergence_interfaces,
            "channel_descriptors": self.channel_descriptors,
            "entry_point": self.entry_point,
            "terminals": self.terminals,
            "observations": self.observations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> SkeletonBundle:
        validate_bundle(doc)
        return cls(
            system=doc["system"],
            variables=doc["variables"],
            states=doc["states"],
            control_flow=doc["control_flow"]["rows"],
            effect_hooks=doc["effect_hooks"],
            divergence_interfaces=doc["divergence_interfaces"],
            channel_descriptors=doc["channel_descriptors"],
            entry_point=doc["entry_point"],
            terminals=doc["terminals"],
            observations=doc["observations"],
            refinable=doc.get("refinable", False),
        )


def validate_bundle(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` violates the shipped schema."""
    jsonschema.validate(doc, load_schema())


def _kind(a) -> str:
    if isinstance(a, Send):
        return "send"
    if isinstance(a, Receive):
        return "receive"
    return "named"


def build_bundle(g: SystemGraph) -> SkeletonBundle:
    from .runtime import detect_divergences

    if not isinstance(g, SystemGraph):
        raise UnsupportedFeature("skeletons are generated per system graph; generate one per component")
    hooks = [{"action": a, "hook": f"on{_camel(a)}"} for a in g.named_actions]
    divergences = []
    for i, d in enumerate(detect_divergences(g)):
        divergences.append({
            "interface": f"Resolve{_camel(d.declarator)}{i}" if i else f"Resolve{_camel(d.declarator)}",
            "declarator": d.declarator,
            "options": [{"action": t.label, "guard": render(t.guard), "target": t.target} for t in d.pair],
        })
    channels = []
    for c in g.channels:
        desc = {
            "name": c.name,
            "domain": c.domain.render(),
            "capacity": c.capacity,
            "initial": list(c.initial),
        }
        if c.external:
            desc["kind"] = "external"
            desc["adapter"] = {"interface": f"{_camel(c.name)}Adapter", "domain": c.domain.render(),
                               "capacity": c.capacity}
        else:
            desc["kind"] = "internal"
            desc["buffer"] = "rendezvous" if c.capacity == 0 else "fifo"
            desc["operations"] = ["send", "receive"]
        channels.append(desc)
    return SkeletonBundle(
        system=g.name,
        variables=[
            {"name": s.name, "domain": s.domain.render(), "default": s.default, "immutable": True}
            for s in g.signatures
        ],
        states=[{"name": d.name, "pins": dict(d.partial.items())} for d in g.declarators],
        control_flow=[
            {"source": t.source, "guard": render(t.guard), "action": action_label(t.action),
             "kind": _kind(t.action), "target": t.target}
            for t in g.transitions
        ],
        effect_hooks=hooks,
        divergence_interfaces=divergences,
        channel_descriptors=channels,
        entry_point={"declarator": g.initial, "guard": render(g.initial_guard)},
        terminals=list(g.terminals),
        observations={
            "propositions": [{"name": p.name, "formula": render(p.formula)} for p in g.propositions],
            "labeling": [{"guard": render(r.guard), "prop": r.prop} for r in g.labeling],
        },
        refinable=g.refinable,
    )


def generate_skeleton(g: SystemGraph, backend: str = "bundle-json", verified: bool = False,
                      force: bool = False) -> tuple[SkeletonBundle, str]:
    """Build the bundle for ``g`` and render it with ``backend``.

    Only verified models are accepted unless ``force`` is set.
    """
    if backend not in BACKENDS:
        raise UnsupportedFeature(f"unknown backend {backend!r}; expected one of {', '.join(BACKENDS)}")
    if not verified and not force:
        raise StageGateError(f"{g.name} has no verified property; verify it first or pass force")
    bundle = build_bundle(g)
    doc = bundle.to_dict()
    validate_bundle(doc)
    if backend == "bundle-json":
        return bundle, bundle.to_json()
    return bundle, render_reference_text(bundle)


def _value_text(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def bundle_source(bundle: SkeletonBundle) -> str:
    """The bundle's shared fields written back out in the modeling language."""
    lines = [f"system {bundle.system} {{"]
    if bundle.variables:
        lines.append("  vars {")
        for v in bundle.variables:
            lines.append(f"    {v['name']}: {v['domain']} = {_value_text(v['default'])};")
        lines.append("  }")
    for c in bundle.channel_descriptors:
        text = f"  chan {c['name']}: {c['domain']} cap {c['capacity']}"
        if c["kind"] == "external":
            text += " external"
        if c["initial"]:
            text += " = [" + ", ".join(_value_text(x) for x in c["initial"]) + "]"
        lines.append(text + ";")
    entry = bundle.entry_point
    for s in bundle.states:
        body = ", ".join(f"{k}={_value_text(v)}" for k, v in s["pins"].items())
        text = f"  state {s['name']} {{{body}}}"
        if s["name"] == entry["declarator"]:
            text += " init"
            if entry["guard"] != "true":
                text += f" when {entry['guard']}"
        lines.append(text + ";")
    for row in bundle.control_flow:
        when = "" if row["guard"] == "true" else f" when {row['guard']}"
        lines.append(f"  trans {row['source']} -> {row['target']}{when} on {row['action']};")
    for p in bundle.observations["propositions"]:
        lines.append(f"  prop {p['name']} := {p['formula']};")
    for r in bundle.observations["labeling"]:
        lines.append(f"  label when {r['guard']} => {r['prop']};")
    if bundle.terminals:
        lines.append("  terminal " + ", ".join(bundle.terminals) + ";")
    if bundle.refinable:
        lines.append("  refinable;")
    lines.append("}")
    return "\n".join(lines) + "\n"


def bundle_to_graph(bundle) -> SystemGraph:
    """Inverse mapping: rebuild a system graph from a bundle (or its JSON document)."""
    from .dsl import parse_source

    if isinstance(bundle, dict):
        bundle = SkeletonBundle.from_dict(bundle)
    elif isinstance(bundle, str):
        bundle = SkeletonBundle.from_dict(json.loads(bundle))
    return parse_source(bundle_source(bundle), f"<bundle {bundle.system}>")


def render_reference_text(bundle: SkeletonBundle) -> str:
    """Class-shaped pseudocode: an abstract system base, the graph class with
    frozen control flow, and the interfaces an implementer must supply."""
    cls = _camel(bundle.system)
    out = [f"// skeleton for {bundle.system} (schema {SCHEMA_VERSION})", ""]
    out.append("abstract class SystemBase {")
    out.append("  final state: Evaluation")
    out.append("  final location: Declarator")
    out.append("  abstract step(): Transition?")
    out.append("  run() { while (!terminal(location)) { t = step(); if (t == null) break; apply(t) } }")
    out.append("}")
    out.append("")
    for iface in bundle.divergence_interfaces:
        out.append(f"interface {iface['interface']} {{")
        opts = " | ".join(f"{o['action']} -> {o['target']}" for o in iface["options"])
        out.append(f"  choose(state: Evaluation): {opts}   // at {iface['declarator']}")
        out.append("}")
        out.append("")
    for ch in bundle.channel_descriptors:
        if ch["kind"] == "external":
            ad = ch["adapter"]
            out.append(f"interface {ad['interface']} {{   // external channel {ch['name']}")
            out.append(f"  receive(): {ad['domain']}")
            out.append(f"  send(value: {ad['domain']})")
            out.append(f"  capacity = {ad['capacity']}")
            out.append("}")
            out.append("")
    if bundle.effect_hooks:
        out.append(f"interface {cls}Effects {{")
        for h in bundle.effect_hooks:
            out.append(f"  {h['hook']}(snapshot: Evaluation)   // effect of {h['action']}")
        out.append("}")
        out.append("")
    implements = [f"{cls}Effects"] if bundle.effect_hooks else []
    implements += [i["interface"] for i in bundle.divergence_interfaces]
    head = f"class {cls} extends SystemBase"
    if implements:
        head += " implements " + ", ".join(implements)
    out.append(head + " {")
    out.append("  // immutable state variables")
    for v in bundle.variables:
        out.append(f"  final var {v['name']}: {v['domain']} = {_value_text(v['default'])}")
    for c in bundle.channel_descriptors:
        if c["kind"] == "internal":
            out.append(f"  final chan {c['name']}: {c['domain']} [{c['buffer']}, cap {c['capacity']}]")
    out.append("")
    out.append("  // immutable declarators")
    for s in bundle.states:
        pins = ", ".join(f"{k}={_value_text(v)}" for k, v in s["pins"].items())
        out.append(f"  final declarator {s['name']} {{{pins}}}")
    out.append("")
    ep = bundle.entry_point
    out.append(f"  entry {ep['declarator']} when {ep['guard']}")
    if bundle.terminals:
        out.append("  terminal " + ", ".join(bundle.terminals))
    out.append("")
    out.append("  // immutable control flow")
    out.append("  final override step() {")
    for row in bundle.control_flow:
        out.append(f"    {row['source']}: when {row['guard']} do {row['action']} goto {row['target']}")
    out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"


__all__ = [
    "BACKENDS",
    "SCHEMA_VERSION",
    "SkeletonBundle",
    "build_bundle",
    "bundle_source",
    "bundle_to_graph",
    "generate_skeleton",
    "load_schema",
    "render_reference_text",
    "validate_bundle",
]
