"""Weighted contact network built from CDR records.

Nodes are subscriber numbers carrying an investigation status; edges are
unordered pairs keeping directional call tallies (Fig-style "out/in" labels).
Graphs are treated as immutable: merge and status changes produce new values.
"""

from __future__ import annotations

import itertools
import json
import string
from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum
from typing import Iterable, Sequence

from .cdr import CdrRecord


class NodeStatus(str, Enum):
    PATIENT = "Patient"
    SUSPECT = "Suspect"
    CLEARED = "Cleared"
    UNKNOWN = "Unknown"


# precedence used when merging webs: Patient wins over everything
_STATUS_RANK = {
    NodeStatus.PATIENT: 3,
    NodeStatus.SUSPECT: 2,
    NodeStatus.CLEARED: 1,
    NodeStatus.UNKNOWN: 0,
}

EdgeKind = str  # "call" | "proximity"


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class NodeInfo:
    subscriber: str
    status: NodeStatus
    label: str | None = None


@dataclass(frozen=True)
class EdgeStats:
    """Tallies for one unordered contact pair.

    out_count counts calls/SMS initiated by a_party toward b_party, in_count
    the reverse; sms_count is the subset of both tallies that were SMS (kept
    so interviews can down-weight non-physical contact). Proximity edges come
    from exposure notifications and carry zero tallies by definition.
    """

    a_party: str
    b_party: str
    out_count: int
    in_count: int
    first_contact: datetime
    last_contact: datetime
    sms_count: int = 0
    kind: EdgeKind = "call"

    def __post_init__(self) -> None:
        if self.first_contact > self.last_contact:
            raise GraphError("edge first_contact is after last_contact")
        if self.out_count < 0 or self.in_count < 0:
            raise GraphError("edge tallies must be non-negative")
        if self.kind == "call" and self.out_count + self.in_count < 1:
            raise GraphError("call edge must tally at least one event")

    def oriented(self, a_party: str) -> "EdgeStats":
        """The same edge with tallies expressed from `a_party`'s side."""
        if a_party == self.a_party:
            return self
        if a_party != self.b_party:
            raise GraphError(f"{a_party} is not an endpoint of this edge")
        return replace(
            self,
            a_party=self.b_party,
            b_party=self.a_party,
            out_count=self.in_count,
            in_count=self.out_count,
        )


def _edge_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


def _labels() -> Iterable[str]:
    """A, B, ..., Z, AA, AB, ... in assignment order."""
    for size in itertools.count(1):
        for letters in itertools.product(string.ascii_uppercase, repeat=size):
            yield "".join(letters)


@dataclass(frozen=True)
class ContactGraph:
    nodes: dict[str, NodeInfo]
    edges: dict[tuple[str, str], EdgeStats]

    def __post_init__(self) -> None:
        for key in self.edges:
            for endpoint in key:
                if endpoint not in self.nodes:
                    raise GraphError(f"edge endpoint {endpoint} has no node")

    @classmethod
    def empty(cls) -> "ContactGraph":
        return cls(nodes={}, edges={})

    def status_of(self, subscriber: str) -> NodeStatus:
        return self.nodes[subscriber].status

    def neighbors(self, subscriber: str) -> set[str]:
        out = set()
        for a, b in self.edges:
            if a == subscriber:
                out.add(b)
            elif b == subscriber:
                out.add(a)
        return out

    def with_status(self, subscriber: str, status: NodeStatus) -> "ContactGraph":
        node = self.nodes[subscriber]
        nodes = dict(self.nodes)
        nodes[subscriber] = replace(node, status=status)
        return ContactGraph(nodes=nodes, edges=self.edges)

    def with_proximity_edge(
        self, a: str, b: str, first: datetime, last: datetime
    ) -> "ContactGraph":
        """Add (or widen the time range of) a zero-tally proximity edge."""
        nodes = dict(self.nodes)
        taken = {n.label for n in nodes.values()}
        labels = (l for l in _labels() if l not in taken)
        for subscriber in (a, b):
            if subscriber not in nodes:
                nodes[subscriber] = NodeInfo(
                    subscriber, NodeStatus.UNKNOWN, next(labels)
                )
        edges = dict(self.edges)
        key = _edge_key(a, b)
        existing = edges.get(key)
        if existing is None:
            edges[key] = EdgeStats(
                a_party=a,
                b_party=b,
                out_count=0,
                in_count=0,
                first_contact=first,
                last_contact=last,
                kind="proximity",
            )
        else:
            edges[key] = replace(
                existing,
                first_contact=min(existing.first_contact, first),
                last_contact=max(existing.last_contact, last),
            )
        return ContactGraph(nodes=nodes, edges=edges)

    def call_event_count(self) -> int:
        return sum(e.out_count + e.in_count for e in self.edges.values())

    def structure(self) -> dict:
        """Label-free canonical form, for structural-equality checks."""
        edges = {}
        for key, e in sorted(self.edges.items()):
            o = e.oriented(key[0])
            edges["|".join(key)] = (
                o.out_count,
                o.in_count,
                o.first_contact.isoformat(),
                o.last_contact.isoformat(),
                o.sms_count,
                o.kind,
            )
        return {
            "nodes": {s: n.status.value for s, n in sorted(self.nodes.items())},
            "edges": edges,
        }


def build_graph(focal: str, records: Sequence[CdrRecord]) -> ContactGraph:
    """Build a single-subject graph: focal is the CDR owner, marked Patient.

    Every record must have a_party == focal; counterparts start Unknown with
    display aliases (B, C, ...) assigned in first-seen record order.
    """
    if not focal:
        raise GraphError("focal subscriber is empty")
    labels = _labels()
    nodes: dict[str, NodeInfo] = {
        focal: NodeInfo(focal, NodeStatus.PATIENT, next(labels))
    }
    edges: dict[tuple[str, str], EdgeStats] = {}
    for i, record in enumerate(records, start=1):
        if record.a_party != focal:
            raise GraphError(
                f"record {i} belongs to {record.a_party}, not focal {focal}"
            )
        counterpart = record.b_party
        if counterpart not in nodes:
            nodes[counterpart] = NodeInfo(counterpart, NodeStatus.UNKNOWN, next(labels))
        key = _edge_key(focal, counterpart)
        outgoing = record.call_type.outgoing
        sms = 1 if record.call_type.sms else 0
        existing = edges.get(key)
        if existing is None:
            edges[key] = EdgeStats(
                a_party=focal,
                b_party=counterpart,
                out_count=1 if outgoing else 0,
                in_count=0 if outgoing else 1,
                first_contact=record.timestamp,
                last_contact=record.timestamp,
                sms_count=sms,
            )
        else:
            edges[key] = replace(
                existing,
                out_count=existing.out_count + (1 if outgoing else 0),
                in_count=existing.in_count + (0 if outgoing else 1),
                first_contact=min(existing.first_contact, record.timestamp),
                last_contact=max(existing.last_contact, record.timestamp),
                sms_count=existing.sms_count + sms,
            )
    return ContactGraph(nodes=nodes, edges=edges)


def merge_graphs(g1: ContactGraph, g2: ContactGraph) -> ContactGraph:
    """Union of two webs: statuses by precedence, tallies summed, ranges unioned.

    g1's display aliases are kept; nodes new to g1 get fresh aliases in g2's
    own assignment order (aliases are rendering-only, so merge is commutative
    up to relabeling).
    """
    nodes = dict(g1.nodes)
    taken = {n.label for n in nodes.values()}
    fresh = (l for l in _labels() if l not in taken)
    g2_order = sorted(g2.nodes.values(), key=lambda n: n.label or "")
    for node in g2_order:
        mine = nodes.get(node.subscriber)
        if mine is None:
            nodes[node.subscriber] = replace(node, label=next(fresh))
        elif _STATUS_RANK[node.status] > _STATUS_RANK[mine.status]:
            nodes[node.subscriber] = replace(mine, status=node.status)

    edges = dict(g1.edges)
    for key, theirs in g2.edges.items():
        mine = edges.get(key)
        if mine is None:
            edges[key] = theirs
            continue
        aligned = theirs.oriented(mine.a_party)
        edges[key] = replace(
            mine,
            out_count=mine.out_count + aligned.out_count,
            in_count=mine.in_count + aligned.in_count,
            first_contact=min(mine.first_contact, aligned.first_contact),
            last_contact=max(mine.last_contact, aligned.last_contact),
            sms_count=mine.sms_count + aligned.sms_count,
            kind="call" if "call" in (mine.kind, aligned.kind) else "proximity",
        )
    return ContactGraph(nodes=nodes, edges=edges)


_DOT_COLORS = {
    NodeStatus.PATIENT: "crimson",
    NodeStatus.SUSPECT: "orange",
    NodeStatus.CLEARED: "palegreen",
    NodeStatus.UNKNOWN: "lightgray",
}


def graph_to_json_doc(graph: ContactGraph) -> dict:
    """GraphJSON document: sorted node and edge arrays for the console UI."""
    nodes = [
        {"id": n.subscriber, "status": n.status.value, "label": n.label}
        for _, n in sorted(graph.nodes.items())
    ]
    edges = []
    for key, e in sorted(graph.edges.items()):
        edges.append(
            {
                "a": e.a_party,
                "b": e.b_party,
                "out": e.out_count,
                "in": e.in_count,
                "first": e.first_contact.isoformat(sep=" "),
                "last": e.last_contact.isoformat(sep=" "),
                "sms": e.sms_count,
                "kind": e.kind,
            }
        )
    return {"nodes": nodes, "edges": edges}


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_graph(graph: ContactGraph, format: str = "dot") -> str:
    """Render the graph as DOT or GraphJSON text, deterministically sorted."""
    if format == "json":
        return json.dumps(graph_to_json_doc(graph), indent=2, sort_keys=True) + "\n"
    if format != "dot":
        raise GraphError(f"unknown export format {format!r}")

    lines = ["graph contacts {", "  node [style=filled];"]
    for subscriber, node in sorted(graph.nodes.items()):
        label = f"{node.label} {subscriber}" if node.label else subscriber
        lines.append(
            f"  {_dot_quote(subscriber)} [label={_dot_quote(label)},"
            f" fillcolor={_DOT_COLORS[node.status]},"
            f" tooltip={_dot_quote(node.status.value.lower())}];"
        )
    for key, e in sorted(graph.edges.items()):
        style = ", style=dashed" if e.kind == "proximity" else ""
        lines.append(
            f"  {_dot_quote(e.a_party)} -- {_dot_quote(e.b_party)}"
            f' [label="{e.out_count}/{e.in_count}"{style}];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
