"""Aggregate many search traces into one tree of brackets.

Nodes are keyed by their exact bracket ``(low, high)``. With a fixed prior
the probe point depends only on the bracket, so every run passing
through a bracket splits it the same way and runs merge cleanly.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from bbsearch.search import SearchOutcome

__all__ = ["TreeNode", "TreeAggregate"]

Bracket = tuple[int, int]


@dataclass
class TreeNode:
    low: int
    high: int
    depth: int
    median: int | None = None
    visit_count: int = 0
    terminal_count: int = 0
    children: list[Bracket] = field(default_factory=list)

    @property
    def key(self) -> Bracket:
        return (self.low, self.high)

    @property
    def is_leaf(self) -> bool:
        return not self.children


class TreeAggregate:
    """Bracket tree built from search outcomes that share a starting bracket."""

    def __init__(self, low: int, high: int):
        self.root: Bracket = (int(low), int(high))
        self.nodes: dict[Bracket, TreeNode] = {}
        self.runs = 0

    def _node(self, key: Bracket, depth: int) -> TreeNode:
        node = self.nodes.get(key)
        if node is None:
            node = self.nodes[key] = TreeNode(key[0], key[1], depth)
        return node

    def add(self, outcome: SearchOutcome) -> None:
        brackets = outcome.brackets(*self.root)
        for depth, (key, rec) in enumerate(zip(brackets, outcome.trace)):
            node = self._node(key, depth)
            node.visit_count += 1
            if node.median is None:
                node.median = rec.x
            elif node.median != rec.x:
                raise ValueError(f"bracket {key} split at both {node.median} and {rec.x}; prior is not fixed")
            child = brackets[depth + 1]
            if child not in node.children:
                node.children.append(child)
                node.children.sort()
        leaf = self._node(brackets[-1], len(outcome.trace))
        leaf.visit_count += 1
        leaf.terminal_count += 1
        self.runs += 1

    @classmethod
    def from_outcomes(cls, low: int, high: int, outcomes: Iterable[SearchOutcome]) -> "TreeAggregate":
        tree = cls(low, high)
        for out in outcomes:
            tree.add(out)
        return tree

    def leaves(self) -> list[TreeNode]:
        return [n for n in self.nodes.values() if n.terminal_count]

    def terminal_depths(self) -> Counter:
        """Termination counts by depth (number of probes)."""
        counts = Counter()
        for n in self.leaves():
            counts[n.depth] += n.terminal_count
        return counts

    def to_dot(self, config: dict | None = None, name: str = "search_tree") -> str:
        """DOT digraph; leaves are filled and show how many runs ended there.

        ``config`` goes into a JSON header comment so the file records how
        it was produced.
        """
        ids = {key: f"n{i}" for i, key in enumerate(sorted(self.nodes, key=lambda k: (self.nodes[k].depth, k)))}
        lines = []
        if config is not None:
            lines.append("// " + json.dumps(config, sort_keys=True))
        lines += [f"digraph {name} {{", "  node [shape=box, fontname=Helvetica];"]
        for key, nid in ids.items():
            node = self.nodes[key]
            label = f"[{node.low}, {node.high}]"
            if node.is_leaf:
                label += f"\\nterminated {node.terminal_count}"
                lines.append(f'  {nid} [label="{label}", style=filled, fillcolor=palegreen];')
            else:
                label += f"\\nmedian {node.median}\\nvisits {node.visit_count}"
                lines.append(f'  {nid} [label="{label}"];')
        for key, nid in ids.items():
            for child in self.nodes[key].children:
                lines.append(f"  {nid} -> {ids[child]};")
        lines.append("}")
        return "\n".join(lines) + "\n"
