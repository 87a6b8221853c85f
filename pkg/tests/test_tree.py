import json

import pydot
import pytest

from bbsearch.density import Normal, fit_kde
from bbsearch.search import ProbeRecord, SearchOutcome, SignOracle, bbs_search, classic_search
from bbsearch.tree import TreeAggregate


def classic_tree(lo, hi, targets, eps):
    return TreeAggregate.from_outcomes(lo, hi, (classic_search(lo, hi, SignOracle(t), eps) for t in targets))


def real_nodes(graph):
    return [n for n in graph.get_nodes() if n.get_name() not in ("node", "edge", "graph")]


def test_single_run_is_a_path():
    tree = classic_tree(0, 16, [5], 1)
    assert len(tree.leaves()) == 1
    assert tree.leaves()[0].terminal_count == 1
    assert all(len(n.children) <= 1 for n in tree.nodes.values())
    assert len(tree.nodes) == 5  # root plus four probes


def test_full_classic_tree_on_ten():
    tree = classic_tree(0, 10, range(0, 11), 1)
    assert tree.runs == 11
    assert set(tree.terminal_depths()) == {3, 4}
    root = tree.nodes[(0, 10)]
    assert root.median == 5 and root.children == [(0, 5), (5, 10)]
    assert root.visit_count == 11


def test_children_partition_at_median():
    prior = Normal(300.0, 90.0)
    outs = [bbs_search(0, 1000, prior, SignOracle(t), 4) for t in range(0, 1001, 3)]
    tree = TreeAggregate.from_outcomes(0, 1000, outs)
    assert sum(n.terminal_count for n in tree.leaves()) == len(outs)
    for node in tree.nodes.values():
        if node.children:
            assert node.low < node.median < node.high
            assert set(node.children) <= {(node.low, node.median), (node.median, node.high)}
            assert node.visit_count == sum(tree.nodes[c].visit_count for c in node.children)
        else:
            assert node.high - node.low <= 4


def test_inconsistent_splits_rejected():
    a = SearchOutcome(1, 0, 5, (ProbeRecord(5, 1, 5),))
    b = SearchOutcome(1, 0, 4, (ProbeRecord(4, 1, 4),))
    tree = TreeAggregate(0, 10)
    tree.add(a)
    with pytest.raises(ValueError, match="not fixed"):
        tree.add(b)


def test_zero_probe_run():
    tree = classic_tree(0, 3, [1, 2], 8)
    assert list(tree.nodes) == [(0, 3)]
    assert tree.terminal_depths() == {0: 2}


def test_dot_output():
    prior = fit_kde([10.0, 12.0, 30.0, 31.0, 33.0], "auto")
    outs = [bbs_search(0, 64, prior, SignOracle(t), 2) for t in range(65)]
    tree = TreeAggregate.from_outcomes(0, 64, outs)
    cfg = {"algo": "bbs", "epsilon": 2, "note": "/* tricky */"}
    text = tree.to_dot(cfg)
    header = text.splitlines()[0]
    assert header.startswith("// ") and json.loads(header[3:]) == cfg
    graph = pydot.graph_from_dot_data(text)[0]
    assert len(real_nodes(graph)) == len(tree.nodes)
    assert len(graph.get_edges()) == len(tree.nodes) - 1
    leaves = [n for n in real_nodes(graph) if "terminated" in n.get("label")]
    assert sum(int(n.get("label").strip('"').split("terminated ")[1]) for n in leaves) == 65
    assert all(n.get("fillcolor") == "palegreen" for n in leaves)


def test_dot_is_deterministic():
    a = classic_tree(0, 100, [3, 50, 99, 3], 5).to_dot({"x": 1})
    b = classic_tree(0, 100, [99, 3, 3, 50], 5).to_dot({"x": 1})
    assert a == b
