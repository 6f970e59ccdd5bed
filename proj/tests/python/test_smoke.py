import json
import os
import subprocess

import numpy as np
import pytest

import netcap


def test_star_values():
    g = netcap.star_graph(5)
    rep = netcap.analyze(g, netcap.random_walk(g), "walk")
    assert rep["rc0"] == pytest.approx(1.25)
    assert rep["T"] == pytest.approx(1.6)
    assert rep["betweenness"][0] == pytest.approx(16.0)
    assert rep["bounds"]["t0rc0"]["holds"]


def test_alpha_against_numpy():
    g = netcap.generate_ba(30, 2, seed=4)
    r = netcap.random_weighted(g, seed=1)
    a = netcap.solve_alpha(g, r).alpha0
    n = len(g)
    p = r.matrix()
    adj = np.zeros((n, n))
    for u, v in g.edges():
        adj[u, v] = adj[v, u] = 1.0
    for x in range(n):
        pd = p.copy()
        pd[adj[x] > 0] = 0.0
        j = np.full(n, 1.0 / (n * (n - 1)))
        j[x] = 0.0
        m = np.eye(n) - pd.T
        m[x] = 0.0
        m[x, x] = 1.0
        np.testing.assert_allclose(a[:, x], np.linalg.solve(m, j), atol=1e-13)


def test_neumann_matches_direct():
    g = netcap.generate_ba(40, 3, seed=2)
    r = netcap.shortest_path(g)
    d = netcap.solve_alpha(g, r).alpha0
    s = netcap.solve_alpha(g, r, method="neumann").alpha0
    assert np.abs(d - s).max() < 1e-10


def test_errors_map_to_exceptions():
    with pytest.raises(netcap.DisconnectedError):
        netcap.Graph.from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(netcap.InvalidParams):
        netcap.generate_ba(3, 5)
    g = netcap.star_graph(5)
    alpha = netcap.solve_alpha(g, netcap.random_walk(g))
    with pytest.raises(netcap.CongestedError):
        netcap.queue_lengths(alpha, 1.3)
    assert issubclass(netcap.CongestedError, netcap.NetcapError)


def test_simulation_runs():
    g = netcap.complete_graph(4)
    res = netcap.simulate(g, netcap.random_walk(g), rate=0.5, seed=3, warmup=1000, measure=5000)
    assert res.eta < 0.01
    assert sum(res.mean_queue_lengths) == pytest.approx(0.5, rel=0.1)
    assert res.generated_count == res.delivered_count + res.w_trace[-1]
    assert res.warnings == []
    assert netcap.order_parameter(list(range(100)), 1.0, 2.0) == pytest.approx(0.5)


def test_parse_roundtrip():
    g = netcap.Graph.parse("10 20\n20 30\n", reindex=True)
    assert g.labels == [10, 20, 30]
    h = netcap.Graph.parse(netcap.generate_ba(20, 2, 1).to_text())
    assert h.edge_count == 2 * 17 + 3


@pytest.mark.skipif(not os.environ.get("NETCAP_CLI"), reason="CLI path not provided")
def test_cli_round_trip(tmp_path):
    exe = os.environ["NETCAP_CLI"]
    graph = tmp_path / "g.txt"
    subprocess.run([exe, "generate", "--n", "50", "--m", "2", "--seed", "1", "--out", str(graph)], check=True)
    out = tmp_path / "a.json"
    subprocess.run([exe, "analyze", "--graph", str(graph), "--out", str(out)], check=True)
    report = json.loads(out.read_text())
    g = netcap.Graph.parse(graph.read_text())
    assert report["rc0"] == pytest.approx(netcap.analyze(g, netcap.random_walk(g))["rc0"], rel=1e-12)
    bad = subprocess.run([exe, "analyze", "--graph", str(tmp_path / "none.txt"), "--out", str(out)])
    assert bad.returncode == 4
