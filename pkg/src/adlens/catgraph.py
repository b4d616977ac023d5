"""Category-object graph: construction, modularity, communities, file export.

Vertices are ("category", name) and ("object", class_id) tuples.  An edge
joins a category to an object when the object appears in at least
`threshold` (default 1%) of that category's ads, weighted by that fraction.
Community detection is greedy agglomerative modularity maximization with a
local-move refinement pass; processing order is fixed by sorted vertex ids,
so results are deterministic.  Modularity treats the graph as unweighted and
undirected; weights ride along as metadata.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from xml.etree import ElementTree

from .objstats import object_frequencies

Vertex = tuple[str, object]


def category_vertex(name: str) -> Vertex:
    return ("category", name)


def object_vertex(class_id: int) -> Vertex:
    return ("object", class_id)


@dataclass(frozen=True)
class Graph:
    """Undirected graph over hashable, sortable vertex ids."""

    vertices: tuple
    edges: tuple  # (u, v) pairs

    def __post_init__(self):
        vset = set(self.vertices)
        for u, v in self.edges:
            if u not in vset or v not in vset:
                raise ValueError(f"edge ({u!r}, {v!r}) references unknown vertex")
            if u == v:
                raise ValueError("self-loops not supported")


@dataclass
class CategoryObjectGraph:
    categories: tuple[str, ...]
    objects: tuple[int, ...]
    edges: tuple[tuple[str, int, float], ...]  # (category, class_id, weight)

    @property
    def num_vertices(self) -> int:
        return len(self.categories) + len(self.objects)

    def vertex_list(self) -> list[Vertex]:
        return [category_vertex(c) for c in self.categories] + [
            object_vertex(o) for o in self.objects
        ]

    def to_graph(self) -> Graph:
        return Graph(
            vertices=tuple(self.vertex_list()),
            edges=tuple((category_vertex(c), object_vertex(o)) for c, o, _ in self.edges),
        )

    def weight_of(self) -> dict[tuple[str, int], float]:
        return {(c, o): w for c, o, w in self.edges}


@dataclass
class CommunityPartition:
    community_of: dict
    num_communities: int
    modularity: float


def build_graph(corpus_or_view, threshold: float = 0.01) -> CategoryObjectGraph:
    """Edges where the per-category fraction is >= threshold (inclusive)."""
    if not (0.0 < threshold < 1.0):
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    table = object_frequencies(corpus_or_view)
    edges = []
    connected_objects = set()
    for cat in sorted(table.per_category):
        for cid, frac in sorted(table.per_category[cat].items()):
            if frac >= threshold:
                edges.append((cat, cid, frac))
                connected_objects.add(cid)
    return CategoryObjectGraph(
        categories=tuple(sorted(table.per_category)),
        objects=tuple(sorted(connected_objects)),
        edges=tuple(edges),
    )


def _as_generic(graph) -> Graph:
    if isinstance(graph, CategoryObjectGraph):
        return graph.to_graph()
    if isinstance(graph, Graph):
        return graph
    raise TypeError(f"expected Graph or CategoryObjectGraph, got {type(graph)!r}")


def modularity(graph, community_of: dict) -> float:
    """Newman-Girvan Q = sum_c [ L_c/m - (d_c/2m)^2 ] on the unweighted skeleton.

    Defined as 0.0 for edgeless graphs.  Raises if any vertex is missing
    from the partition.
    """
    g = _as_generic(graph)
    for v in g.vertices:
        if v not in community_of:
            raise ValueError(f"vertex {v!r} missing from partition")
    m = len(g.edges)
    if m == 0:
        return 0.0
    intra: dict = {}
    degree_sum: dict = {}
    for u, v in g.edges:
        cu, cv = community_of[u], community_of[v]
        degree_sum[cu] = degree_sum.get(cu, 0) + 1
        degree_sum[cv] = degree_sum.get(cv, 0) + 1
        if cu == cv:
            intra[cu] = intra.get(cu, 0) + 1
    q = 0.0
    for c in degree_sum:
        q += intra.get(c, 0) / m - (degree_sum[c] / (2.0 * m)) ** 2
    return q


def detect_communities(graph, seed: int = 0) -> CommunityPartition:
    """Greedy modularity merging plus local-move refinement.

    Deterministic: merge and move order follow sorted vertex ids (the seed is
    accepted for interface stability but the procedure draws no randomness).
    Isolated vertices stay singleton communities.
    """
    g = _as_generic(graph)
    if not g.vertices:
        raise ValueError("empty graph")
    vertices = sorted(g.vertices)
    index = {v: i for i, v in enumerate(vertices)}
    n = len(vertices)
    m = len(g.edges)

    adjacency: list[set[int]] = [set() for _ in range(n)]
    for u, v in g.edges:
        adjacency[index[u]].add(index[v])
        adjacency[index[v]].add(index[u])
    degree = [len(a) for a in adjacency]

    comm = list(range(n))
    if m > 0:
        comm = _greedy_merge(adjacency, degree, m, n)
        comm = _refine_local_moves(adjacency, degree, m, comm)
        # Guarantee Q >= 0: one community over the connected part (Q exactly
        # 0) beats any negative-Q state greedy might stall in.
        probe = {vertices[i]: comm[i] for i in range(n)}
        if modularity(g, probe) < 0.0:
            comm = [n if degree[i] > 0 else i for i in range(n)]

    # Relabel communities by first appearance in sorted vertex order.
    relabel: dict[int, int] = {}
    for i in range(n):
        if comm[i] not in relabel:
            relabel[comm[i]] = len(relabel)
    community_of = {vertices[i]: relabel[comm[i]] for i in range(n)}
    return CommunityPartition(
        community_of=community_of,
        num_communities=len(relabel),
        modularity=modularity(g, community_of),
    )


def _greedy_merge(adjacency, degree, m, n) -> list[int]:
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    # links[c][d] = number of edges between communities c and d
    links: dict[int, dict[int, int]] = {i: {} for i in range(n)}
    deg_sum = {i: degree[i] for i in range(n)}
    for i in range(n):
        for j in adjacency[i]:
            if i < j:
                links[i][j] = links[i].get(j, 0) + 1
                links[j][i] = links[j].get(i, 0) + 1

    two_m_sq = 2.0 * m * m
    while True:
        best = None  # (delta_q, c, d)
        for c in sorted(links):
            for d in sorted(links[c]):
                if d <= c:
                    continue
                delta = links[c][d] / m - deg_sum[c] * deg_sum[d] / two_m_sq
                if best is None or delta > best[0] + 1e-15:
                    best = (delta, c, d)
        if best is None or best[0] <= 1e-12:
            break
        _, c, d = best
        members[c].extend(members.pop(d))
        deg_sum[c] += deg_sum.pop(d)
        for e, cnt in links.pop(d).items():
            if e == c:
                continue
            links[e].pop(d, None)
            links[c][e] = links[c].get(e, 0) + cnt
            links[e][c] = links[e].get(c, 0) + cnt
        links[c].pop(d, None)

    comm = [0] * n
    for c, verts in members.items():
        for v in verts:
            comm[v] = c
    return comm


def _refine_local_moves(adjacency, degree, m, comm: list[int]) -> list[int]:
    """Move single vertices to adjacent communities while Q strictly improves."""
    n = len(comm)
    deg_sum: dict[int, int] = {}
    for i in range(n):
        deg_sum[comm[i]] = deg_sum.get(comm[i], 0) + degree[i]
    improved = True
    while improved:
        improved = False
        for i in range(n):
            current = comm[i]
            links_to: dict[int, int] = {}
            for j in adjacency[i]:
                links_to[comm[j]] = links_to.get(comm[j], 0) + 1
            # Gain of leaving `current`, then joining candidate c:
            # dQ = (links_to[c] - links_to[current]) / m
            #      - d_i * (deg_sum[c] - (deg_sum[current] - d_i)) / (2 m^2)
            base_links = links_to.get(current, 0)
            rest_deg = deg_sum[current] - degree[i]
            best_gain = 0.0
            best_comm = current
            for c in sorted(links_to):
                if c == current:
                    continue
                gain = (links_to[c] - base_links) / m - degree[i] * (
                    deg_sum[c] - rest_deg
                ) / (2.0 * m * m)
                if gain > best_gain + 1e-12:
                    best_gain = gain
                    best_comm = c
            if best_comm != current:
                comm[i] = best_comm
                deg_sum[current] -= degree[i]
                deg_sum[best_comm] = deg_sum.get(best_comm, 0) + degree[i]
                improved = True
    return comm


def _tsv_rows(graph: CategoryObjectGraph, partition: CommunityPartition) -> list[str]:
    rows = ["source\ttarget\tweight\tsource_type\ttarget_type\tsource_community\ttarget_community"]
    for cat in graph.categories:
        if "\t" in cat or "\n" in cat:
            raise ValueError(f"category name breaks TSV format: {cat!r}")
    for cat, cid, weight in sorted(graph.edges, key=lambda e: (e[0], e[1])):
        sc = partition.community_of[category_vertex(cat)]
        tc = partition.community_of[object_vertex(cid)]
        rows.append(f"{cat}\t{cid}\t{weight:.6f}\tcategory\tobject\t{sc}\t{tc}")
    return rows


def export_graph(graph: CategoryObjectGraph, partition: CommunityPartition,
                 format: str, path: str | Path) -> None:
    """Write the graph as 'edge-list-tsv' or 'graphml' (stable bytes)."""
    path = Path(path)
    if format == "edge-list-tsv":
        path.write_text("\n".join(_tsv_rows(graph, partition)) + "\n", encoding="utf-8", newline="\n")
    elif format == "graphml":
        path.write_text(_graphml_text(graph, partition), encoding="utf-8", newline="\n")
    else:
        raise ValueError(f"unknown export format: {format!r}")


def _graphml_text(graph: CategoryObjectGraph, partition: CommunityPartition) -> str:
    def esc(s: str) -> str:
        return (
            str(s)
            .replace("&", "&amp;")
            .replace("<", "&lt;")
            .replace(">", "&gt;")
            .replace('"', "&quot;")
        )

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="type" for="node" attr.name="type" attr.type="string"/>',
        '  <key id="community" for="node" attr.name="community" attr.type="int"/>',
        '  <key id="weight" for="edge" attr.name="weight" attr.type="double"/>',
        '  <graph id="G" edgedefault="undirected">',
    ]
    for cat in graph.categories:
        comm = partition.community_of[category_vertex(cat)]
        lines.append(f'    <node id="c::{esc(cat)}">')
        lines.append('      <data key="type">category</data>')
        lines.append(f'      <data key="community">{comm}</data>')
        lines.append("    </node>")
    for cid in graph.objects:
        comm = partition.community_of[object_vertex(cid)]
        lines.append(f'    <node id="o::{cid}">')
        lines.append('      <data key="type">object</data>')
        lines.append(f'      <data key="community">{comm}</data>')
        lines.append("    </node>")
    for cat, cid, weight in sorted(graph.edges, key=lambda e: (e[0], e[1])):
        lines.append(f'    <edge source="c::{esc(cat)}" target="o::{cid}">')
        lines.append(f'      <data key="weight">{weight:.6f}</data>')
        lines.append("    </edge>")
    lines.extend(["  </graph>", "</graphml>"])
    return "\n".join(lines) + "\n"


def read_edge_list_tsv(path: str | Path) -> tuple[CategoryObjectGraph, dict]:
    """Reimport an exported TSV; returns the graph and a vertex->community map."""
    lines = Path(path).read_text(encoding="utf-8").rstrip("\n").split("\n")
    header = lines[0].split("\t")
    expected = ["source", "target", "weight", "source_type", "target_type",
                "source_community", "target_community"]
    if header != expected:
        raise ValueError(f"unexpected TSV header: {header}")
    edges = []
    community: dict = {}
    for line in lines[1:]:
        cat, cid, weight, _, _, sc, tc = line.split("\t")
        edges.append((cat, int(cid), float(weight)))
        community[category_vertex(cat)] = int(sc)
        community[object_vertex(int(cid))] = int(tc)
    return (
        CategoryObjectGraph(
            categories=tuple(sorted({c for c, _, _ in edges})),
            objects=tuple(sorted({o for _, o, _ in edges})),
            edges=tuple(sorted(edges, key=lambda e: (e[0], e[1]))),
        ),
        community,
    )


def read_graphml(path: str | Path) -> tuple[CategoryObjectGraph, dict]:
    """Reimport an exported GraphML file."""
    ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
    root = ElementTree.parse(path).getroot()
    community: dict = {}
    categories: list[str] = []
    objects: list[int] = []
    for node in root.findall(".//g:node", ns):
        nid = node.attrib["id"]
        data = {d.attrib["key"]: d.text for d in node.findall("g:data", ns)}
        if nid.startswith("c::"):
            v = category_vertex(nid[3:])
            categories.append(nid[3:])
        elif nid.startswith("o::"):
            v = object_vertex(int(nid[3:]))
            objects.append(int(nid[3:]))
        else:
            raise ValueError(f"unknown node id prefix: {nid}")
        community[v] = int(data["community"])
    edges = []
    for edge in root.findall(".//g:edge", ns):
        cat = edge.attrib["source"][3:]
        cid = int(edge.attrib["target"][3:])
        data = {d.attrib["key"]: d.text for d in edge.findall("g:data", ns)}
        edges.append((cat, cid, float(data["weight"])))
    return (
        CategoryObjectGraph(
            categories=tuple(sorted(categories)),
            objects=tuple(sorted(objects)),
            edges=tuple(sorted(edges, key=lambda e: (e[0], e[1]))),
        ),
        community,
    )


def is_bipartite_by_two_coloring(graph: CategoryObjectGraph) -> bool:
    """2-color check over the edge structure (categories one side, objects other)."""
    color: dict[Vertex, int] = {}
    g = graph.to_graph()
    adjacency: dict[Vertex, list[Vertex]] = {v: [] for v in g.vertices}
    for u, v in g.edges:
        adjacency[u].append(v)
        adjacency[v].append(u)
    for start in g.vertices:
        if start in color:
            continue
        color[start] = 0
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adjacency[u]:
                if v not in color:
                    color[v] = 1 - color[u]
                    stack.append(v)
                elif color[v] == color[u]:
                    return False
    return True
