"""Binary multidimensional networks: data model, file ingestion, graph distances."""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import shortest_path


class MultiplexFormatError(ValueError):
    """An input file violates the multiplex format contract."""


@dataclass(frozen=True)
class Multiplex:
    """A fixed node set observed under K binary views.

    Parameters
    ----------
    views : ndarray of shape (K, n, n)
        Stack of 0/1 adjacency matrices with zero diagonals. Entry
        ``views[k, i, j] = 1`` means an i -> j edge in view k.
    directed : tuple of bool, length K
        Whether each view is directed. Undirected views must be symmetric.
    ref_view : int
        1-based index of the reference view used for identifiability.
    node_names : tuple of str or None
        Optional node labels, length n.
    """

    views: np.ndarray
    directed: tuple
    ref_view: int = 1
    node_names: tuple | None = None

    def __post_init__(self):
        views = np.asarray(self.views)
        if views.ndim != 3 or views.shape[1] != views.shape[2]:
            raise MultiplexFormatError("views must be a (K, n, n) array")
        K, n, _ = views.shape
        if K < 1:
            raise MultiplexFormatError("view count 0: a multiplex needs at least one view")
        if n < 2:
            raise MultiplexFormatError(f"need at least 2 nodes, got {n}")
        if not np.isin(views, (0, 1)).all():
            raise MultiplexFormatError("non-binary weight: adjacency entries must be 0 or 1")
        for k in range(K):
            if np.diagonal(views[k]).any():
                raise MultiplexFormatError(f"self-loop: view {k + 1} has a nonzero diagonal entry")
        directed = tuple(bool(d) for d in self.directed)
        if len(directed) != K:
            raise MultiplexFormatError("directed flags must match the number of views")
        for k in range(K):
            if not directed[k] and not np.array_equal(views[k], views[k].T):
                raise MultiplexFormatError(f"view {k + 1} is flagged undirected but its matrix is asymmetric")
        if not 1 <= int(self.ref_view) <= K:
            raise MultiplexFormatError(f"ref_view must be in 1..{K}, got {self.ref_view}")
        if self.node_names is not None and len(self.node_names) != n:
            raise MultiplexFormatError("node_names length must equal the node count")
        views = views.astype(np.int8, copy=True)
        views.setflags(write=False)
        object.__setattr__(self, "views", views)
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "ref_view", int(self.ref_view))
        if self.node_names is not None:
            object.__setattr__(self, "node_names", tuple(str(v) for v in self.node_names))

    @property
    def n(self):
        return self.views.shape[1]

    @property
    def K(self):
        return self.views.shape[0]

    def view(self, k):
        """Adjacency matrix of view k (1-based)."""
        if not 1 <= k <= self.K:
            raise IndexError(f"view index {k} out of range 1..{self.K}")
        return self.views[k - 1]

    def is_directed(self, k):
        if not 1 <= k <= self.K:
            raise IndexError(f"view index {k} out of range 1..{self.K}")
        return self.directed[k - 1]

    def names(self):
        if self.node_names is not None:
            return list(self.node_names)
        return [f"node_{i + 1}" for i in range(self.n)]


def density(m, k):
    """Empirical density of view k: sum(y_ij)/(n(n-1)) over ordered pairs i != j."""
    A = m.view(k)
    n = m.n
    return float(A.sum()) / (n * (n - 1))


def geodesic_distances(m, k):
    """Shortest-path hop counts on the symmetrized view k.

    Directed views are symmetrized (an edge in either direction counts) for
    distance computation only. Unreachable pairs are capped at the maximum
    finite distance plus one, so a fully empty view yields all-ones off the
    diagonal.
    """
    A = np.maximum(m.view(k), m.view(k).T)
    D = shortest_path(A, method="D", directed=False, unweighted=True)
    finite = np.isfinite(D)
    cap = D[finite].max() + 1.0
    D[~finite] = cap
    return D


def average_geodesic(m):
    """Elementwise mean of the per-view geodesic distance matrices."""
    return np.mean([geodesic_distances(m, k) for k in range(1, m.K + 1)], axis=0)


def save_multiplex(m, path):
    """Write a multiplex to the adjacency-JSON format."""
    doc = {
        "n": m.n,
        "views": [
            {
                "name": f"view_{k + 1}",
                "directed": m.directed[k],
                "matrix": m.views[k].astype(int).tolist(),
            }
            for k in range(m.K)
        ],
        "ref_view": m.ref_view,
    }
    if m.node_names is not None:
        doc["node_names"] = list(m.node_names)
    Path(path).write_text(json.dumps(doc))


def load_multiplex(source, format=None):
    """Load a multiplex from disk.

    Parameters
    ----------
    source : path
        For ``adjacency-json``, the JSON document itself. For
        ``edge-list-csv``, a manifest JSON that names the edge CSV, the node
        roster file, the per-view ``directed`` flags and the reference view.
    format : {'adjacency-json', 'edge-list-csv'} or None
        Inferred from the document contents when None.

    Returns
    -------
    Multiplex
    """
    path = Path(source)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise MultiplexFormatError(f"{path}: not valid JSON ({e})") from e
    if format is None:
        if isinstance(doc, dict) and "edges" in doc:
            format = "edge-list-csv"
        elif isinstance(doc, dict) and "views" in doc:
            format = "adjacency-json"
        else:
            raise MultiplexFormatError(f"{path}: cannot infer format (expected 'views' or 'edges' key)")
    if format == "adjacency-json":
        return _from_adjacency_doc(doc, path)
    if format == "edge-list-csv":
        return _from_edge_manifest(doc, path)
    raise ValueError(f"unknown format {format!r}")


def _from_adjacency_doc(doc, path):
    views_spec = doc.get("views")
    if not isinstance(views_spec, list) or len(views_spec) == 0:
        raise MultiplexFormatError(f"{path}: view count 0")
    mats, flags = [], []
    for k, v in enumerate(views_spec):
        try:
            mat = np.asarray(v["matrix"], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise MultiplexFormatError(f"{path}: view {k + 1} has a malformed matrix") from e
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise MultiplexFormatError(f"{path}: view {k + 1} matrix is not square")
        if not np.isin(mat, (0, 1)).all():
            raise MultiplexFormatError(f"{path}: non-binary weight in view {k + 1}")
        mats.append(mat.astype(np.int8))
        flags.append(bool(v.get("directed", True)))
    n_declared = doc.get("n")
    if n_declared is not None and int(n_declared) != mats[0].shape[0]:
        raise MultiplexFormatError(f"{path}: declared n={n_declared} but matrices are {mats[0].shape[0]}x{mats[0].shape[0]}")
    if len({m.shape for m in mats}) != 1:
        raise MultiplexFormatError(f"{path}: views have inconsistent sizes")
    return Multiplex(
        views=np.stack(mats),
        directed=tuple(flags),
        ref_view=int(doc.get("ref_view", 1)),
        node_names=tuple(doc["node_names"]) if "node_names" in doc else None,
    )


def _from_edge_manifest(doc, path):
    base = path.parent
    for key in ("edges", "roster", "views"):
        if key not in doc:
            raise MultiplexFormatError(f"{path}: edge-list manifest missing {key!r}")
    roster_path = base / doc["roster"]
    edges_path = base / doc["edges"]
    if not roster_path.exists():
        raise FileNotFoundError(f"no such file: {roster_path}")
    if not edges_path.exists():
        raise FileNotFoundError(f"no such file: {edges_path}")

    names = [line.strip() for line in roster_path.read_text().splitlines() if line.strip()]
    if len(set(names)) != len(names):
        raise MultiplexFormatError(f"{roster_path}: duplicate node in roster")
    index = {name: i for i, name in enumerate(names)}

    view_names = [str(v["name"]) for v in doc["views"]]
    flags = [bool(v.get("directed", True)) for v in doc["views"]]
    K = len(view_names)
    if K == 0:
        raise MultiplexFormatError(f"{path}: view count 0")
    view_index = {name: k for k, name in enumerate(view_names)}
    view_index.update({str(k + 1): k for k in range(K)})

    rows = []
    with open(edges_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:3]] != ["view", "source", "target"]:
            raise MultiplexFormatError(f"{edges_path}: header must be view,source,target[,weight]")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) not in (3, 4):
                raise MultiplexFormatError(f"{edges_path}:{lineno}: malformed row {row!r}")
            rows.append((lineno, [c.strip() for c in row]))

    # Nodes appearing in edges but not in the roster extend n, in order of
    # first appearance after the roster block.
    for lineno, row in rows:
        for name in row[1:3]:
            if name not in index:
                index[name] = len(names)
                names.append(name)

    n = len(names)
    views = np.zeros((K, n, n), dtype=np.int8)
    seen = {}
    for lineno, row in rows:
        vname, src, dst = row[0], row[1], row[2]
        if vname not in view_index:
            raise MultiplexFormatError(f"{edges_path}:{lineno}: unknown view {vname!r}")
        k = view_index[vname]
        if len(row) == 4:
            if row[3] not in ("0", "1"):
                raise MultiplexFormatError(f"{edges_path}:{lineno}: non-binary weight {row[3]!r}")
            w = int(row[3])
        else:
            w = 1
        i, j = index[src], index[dst]
        if i == j:
            raise MultiplexFormatError(f"{edges_path}:{lineno}: self-loop on node {src!r}")
        keys = [(k, i, j)] if flags[k] else [(k, i, j), (k, j, i)]
        for key in keys:
            if key in seen and seen[key] != w:
                raise MultiplexFormatError(
                    f"{edges_path}:{lineno}: duplicate edge ({src},{dst}) in view {vname!r} with conflicting value"
                )
            seen[key] = w
            views[key] = w

    return Multiplex(
        views=views,
        directed=tuple(flags),
        ref_view=int(doc.get("ref_view", 1)),
        node_names=tuple(names),
    )
