"""Incremental trace persistence: one CSV per scalar block, a labels CSV, a
flat coordinates CSV, and a JSON-lines file for the ragged component blocks."""

import json
from pathlib import Path

import numpy as np
import pandas as pd

from .sampler import ChainTrace

_SCALAR_FILES = ("alpha.csv", "beta.csv", "psi.csv", "G.csv", "loglik.csv", "hypers.csv")


def _fmt(x):
    return repr(float(x))


class TraceWriter:
    """Streams kept iterations to disk as they are produced."""

    def __init__(self, out_dir, K, node_names):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.K = K
        self.node_names = list(node_names)
        self._files = {}
        self._open()

    def _open(self):
        d = self.dir
        self._files["alpha"] = open(d / "alpha.csv", "w")
        self._files["alpha"].write("iteration," + ",".join(f"alpha_{k+1}" for k in range(self.K)) + "\n")
        self._files["beta"] = open(d / "beta.csv", "w")
        self._files["beta"].write("iteration," + ",".join(f"beta_{k+1}" for k in range(self.K)) + "\n")
        self._files["psi"] = open(d / "psi.csv", "w")
        self._files["psi"].write("iteration,psi\n")
        self._files["G"] = open(d / "G.csv", "w")
        self._files["G"].write("iteration,G\n")
        self._files["loglik"] = open(d / "loglik.csv", "w")
        self._files["loglik"].write("iteration,loglik\n")
        self._files["hypers"] = open(d / "hypers.csv", "w")
        self._files["hypers"].write("iteration,mu_alpha,sigma2_alpha,mu_beta,sigma2_beta\n")
        self._files["labels"] = open(d / "labels.csv", "w")
        self._files["labels"].write("iteration," + ",".join(self.node_names) + "\n")
        self._files["coords"] = open(d / "coords.csv", "w")
        self._files["coords"].write("iteration,node,dim,value\n")
        self._files["components"] = open(d / "components.jsonl", "w")

    def append(self, rec):
        t = rec["iteration"]
        f = self._files
        f["alpha"].write(f"{t}," + ",".join(_fmt(v) for v in rec["alpha"]) + "\n")
        f["beta"].write(f"{t}," + ",".join(_fmt(v) for v in rec["beta"]) + "\n")
        f["psi"].write(f"{t},{_fmt(rec['psi'])}\n")
        f["G"].write(f"{t},{rec['G']}\n")
        f["loglik"].write(f"{t},{_fmt(rec['loglik'])}\n")
        f["hypers"].write(f"{t}," + ",".join(_fmt(v) for v in rec["hypers"]) + "\n")
        f["labels"].write(f"{t}," + ",".join(str(int(v) + 1) for v in rec["labels"]) + "\n")
        Z = rec["Z"]
        for i in range(Z.shape[0]):
            for r in range(Z.shape[1]):
                f["coords"].write(f"{t},{i+1},{r+1},{_fmt(Z[i, r])}\n")
        f["components"].write(json.dumps({
            "iteration": int(t),
            "G": int(rec["G"]),
            "mu": rec["mu"].tolist(),
            "sigma2": rec["sigma2"].tolist(),
            "pi": rec["pi"].tolist(),
            "m": rec["m"].tolist(),
        }) + "\n")

    def finalize(self, counters, meta):
        (self.dir / "trace_meta.json").write_text(json.dumps({"counters": counters, "meta": meta}, indent=2))
        self.close()

    def close(self):
        for fh in self._files.values():
            fh.close()
        self._files = {}


def write_trace(trace, out_dir):
    """Persist an in-memory trace (same layout the incremental writer uses)."""
    writer = TraceWriter(out_dir, trace.alpha.shape[1], trace.meta["node_names"])
    for t in range(len(trace)):
        comp = trace.components[t]
        writer.append({
            "iteration": int(trace.kept_iterations[t]),
            "Z": trace.Z[t],
            "labels": trace.labels[t],
            "G": int(trace.G[t]),
            "psi": trace.psi[t],
            "alpha": trace.alpha[t],
            "beta": trace.beta[t],
            "hypers": trace.hypers[t],
            "loglik": trace.loglik[t],
            "mu": comp["mu"],
            "sigma2": comp["sigma2"],
            "pi": comp["pi"],
            "m": comp["m"],
        })
    writer.finalize(trace.counters, trace.meta)


def read_trace(trace_dir):
    """Reload a persisted chain trace."""
    d = Path(trace_dir)
    for fname in _SCALAR_FILES + ("labels.csv", "coords.csv", "components.jsonl", "trace_meta.json"):
        if not (d / fname).exists():
            raise FileNotFoundError(f"run directory lacks traces: missing {d / fname}")
    meta_doc = json.loads((d / "trace_meta.json").read_text())

    def _read(name):
        return pd.read_csv(d / name, float_precision="round_trip")

    alpha = _read("alpha.csv")
    beta = _read("beta.csv")
    psi = _read("psi.csv")
    G = _read("G.csv")
    loglik = _read("loglik.csv")
    hypers = _read("hypers.csv")
    labels = _read("labels.csv")
    coords = _read("coords.csv")

    kept = alpha["iteration"].to_numpy(dtype=int)
    T = kept.size
    n = labels.shape[1] - 1
    p = int(coords["dim"].max()) if T > 0 else meta_doc["meta"]["p"]
    Z = np.zeros((T, n, p))
    if T > 0:
        it_index = {it: t for t, it in enumerate(kept)}
        Z[coords["iteration"].map(it_index).to_numpy(),
          coords["node"].to_numpy() - 1,
          coords["dim"].to_numpy() - 1] = coords["value"].to_numpy()

    components = []
    with open(d / "components.jsonl") as fh:
        for line in fh:
            doc = json.loads(line)
            components.append({
                "mu": np.asarray(doc["mu"], dtype=float),
                "sigma2": np.asarray(doc["sigma2"], dtype=float),
                "pi": np.asarray(doc["pi"], dtype=float),
                "m": np.asarray(doc["m"], dtype=float),
            })

    return ChainTrace(
        kept_iterations=kept,
        Z=Z,
        labels=labels.iloc[:, 1:].to_numpy(dtype=int) - 1,
        G=G["G"].to_numpy(dtype=int),
        psi=psi["psi"].to_numpy(),
        alpha=alpha.iloc[:, 1:].to_numpy(),
        beta=beta.iloc[:, 1:].to_numpy(),
        hypers=hypers.iloc[:, 1:].to_numpy(),
        loglik=loglik["loglik"].to_numpy(),
        components=components,
        counters=meta_doc["counters"],
        meta=meta_doc["meta"],
    )


def concatenate_traces(traces):
    """Pool several chains into one trace (draws concatenated in chain order)."""
    if len(traces) == 1:
        return traces[0]
    base = traces[0]
    return ChainTrace(
        kept_iterations=np.concatenate([t.kept_iterations for t in traces]),
        Z=np.concatenate([t.Z for t in traces]),
        labels=np.concatenate([t.labels for t in traces]),
        G=np.concatenate([t.G for t in traces]),
        psi=np.concatenate([t.psi for t in traces]),
        alpha=np.concatenate([t.alpha for t in traces]),
        beta=np.concatenate([t.beta for t in traces]),
        hypers=np.concatenate([t.hypers for t in traces]),
        loglik=np.concatenate([t.loglik for t in traces]),
        components=[c for t in traces for c in t.components],
        counters={"chains": [t.counters for t in traces]},
        meta=base.meta,
    )
