"""The two on-disk multiplex formats and the command-line pipeline.

Builds a small dataset in both the edge-list-CSV and adjacency-JSON formats,
then drives the full CLI round: simulate -> fit -> summarize -> plot. All
command outputs land in a scratch directory printed at the end.
"""

import json
import tempfile
from pathlib import Path

from ilpcm import density, load_multiplex
from ilpcm.cli import main

work = Path(tempfile.mkdtemp(prefix="ilpcm_demo_"))

# --- edge-list format ----------------------------------------------------
# roster: one node per line (isolated nodes are legal and meaningful)
(work / "nodes.txt").write_text("ana\nbea\ncarl\ndora\n")
(work / "edges.csv").write_text(
    "view,source,target\n"
    "advice,ana,bea\n"
    "advice,bea,carl\n"
    "friends,ana,carl\n"
)
(work / "manifest.json").write_text(json.dumps({
    "edges": "edges.csv",
    "roster": "nodes.txt",
    "views": [{"name": "advice", "directed": True},
              {"name": "friends", "directed": False}],
    "ref_view": 1,
}))
m = load_multiplex(work / "manifest.json")
print(f"edge-list multiplex: n={m.n}, K={m.K}, nodes={m.names()}")
print(f"advice density: {density(m, 1):.3f} (friends view is symmetrized)")

# --- CLI pipeline --------------------------------------------------------
sim_dir = work / "datasets"
main(["simulate", "--scenario", "I", "--n", "20", "--K", "2", "--G", "2",
      "--reps", "1", "--seed", "5", "--out", str(sim_dir)])

run_dir = work / "fit"
main(["fit", str(sim_dir / "rep_01" / "multiplex.json"),
      "--iters", "2000", "--burnin", "600", "--thin", "5", "--seed", "5",
      "--truth", str(sim_dir / "rep_01" / "truth.json"),
      "--out", str(run_dir)])

# summarize is idempotent; plot emits one SVG per view plus a G bar chart
main(["summarize", str(run_dir), "--truth", str(sim_dir / "rep_01" / "truth.json")])
main(["plot", str(run_dir)])

summary = json.loads((run_dir / "summary.json").read_text())
print(f"\nfit summary: G_hat={summary['G_hat']}, ARI={summary['ari_vs_truth']:.3f}")
print(f"figures: {sorted(p.name for p in (run_dir / 'figures').glob('*.svg'))}")
print(f"\nall artifacts under {work}")
