"""
Random states
=============

Average number of pairs needed to reach D = 0.1 over random samples of
states, for the four ensembles: unbiased mixed (Hilbert-Schmidt),
biased high-purity mixed, pure, and maximally entangled.

A handful of states per ensemble gives the picture in a few minutes;
``qptomo table --states 100`` runs the full-size version.
"""

import sys

from qptomo.harness import CampaignConfig, run_ensemble_campaign
from qptomo.states import EnsembleSpec, batch_purity, sample_states

n_states = int(sys.argv[1]) if len(sys.argv) > 1 else 5

# the biased ensemble offsets one Gaussian entry; its size is calibrated
# so that 90% of the states have purity above 0.8
for kind in ("unbiased_mixed", "pure"):
    pur = batch_purity(sample_states(EnsembleSpec(kind, seed=0), 2000))
    print(f"{kind}: mean purity {pur.mean():.3f}")

for i, kind in enumerate(("unbiased_mixed", "biased_mixed", "pure", "max_entangled")):
    cfg = CampaignConfig(kind="ensemble_average", ensemble=EnsembleSpec(kind, seed=i + 1),
                         n_states=n_states, master_seed=2010)
    result = run_ensemble_campaign(cfg)
    cells = result.summary["cells"]
    print(f"\n{kind}")
    print(f"{'':6s}{'RD':>20s}{'ML':>20s}")
    for key in ("prod", "sic", "eta"):
        row = "".join(f"{cells[e][key]['mean']:12.2f} +- {cells[e][key]['sd']:5.2f}" for e in ("rd", "ml"))
        print(f"{key:<6s}{row}")
    if "ensemble_mean_scale" in result.provenance:
        print("offset scale:", round(result.provenance["ensemble_mean_scale"], 3))
