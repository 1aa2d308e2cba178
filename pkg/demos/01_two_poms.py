"""
The two measurements
====================

Builds the product of two qubit tetrahedron measurements and the
two-qubit SIC POM generated from Appleby's fiducial, and looks at what
distinguishes them.
"""

import numpy as np

from qptomo.pom import (appleby_fiducial, hw_group, probabilities, product_pom, sic_pom,
                        verify_pom)
from qptomo.states import bell_state, concurrence_pure

prod = product_pom()
sic = sic_pom()

# both pass the algebraic checks; only the SIC has equal pairwise overlaps
for p in (prod, sic):
    print(verify_pom(p).format())
    print()

# Gram matrices tr(Pi_j Pi_k): the SIC pattern is 1/16 on the diagonal
# and 1/80 everywhere else, the product POM has three distinct values
for p in (prod, sic):
    g = np.einsum("jab,kba->jk", p.outcomes, p.outcomes).real
    print(p.kind, "distinct overlaps:", np.unique(np.round(g, 12)))

# the fiducial is a SIC fiducial: every nontrivial shift has overlap 1/5
hw = hw_group()
f = appleby_fiducial()
ov = [abs(np.vdot(f, hw.element(m, n) @ f)) ** 2 for m in range(4) for n in range(4)]
print("fiducial overlaps:", np.round(ov, 12))

# every SIC outcome is a partially entangled pure state
w, v = np.linalg.eigh(4 * sic.outcomes[5])
print("concurrence of outcome (1, 1):", concurrence_pure(v[:, -1]), "sqrt(2/5) =", np.sqrt(0.4))

# the singlet never fires the four (m, m) detectors of the product POM;
# these structural zeros are what lets ML put the estimate on the boundary
for p in (prod, sic):
    print(p.kind)
    print(np.round(np.abs(probabilities(p, bell_state("psi_minus"))).reshape(4, 4), 4))
