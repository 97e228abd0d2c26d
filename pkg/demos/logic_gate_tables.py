"""Negentropy and entropy backbones of the XOR and AND gates.

XOR carries its one bit of structure entirely at the single-failure scale:
knocking out any one variable already destroys it. AND is different at the
state (1, 1, 1), where the atoms are (1, 1, -1).
"""
import numpy as np

from backbone import (
    JointDistribution,
    entropy_backbone_expected,
    negentropy_backbone,
    total_correlation_backbone,
)


def gate(fn):
    pmf = {(a, b, fn(a, b)): 0.25 for a in (0, 1) for b in (0, 1)}
    return JointDistribution.from_pmf(pmf, [2, 2, 2], ["X1", "X2", "Y"])


def show(title, states, atoms):
    print(title)
    for s, a in zip(states, atoms):
        print(f"  {tuple(int(v) for v in s)}  " + "  ".join(f"{round(x, 6) + 0.0:+.3f}" for x in a))


xor, and_ = gate(lambda a, b: a ^ b), gate(lambda a, b: a & b)

for name, dist in (("XOR", xor), ("AND", and_)):
    res = negentropy_backbone(dist, "min")
    show(f"{name} negentropy, per state", res.states, res.local_atoms)
    print(f"  expected: {np.round(res.atoms, 6) + 0.0}  (sum {res.atom_sum:.6f} bits)\n")

print("XOR entropy backbone:", np.round(entropy_backbone_expected(xor).partial_atoms, 6))
print("XOR total correlation:", np.round(total_correlation_backbone(xor).atoms, 6) + 0.0)
