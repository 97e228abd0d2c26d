"""How communicability is spread over edge-failure scales.

On sparse random graphs almost nothing is lost when the single least
important edge fails; most of the communicability only disappears once many
edges are gone together.
"""
import numpy as np

from backbone import Sampled, erdos_renyi_graph, structural_synergy_backbone

rng = np.random.default_rng(2024)
g = erdos_renyi_graph(10, 19, rng)
spec = structural_synergy_backbone(g, "min", Sampled(100_000, seed=0), workers=4)
print(spec)
print(f"\nsyn_1 / total = {spec.alpha_synergy[0] / spec.total:.2e}")
print("largest atom at alpha =", int(np.argmax(spec.partial_atoms)) + 1)
