"""Small searches: separable optimum, entangled advantage and max-variance certificates."""

import numpy as np

from qsnet import bounds, probes
from qsnet.netspace import NUMBER, NetworkLayout, NetworkState, SensorSpace
from qsnet.search import (
    EstimatePhi,
    RandomProduct,
    SubspaceSpec,
    allocation_search,
    evaluate,
    max_variance,
    min_crb_search,
)


def main():
    layout = NetworkLayout.uniform(SensorSpace.mode(2), 2, NUMBER)
    obj = EstimatePhi((0.5, 0.5))
    sep = min_crb_search(SubspaceSpec.per_sensor_at_most(layout, 1), obj, RandomProduct(20000, seed=1))
    vec = np.zeros(layout.total_dim)
    vec[[layout.flat_index([0, 0]), layout.flat_index([2, 0]), layout.flat_index([0, 2])]] = 1
    ent = evaluate(NetworkState.from_vector(vec, layout), obj)
    loc = evaluate(probes.local_superposition(layout, [1, 1]), obj)
    print(f"two modes, <= 2 photons: best sampled separable {sep.best_value:.4f}, "
          f"one photon per mode {loc:.4f}, (|00>+|20>+|02>)/sqrt3 {ent:.4f}")

    v = np.array([2.0, 1.0]) / np.sqrt(5)
    r = max_variance(SubspaceSpec.total_at_most(layout, 2), v)
    print(f"max Var(H_v) for v=(2,1)/sqrt5, N_max=2: {r.best_value:.4f} (certificate {r.extra['certificate']:.4f})")
    x = allocation_search(v, 3)
    print(f"optimal local allocation {x.round(3).tolist()} vs v^(2/3) {bounds.optimal_allocation(v).round(3).tolist()}")


if __name__ == "__main__":
    main()
