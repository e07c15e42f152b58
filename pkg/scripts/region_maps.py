"""Steady-state region maps over (rho, beta) at alpha = 0 and alpha = 0.3."""
import numpy as np

from _common import out_dir_arg, write_csv, write_json
from riotwave.equilibria import (default_workers, extract_boundaries, normalized_params,
                                 sweep_bifurcation)


def main():
    out = out_dir_arg(__doc__, "results/region_maps")
    rho = np.linspace(0.2, 20.0, 60)
    beta = np.geomspace(0.1, 40.0, 60)
    for alpha in (0.0, 0.3):
        bmap = sweep_bifurcation(rho, beta, normalized_params(1.0, 1.0, alpha=alpha),
                                 workers=default_workers())
        tag = f"alpha{alpha:g}".replace(".", "p")
        rows = [(r, b, lab.region if lab else "Failed", lab.n_states if lab else 0)
                for b, row in zip(beta, bmap.labels) for r, lab in zip(rho, row)]
        write_csv(out / f"regions_{tag}.csv", ["rho", "beta", "region", "n_states"], rows)
        write_json(out / f"boundaries_{tag}.json", extract_boundaries(bmap))
        print(tag, sorted(map(str, bmap.regions_present())), "failures:", len(bmap.failures))


if __name__ == "__main__":
    main()
