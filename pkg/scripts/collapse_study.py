"""How well do W and U collapse onto a single curve of gamma?

Compares the default controls (O = Q = sx, sz) with controls chosen per point
to maximise the explained variance at J = +1 and -1.  ``--fine`` adds a
61 x 100 grid (several minutes, optimal controls cost ~20 ms per point).
"""

import argparse

from revunc.sweep import SweepSpec, collapse_spread, compute_rows


def spreads(j, n_d, n_t, controls, mode):
    rows = compute_rows(SweepSpec(j_values=(j, j, 1), d_values=(0.0, 3.0, n_d), t_values=(0.2, 5.0, n_t),
                                  o=controls, bound_mode=mode))
    g = [r.gamma for r in rows]
    return collapse_spread(g, [r.w_value for r in rows]), collapse_spread(g, [r.u_value for r in rows])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fine", action="store_true")
    args = ap.parse_args()
    grids = ((31, 50), (61, 100)) if args.fine else ((31, 50),)
    print(f"{'J':>4} {'grid':>8} {'controls':>9} {'mode':>5} {'W spread':>9} {'U spread':>9}")
    for j in (1.0, -1.0):
        for n_d, n_t in grids:
            for label, controls in (("default", None), ("optimal", ("optimal", "optimal"))):
                for mode in ("eq10", "eq9"):
                    w, u = spreads(j, n_d, n_t, controls, mode)
                    print(f"{j:4.0f} {f'{n_d}x{n_t}':>8} {label:>9} {mode:>5} {w:9.4f} {u:9.4f}", flush=True)


if __name__ == "__main__":
    main()
