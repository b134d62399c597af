"""Where does the default RK4 step stop being trustworthy for each preset?

For every preset this prints the stability ratio at the initial state, the
time the default run crosses the RK4 stability bound, where it stops, and how
far a finer step gets before the threshold. The adaptive run is optional
because it is slow (hundreds of thousands of steps for preset A).
"""
import argparse

from sidyn.integrator import SolverConfig, integrate, stability_onset, stability_ratio
from sidyn.scenario import PRESETS


def survey(key, t1, fine_steps, adaptive):
    sc = PRESETS[key]
    p = sc.params
    print(f"[{key}] ratio at x0 (h=1e-3): {stability_ratio(p, sc.x0, 1e-3):.4g}")
    for h in (1e-3, *fine_steps):
        tr = integrate(p, sc.x0, 0.0, t1, SolverConfig(step=h))
        onset = stability_onset(p, tr, h)
        onset_txt = "never" if onset is None else f"{onset:.4g}"
        print(f"  h={h:g}: {tr.status} at t={tr.t[-1]:.4g}, unstable from t={onset_txt}, "
              f"S={tr.s[-1]:.5g}, I={tr.i[-1]:.5g}")
    if adaptive:
        tr = integrate(p, sc.x0, 0.0, t1, SolverConfig(method="rk4-adaptive", step=1e-4))
        print(f"  adaptive: {tr.status} at t={tr.t[-1]:.4g} after {len(tr) - 1} steps, "
              f"S={tr.s[-1]:.5g}, I={tr.i[-1]:.5g}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--presets", default="ABC")
    ap.add_argument("--t1", type=float, default=1.0)
    ap.add_argument("--fine", type=float, nargs="*", default=[1e-4, 1e-5])
    ap.add_argument("--adaptive", action="store_true")
    args = ap.parse_args()
    for key in args.presets.upper():
        survey(key, args.t1, args.fine, args.adaptive)


if __name__ == "__main__":
    main()
