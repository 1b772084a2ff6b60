"""Small versions of the simulation studies: tau* curve and a power comparison."""
from signcov.simulate import BivariateNormal, DiscreteGrid, GridPattern, power_study, tau_star_curve

for pt in tau_star_curve([0.0, 0.3, 0.6, 0.9], n=100, reps=100, seed=1):
    print(f"rho {pt.rho:.1f}: mean t* {pt.mean_tstar:.4f} +- {pt.se:.4f}")

res = power_study(BivariateNormal, [0.0, 0.2, 0.4], n=60, reps=300, alpha=0.05, seed=2)
for pt in res.points:
    print(f"normal rho {pt.level:.1f}: " + "  ".join(f"{k} {v:.3f}" for k, v in pt.power.items()))

res = power_study(lambda p: DiscreteGrid(GridPattern.LSHAPE, p), [0.0, 0.5, 1.0], n=60, reps=300, alpha=0.05, seed=3)
for pt in res.points:
    print(f"L-shape p {pt.level:.1f}: " + "  ".join(f"{k} {v:.3f}" for k, v in pt.power.items()))
