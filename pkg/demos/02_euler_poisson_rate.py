"""How fast does Euler-Poisson approach drift-diffusion as eps -> 0?

Each run starts from the same limit density with zero velocity, integrates
to t = 1, and measures the squared H^2 error against the drift-diffusion
trajectory. The fitted log-log slope should sit near 2.
"""

from emrelax import ExperimentConfig, run_sweep

cfg = ExperimentConfig(system="euler_poisson", dim=1, points=128, gamma=1.0, delta=1e-2,
                       epsilon_list=[0.4, 0.2, 0.1, 0.05], velocity="rest", bootstrap=500)
report = run_sweep(cfg)
print(report.csv_text())
print(report.rate_text())

# Starting on the limit velocity instead removes the initial layer and the
# error decays much faster than eps^2.
fast = run_sweep(ExperimentConfig(**{**cfg.to_dict(), "velocity": "limit"}))
print("limit-velocity data, E_T slope:", round(fast.fits["E_T"]["slope"], 2))
