# # Throughput against link asymmetry

# %%

from hetpath import kbps, ms
from hetpath.evaluation import crossover_threshold, optimal_link_count, sweep_lines, sweep_surface

# %% [markdown]
# Surface: four links, minimum delay 5 ms, minimum bandwidth 100 kbit/s.

# %%

grid = sweep_surface(link_counts=(4,), steps=4)
for a in grid.delay_asyms:
    row = [grid.model[(4, ms(5), a, kbps(100), b)] / 1e3 for b in grid.bw_asyms]
    print(f"{a * 1e3:5.1f} ms |", "  ".join(f"{v:7.1f}" for v in row))

# %% [markdown]
# Lines: equal 100 kbit/s links, delay asymmetry 10 to 90 ms.

# %%

lines = sweep_lines(steps=9)
for d in lines.d_mins:
    x = crossover_threshold(lines, 4, 1, d)
    print(f"d_min={d * 1e3:g} ms  4 vs 1 link crossover:", "none" if x is None else f"{x * 1e3:.1f} ms")

# %%

for asym in (0.0, ms(30), ms(200)):
    print(f"asymmetry {asym * 1e3:g} ms -> best link count", optimal_link_count(ms(20), asym, max_links=4))
