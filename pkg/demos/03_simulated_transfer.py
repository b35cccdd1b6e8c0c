# # The packet-level simulator on the same scenario

# %%

from hetpath import ModelConfig, Scenario, mbps, ms, model_throughput
from hetpath.simulator import arrival_log, run_sim

scenario = Scenario.build([mbps(2), mbps(1)], [ms(10), ms(40)], ModelConfig(transfer_bytes=50_000))
report = run_sim(scenario, log_arrivals=True)

print("simulated:", report.throughput_bps / 1e3, "kbit/s")
print("modeled:  ", model_throughput(scenario) / 1e3, "kbit/s")
print("out-of-order arrivals:", report.out_of_order_arrivals)

# %% [markdown]
# First arrivals.  Odd segments ride the long link and show up late.

# %%

for a in arrival_log(report)[:12]:
    print(f"{a.time * 1e3:8.3f} ms  segment {a.segment:3d}  link {a.link}")

# %% [markdown]
# Turning on fast retransmit lets the duplicate ACKs caused by reordering
# trigger recoveries the transfer never needed.

# %%

fr = run_sim(scenario, fast_retransmit=True)
print("with fast retransmit:", fr.throughput_bps / 1e3, "kbit/s,", fr.retransmissions, "retransmissions,",
      fr.spurious_retransmissions, "duplicates delivered")
