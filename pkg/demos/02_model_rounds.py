# # Walking the analytical model round by round

# %%

from hetpath import ModelConfig, Scenario, mbps, ms, run_model

# Two links: a fast short one and a slower long one.
scenario = Scenario.build([mbps(2), mbps(1)], [ms(10), ms(40)], ModelConfig(transfer_bytes=50_000))
report = run_model(scenario)

# %% [markdown]
# Each round releases C segments and lasts E(T) seconds on average.  The
# next batch is the expected number acknowledged plus the window growth.

# %%

for rec in report.rounds[:8]:
    ctx, out = rec.context, rec.outcome
    print(f"round {ctx.round_index:3d}  w={ctx.window:6.2f}  C={ctx.batch_size_real:5.2f}  "
          f"E(T)={out.expected_T * 1e3:7.3f} ms  E(A)={out.expected_A_next:.3f}")

# %%

print("rounds:", report.n_rounds)
print("total time:", report.total_time_s, "s")
print("throughput:", report.throughput_bps / 1e3, "kbit/s")

# %% [markdown]
# The batch settles near three segments: with an ACK every two in-order
# segments, a batch of three is acknowledged two segments at a time on
# average, and the growth term adds the third back.
