# # How often does a round arrive out of order?
#
# Segments of one round are striped over several links, so they reach the
# receiver in some shuffled order.  If every order is equally likely, two
# small distributions describe what the closing ACK covers.

# %%

from hetpath.reorder_prob import (
    brute_force_q_distribution,
    m_distribution,
    q_distribution,
    q_distribution_three_branch,
)

# %% [markdown]
# When segment 1 lands first, the receiver keeps counting in-order segments
# until the delayed-ACK count is reached.  With a batch of 6 and an ACK every
# 2 segments:

# %%

d = m_distribution(6, 2)
print("P(m=1) =", d.below[0])
print("P(m>=2) =", d.top)
print("expected segments acknowledged:", d.expected_acked())

# %% [markdown]
# When some other segment lands first, the ACK fires as soon as segment 1
# fills the gap and covers everything already buffered in sequence.

# %%

q = q_distribution(6)
for k, p in q.as_dict().items():
    print(f"q={k}: {p:.4f}")
print("E(q) =", q.expected())

# %% [markdown]
# The closed form agrees with listing all 720 orders:

# %%

brute = brute_force_q_distribution(6)
print(max(abs(a - b) for a, b in zip(q.probs, brute.probs)))

# %% [markdown]
# A three-branch variant of the same formula loses mass.  Small batches miss
# only the q=C-1 term; larger ones drift further.

# %%

for c in range(3, 9):
    lost = 1 - q_distribution_three_branch(c).total
    print(c, round(lost, 4), round(q_distribution(c)[c - 1], 4))
