# %% [markdown]
# # Pruning near-duplicate columns
#
# Flow exports often carry pairs of counters that move together. Attribution
# methods split credit between such twins arbitrarily, so we drop them first.

# %%
from xai_audit.data import SyntheticSpec, generate_synthetic, pearson_matrix, prune_correlated

d = generate_synthetic(SyntheticSpec(n_rows=3000, n_informative=2, n_noise=3,
                                     n_correlated_pairs=2), seed=4)
cm = pearson_matrix(d)
for a, b, r in cm.strong_pairs(0.95):
    print(f"{a:>9} ~ {b:<9} r = {r:+.4f}")

# %%
both = prune_correlated(d, 0.95)
one = prune_correlated(d, 0.95, keep_one=True)
print("drop both members:", both.dataset.feature_names)
print("keep one member:  ", one.dataset.feature_names)
