# %% [markdown]
# # Four importance methods on one synthetic dataset
#
# Three informative columns, five noise columns, 20% benign traffic.

# %%
from xai_audit.audit import RunConfig, run_pipeline
from xai_audit.data import SyntheticSpec, generate_synthetic, profile_imbalance, split
from xai_audit.models import fit_dt, rules
from xai_audit.tree import TreeParams

d = generate_synthetic(SyntheticSpec(n_rows=5000, n_informative=3, n_noise=5,
                                     positive_fraction=0.8), seed=1)
print(profile_imbalance(d))

# %%
for model, method in [("dt", "DT_FI"), ("dt", "PI"), ("ridge", "RIDGE_FC"),
                      ("ridge", "SHAP_GLOBAL"), ("mlp", "PI")]:
    r = run_pipeline(d, RunConfig(model=model, method=method, seed=3, shap_instances=30,
                                  pi_repeats=5, learning_rate=0.01, epochs=10))
    scores = [round(float(s), 3) for s in r.importance.scores]
    print(f"{model:>5}/{method:<11} MCC={r.metrics.mcc:.3f} top={r.top.features}")
    print("      ", dict(zip(d.feature_names, scores)))

# %% [markdown]
# A shallow tree can be read directly as rules.

# %%
train, _ = split(d, 0.15, seed=0)
for rule in rules(fit_dt(train, TreeParams(max_depth=2))):
    print(rule)
