# %% [markdown]
# # Coefficients versus gradients on two toy detectors
#
# Both models score an input with temperature-like feature ``T`` in [0, 10]
# and ``H`` in [0, 1]. The step model jumps by ``c1`` once ``T`` passes a
# threshold; the smooth model runs the same combination through a sigmoid.

# %%
from xai_audit.explain import toy_alignment_demo
from xai_audit.reports import to_markdown

report = toy_alignment_demo(c1=0.9, c2=0.1, threshold=7.0)
print(to_markdown(report))

# %% [markdown]
# The coefficients always name ``T``. For the step model the derivative with
# respect to ``T`` is zero almost everywhere, so a gradient-based attribution
# names ``H`` instead. Two honest methods disagree about the same model.

# %%
for c1 in (0.2, 0.9, 5.0):
    r = toy_alignment_demo(c1=c1, c2=0.1, threshold=7.0, resolution=101)
    print(c1, {k: (v.coefficient_top, v.gradient_top) for k, v in r.variants.items()})
