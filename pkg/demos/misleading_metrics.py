# %% [markdown]
# # When high accuracy hides a weak detector
#
# A confusion matrix with roughly a thousand times more benign rows than
# attacks. Accuracy looks excellent; the miss rate on attacks tells another story.

# %%
from xai_audit.metrics import ConfusionMatrix, false_positive_rate_benign, mcc_guarantee_probe, score
from xai_audit.reports import metric_table

cm = ConfusionMatrix(tp=504, fn=131, fp=27, tn=100508)
print(metric_table({"attack positive": score(cm), "benign positive": score(cm.swapped())}))
print(f"share of attacks missed: {false_positive_rate_benign(cm):.3f}")

# %% [markdown]
# Accuracy and MCC do not depend on which class is called positive, while
# precision, recall and F1 swing wildly. MCC at 0.87 is the honest summary.
#
# ## Does a high MCC guarantee everything else is high?
#
# Search small matrices against a large benign count.

# %%
found = mcc_guarantee_probe(0.95, max_small=20, tn_ladder=(10**4, 10**6))
print(f"{len(found)} matrices pass MCC >= 0.95 yet fail another score")
for c in found[:5]:
    m = c.matrix
    print(f"  tp={m.tp:>2} fn={m.fn:>2} fp={m.fp:>2} tn={m.tn:>7}  "
          f"MCC={c.metrics.mcc:.4f}  failing={sorted(c.failing)}")
