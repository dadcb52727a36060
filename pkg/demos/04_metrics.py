"""
Reading a metrics report
========================

Precision, recall, fall-out and F1 from a confusion matrix, including the
cases where a denominator is zero and the metric is reported as undefined.
"""

# %%
import json

import numpy as np

from didkit.metrics import metrics_from_counts, multiclass_report, report_csv, report_json

print(metrics_from_counts(tp=90, fp=10, tn=95, fn=5))

# %%
# No positive predictions: precision (and so F1) is undefined, not zero.
print(metrics_from_counts(tp=0, fp=0, tn=50, fn=3))

# %%
# Multiclass: rows are true classes.  The "scan" class never occurs and
# is never predicted, so it is listed as undefined.
cm = np.array([[480, 12, 0, 8],
               [5, 95, 0, 0],
               [0, 0, 0, 0],
               [2, 0, 0, 48]])
rep = multiclass_report(cm, ["benign", "web", "scan", "dos"])
for pc in rep["per_class"]:
    print(pc)
print("macro", rep["macro"])
print("undefined", rep["undefined_classes"])

# %%
doc = report_json(cm, ["benign", "web", "scan", "dos"])
print(json.dumps(doc["binary"], indent=1))
print(report_csv(doc))
