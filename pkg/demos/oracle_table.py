"""All eight methods on the archived two-request instance, next to the exhaustive optimum.

Run: python demos/oracle_table.py
"""

from dqc_sched.bench import comparison_csv, table2_experiment

rows = table2_experiment()
for r in rows:
    ends = ["-" if r[k] is None else str(r[k]) for k in ("completion_1", "completion_2")]
    print(f"{r['method']:<30} {ends[0]:>6} {ends[1]:>6}  served {r['served']}")
print()
print(comparison_csv(rows), end="")
