"""Run the full verification suite and show the mutation-sanity guard.

Every check compares a closed form against an independent route; scaling
any closed form by 1.05 must break its check, which protects against
vacuously green comparisons.
"""

from kronopt import verify

print("== full suite ==")
reports = verify.run_suite("all", seed=0)
print(verify.summarize(reports))

print("\n== mutation sanity: every perturbed closed form must fail ==")
perturbed = list(verify.propositions_suite(seed=0, perturb=1.05))
perturbed += list(verify.table1_suite(seed=0, perturb=1.05))
for r in perturbed:
    print(f"  {r.check_name:28s} perturbed -> {'FAIL (good)' if not r.passed else 'still passing (bad!)'}")

print("\n== machine-readable form ==")
print(verify.reports_to_jsonl(reports[:2]), end="")
