"""Time traces three ways: reduced model, dense reference, leapfrog twin.

The line-1d template keeps its absorbing layers gentle so the stabilized
evolution tracks the open line, and its window ends before any wall echo
can reach a receiver. That makes an enlarged-domain leapfrog run (padded so
far that reflections never arrive, no absorbing layer at all) a fair
third opinion: it shares no code path with the spectral evaluation.
"""

import numpy as np

from wavemor import run_timedomain, template_scenario

report = run_timedomain(template_scenario("line-1d"))
responses = dict(report.responses)

check = report.checks[0]
mark = "ok " if check["passed"] else "BAD"
print(f"[{mark}] {check['name']}: {check['observed']:.2e} "
      f"(tol {check['tolerance']:g}, window up to t = {check['window'][1]:g})")

lf = responses["leapfrog-time"]
t_echo = check["window"][1]
keep = lf.samples <= t_echo
print("\ntrace error against the leapfrog twin, before the first echo")
print("  model              rel L2")
for name, resp in report.responses:
    if not name.endswith("-trace"):
        continue
    diff = np.linalg.norm(resp.values[keep] - lf.values[keep])
    print(f"  {name:18} {diff / np.linalg.norm(lf.values[keep]):.3e}")

peak = np.max(np.abs(lf.values))
arrival = lf.samples[np.argmax(np.abs(lf.values[:, 0]) > 0.01 * peak)]
print(f"\nfirst arrival at receiver {lf.receivers[0]}: t = {arrival:.1f} "
      f"(source-receiver distance 40, unit speed, wavelet onset ~ 50)")
